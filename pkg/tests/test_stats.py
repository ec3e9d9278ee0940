"""Comparison toolkit: KS, total variation, exponent fits."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsawlab import stats
from tsawlab.oracle import ExactLaw
from tsawlab.rng import philox_generator


def test_ks_identical_samples():
    a = np.arange(100, dtype=float)
    d, p = stats.ks_two_sample(a, a.copy())
    assert d == 0.0 and p == 1.0


def test_ks_disjoint_supports():
    d, p = stats.ks_two_sample(np.arange(50), np.arange(100, 150))
    assert d == 1.0 and p < 1e-10


def test_ks_empty_raises():
    with pytest.raises(ValueError):
        stats.ks_two_sample([], [1.0])


def test_ks_self_calibration():
    # same-law splits rarely fall below the acceptance floor
    hits = 0
    for rep in range(100):
        rng = philox_generator(99, 3, rep)
        a = rng.standard_normal(10 ** 4)
        b = rng.standard_normal(10 ** 4)
        _, p = stats.ks_two_sample(a, b)
        hits += p > 0.001
    assert hits >= 99


def test_ks_invariant_under_monotone_transform():
    rng = np.random.default_rng(5)
    a = rng.exponential(size=500)
    b = rng.exponential(size=700) * 1.3
    d1, _ = stats.ks_two_sample(a, b)
    d2, _ = stats.ks_two_sample(np.log(a), np.log(b))
    assert abs(d1 - d2) < 1e-12


def law_strategy(max_support=6):
    weights = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=max_support)

    @st.composite
    def build(draw):
        w = np.array(draw(weights))
        outs = np.arange(len(w)) - len(w) // 2
        return ExactLaw(outs, w / w.sum())

    return build()


@settings(max_examples=60, deadline=None)
@given(law_strategy(), law_strategy(), law_strategy())
def test_tv_is_a_metric(p, q, r):
    d_pq = stats.tv_distance(p, q)
    assert 0.0 <= d_pq <= 1.0
    assert abs(stats.tv_distance(p, p)) < 1e-15
    assert abs(d_pq - stats.tv_distance(q, p)) < 1e-15
    assert d_pq <= stats.tv_distance(p, r) + stats.tv_distance(r, q) + 1e-12


def test_tv_hand_values():
    delta0 = ExactLaw(np.array([0]), np.array([1.0]))
    unif = ExactLaw(np.array([0, 1]), np.array([0.5, 0.5]))
    assert stats.tv_distance(delta0, delta0) == 0.0
    assert stats.tv_distance(delta0, unif) == 0.5
    other = ExactLaw(np.array([5]), np.array([1.0]))
    assert stats.tv_distance(delta0, other) == 1.0


def test_exponent_fit_deterministic_powerlaw():
    ms = [10 ** e for e in (3, 3.5, 4, 4.5, 5)]
    fit = stats.exponent_fit(ms, [np.full(50, m ** (2 / 3)) for m in ms])
    assert abs(fit.slope - 2 / 3) < 1e-12
    assert fit.r2 > 1 - 1e-12


def test_exponent_fit_simple_random_walk_control():
    ms = [1000, 3162, 10000, 31623, 100000]
    samples = []
    for i, m in enumerate(ms):
        rng = philox_generator(7, 11, i)
        steps = rng.choice([-1, 1], size=(4000, 1))  # scale-free shortcut:
        # |X_m| ~ sqrt(m) |Z| for the simple walk; sample directly
        z = rng.standard_normal(4000)
        samples.append(np.abs(z) * np.sqrt(m))
    fit = stats.exponent_fit(ms, samples)
    assert abs(fit.slope - 0.5) < 0.03
    assert fit.r2 > 0.99


def test_exponent_fit_guards():
    with pytest.raises(ValueError):
        stats.exponent_fit([10, 20, 40], [np.ones(3)] * 3)
    with pytest.raises(ValueError):
        stats.exponent_fit([1e3, 1e4, 1e5, 1e6],
                           [np.zeros(5)] * 4)


def test_ecdf_basic():
    f = stats.ECDF(np.array([1.0, 2.0, 2.0, 3.0]))
    assert f(0.5) == 0.0
    assert f(2.0) == 0.75
    assert f(10.0) == 1.0
    vals = f(np.array([1.0, 2.5]))
    assert np.allclose(vals, [0.25, 0.75])


def test_censoring_helpers():
    a = np.array([0.5, 2.0, np.nan, np.inf])
    c = stats.censor_at(a, 1.0)
    assert np.array_equal(c, [0.5, 1.0, 1.0, 1.0])
    assert stats.censored_mean_diff(a, a, 1.0) == 0.0


def test_bonferroni():
    assert stats.bonferroni_pass([0.5, 0.9, 0.2], 0.001)
    assert not stats.bonferroni_pass([0.5, 0.0002, 0.9], 0.001)
    # adjusted: 3 * 0.0005 = 0.0015 > 0.001 passes
    assert stats.bonferroni_pass([0.0005, 0.5, 0.5], 0.001)
