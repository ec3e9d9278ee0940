"""Urn discrepancy chains: exact laws, mixing, tails, samplers."""

import numpy as np
import pytest

from tsawlab import stats, urn


def test_transition_probabilities():
    lam = 0.5
    assert urn.urn_transition_prob("origin", 0, lam) == 0.5
    assert abs(urn.urn_transition_prob("interior", 0, lam) - 1 / (1 + lam)) < 1e-15
    # monotone decreasing to 0 as the discrepancy grows
    ps = [urn.urn_transition_prob("interior", i, lam) for i in range(0, 40)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert ps[-1] < 1e-20
    assert urn.urn_transition_prob("interior", -2000, lam) == 1.0
    with pytest.raises(ValueError):
        urn.urn_transition_prob("sideways", 0, lam)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_stationary_laws_normalized_and_symmetric(lam):
    laws = urn.stationary_laws(lam)
    for v in (laws.pi, laws.rho, laws.pi_tilde):
        assert abs(v.sum() - 1.0) < 1e-12
    assert np.array_equal(laws.pi, laws.pi[::-1])
    assert urn.detailed_balance_residual(laws) < 1e-12


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_sigma2_truncation_stable(lam):
    assert abs(urn.sigma2_series(lam, 30) - urn.sigma2_series(lam, 60)) < 1e-12
    laws = urn.stationary_laws(lam)
    assert abs(laws.sigma2 - urn.sigma2_series(lam, laws.M)) < 1e-12


def test_truncation_guard():
    with pytest.raises(ValueError):
        urn.stationary_laws(0.9, M=3)


def test_exact_dbeta_point_mass_at_zero_draws():
    d = urn.exact_dbeta_dist(0.5, "interior", 2, 0)
    assert d.probs[d.states == 2] == 1.0
    assert d.mass_defect <= 1e-12


def test_exact_dbeta_mass_below_one():
    d = urn.exact_dbeta_dist(0.5, "interior", 1, 40)
    assert 1.0 - 1e-12 <= d.probs.sum() <= 1.0 + 1e-12


def test_first_blue_draw_law():
    # result = i0 - 1 + (#reds before first blue); P(no red first) = down prob
    lam, i0 = 0.5, 0
    d = urn.exact_dbeta_dist(lam, "interior", i0, 1)
    down = 1.0 - urn.urn_transition_prob("interior", i0, lam)
    assert abs(d.probs[d.states == i0 - 1] - down) < 1e-14


def test_mc_matches_dp():
    lam, i0, n = 0.5, 1, 10
    d = urn.exact_dbeta_dist(lam, "interior", i0, n)
    mc = urn.sample_dbeta(lam, "interior", i0, n, 10 ** 6, seed=5)
    emp = np.array([(mc == s).mean() for s in d.states])
    assert stats.tv_distance(emp, d.probs) < 0.01


def test_mixing_curve_reaches_stationarity():
    for lam in (0.3, 0.5, 0.7):
        curve = urn.tv_mixing_curve(lam, "interior", 1, 60)
        assert curve[60, 1] < 1e-3
        assert curve[0, 1] > 0.3  # point mass vs pi at n=0
    mc = urn.sample_dbeta(0.5, "interior", 1, 30, 10 ** 6, seed=9)
    laws = urn.stationary_laws(0.5)
    emp = np.array([(mc == s).mean() for s in laws.states])
    assert stats.tv_distance(emp, laws.pi) < 0.05


def test_empirical_mean_approaches_zero():
    means = [abs(urn.sample_dbeta(0.5, "interior", 1, n, 200_000, seed=n).mean())
             for n in (2, 10, 30)]
    assert means[-1] < 0.01
    assert means[-1] <= means[0]


def test_tail_ratio_bounds_hold():
    rep = urn.tail_ratio_check(0.5, n_max=20, y_max=10)
    assert rep.violations == 0
    assert rep.max_margin <= 1e-12
    # ratio goes to zero for large y (gaussian-type tails)
    far = [r for r in rep.rows if r[0] == "right" and r[1] == 8 and r[3] == 0]
    assert far and max(r[4] for r in far) < 1e-3


def test_left_tail_factor():
    rep = urn.tail_ratio_check(0.5, n_max=10, y_max=5)
    lam = 0.5
    left = [r for r in rep.rows if r[0] == "left" and r[1] == -5]
    assert left and all(r[4] <= lam + lam * lam + 1e-12 for r in left)


def test_gaussian_tail_domination():
    assert urn.gaussian_tail_check(0.5, n_max=20, span=8) <= 1e-9


def test_rubin_matches_dp_and_is_monotone():
    lam, m, reps = 0.5, 5, 400_000
    ps = []
    for ell in range(-3, 4):
        mc = urn.rubin_red_before_blue(lam, ell, m, reps, seed=13).mean()
        ex = urn.exact_red_before_blue(lam, ell, m)
        assert abs(mc - ex) < 0.01
        ps.append(mc)
    se = 3.0 / np.sqrt(reps)
    assert all(ps[i + 1] <= ps[i] + se for i in range(len(ps) - 1))


def test_rubin_limit_at_minus_infinity():
    assert urn.rubin_red_before_blue(0.5, -30, 1, 2000, seed=3).mean() == 1.0


def test_edge_chain_rows_approach_pi():
    lam = 0.5
    laws = urn.stationary_laws(lam)
    M = laws.M + 2
    rows = urn.edge_chain_rows(lam, 60, side="left", M=M)
    pi = urn.stationary_laws(lam, M=M).pi
    tv_small = 0.5 * np.abs(rows[1] - pi).sum()
    tv_big = 0.5 * np.abs(rows[60] - pi).sum()
    assert tv_big < 1e-12 < tv_small
    # right-side level zero is a unit increment mass at 0
    r = urn.edge_chain_rows(lam, 3, side="right", M=M)
    assert r[0][M] == 1.0 and abs(r[0].sum() - 1.0) < 1e-15


def test_maximal_coupling_gamma_never_mismatches_identical_laws():
    lam = 0.5
    laws = urn.stationary_laws(lam)
    M = laws.M + 2
    pi = urn.stationary_laws(lam, M=M).pi
    rng = np.random.default_rng(3)
    # a fabricated chain with iid-pi increments at very high level: the rows
    # there are numerically equal to pi, so the coupling never breaks
    steps = rng.choice(np.arange(-M, M + 1), p=pi, size=500)
    s = 400 + np.concatenate([[0], np.cumsum(steps)])
    rows = urn.edge_chain_rows(lam, int(s.max()) + 1, side="left", M=M)
    gamma = urn.maximal_coupling_gamma(s, rows, pi, M, rng)
    assert gamma == 501
