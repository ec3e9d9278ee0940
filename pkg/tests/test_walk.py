"""Walk dynamics: step probabilities, bookkeeping, stopping times."""

import numpy as np
import pytest

from tsawlab import kernels, oracle, stats, walk
from tsawlab.walk import StopSpec, WalkParams


def make_state(lam=0.5, seed=11, stream=0, **kw):
    return walk.WalkState(WalkParams(lam, seed), stream=stream, **kw)


def test_params_validation():
    with pytest.raises(ValueError):
        WalkParams(0.0)
    with pytest.raises(ValueError):
        WalkParams(1.0)
    p = WalkParams(0.5)
    assert abs(p.beta - np.log(2.0)) < 1e-15


def test_fresh_step_probability_is_half():
    st = make_state()
    assert st.step_probability() == 0.5


def test_step_probability_after_forced_right_step():
    # force one right step by stubbing the uniform; then
    # P(next step right) = 1/(1 + lam) since w = 1
    lam = 0.5
    st = make_state(lam=lam, impl="python")

    class ForcedRight:
        def next_double(self):
            return 0.0

    st._w._rng = ForcedRight()
    st.step()
    assert (st.x, st.n) == (1, 1)
    assert st.site_eplus(0) == 1 and st.site_eminus(0) == 0
    assert abs(st.step_probability() - 1.0 / (1.0 + lam)) < 1e-15


def test_step_probability_symmetric_when_balanced():
    # whenever the two undirected edge counts agree, p = 1/2
    st = make_state(seed=3, impl="python")
    st.step(101)
    x = st.x
    w = (st.site_eplus(x - 1) + st.site_eminus(x)
         - st.site_eplus(x) - st.site_eminus(x + 1))
    if w == 0:
        assert st.step_probability() == 0.5
    # and the closed form matches the helper for every w
    for ww in range(-70, 71):
        assert abs(walk.right_step_probability(0.5, ww)
                   - 1.0 / (1.0 + 0.5 ** ww)) < 1e-300


def test_first_steps_are_fair():
    xs, _, _ = kernels.endpoint_batch(0.5, 1, 10 ** 6, 17, 0)
    frac_right = float((xs == 1).mean())
    assert abs(frac_right - 0.5) < 0.002


def test_invariants_hold_along_a_run():
    st = make_state(seed=5)
    for _ in range(5):
        st.step(2000)
        st.check_invariants()


def test_site_local_time_matches_trajectory_recount():
    st = make_state(seed=7, record_path=True, budget=4000)
    st.step(4000)
    pos = st.positions()
    lo, hi = st.visited_range
    for k in range(lo, hi + 1):
        assert st.site_local_time(k) == int(np.count_nonzero(pos == k))
    assert st.site_local_time(0) >= 1  # X_0 counted inclusively
    assert st.site_local_time(hi + 5) == 0


def test_run_until_tau_trivial_cases():
    res = walk.run_until_tau(WalkParams(0.5, 1), StopSpec(0, 0), stream=0)
    assert res.status == walk.STATUS_OK
    assert res.snapshots[0].n == 0
    # tau_{1,0} = 1 iff the first step goes right: P = 1/2
    taus = kernels.tau_capped_batch(0.5, 1, 0, 63, 200_000, 19, 0)
    assert abs(float((taus == 1).mean()) - 0.5) < 0.004


def test_run_until_tau_postcondition():
    spec = StopSpec(k=2, m=3)
    res = walk.run_until_tau(WalkParams(0.5, 7), spec, stream=4, budget=10 ** 7)
    assert res.status == walk.STATUS_OK
    snap = res.snapshots[0]
    assert snap.x == spec.k
    assert snap.site_L(spec.k) == spec.m + 1
    assert res.walk.site_local_time(spec.k) == spec.m + 1
    assert snap.n == res.walk.n


def test_tau_law_matches_enumeration():
    lam, cap, reps = 0.5, 15, 300_000
    pe = oracle.enumerate_paths(lam, cap)
    exact = pe.law_of_tau_capped(1, 0, cap)
    taus = kernels.tau_capped_batch(lam, 1, 0, cap, reps, 23, 0)
    tv = stats.empirical_tv_to_law(taus, exact)
    assert tv < 0.01


def test_budget_exhaustion_is_reported():
    res = walk.run_until_multi_tau(WalkParams(0.5, 1), [StopSpec(10 ** 6, 0)],
                                   stream=1, budget=10_000)
    assert res.status == walk.STATUS_BUDGET
    assert res.snapshots == []
    assert res.final_n == 10_000


def test_multi_tau_snapshots_are_ordered_and_monotone():
    params = WalkParams(0.5, 31)
    specs = [StopSpec(2, 1), StopSpec(2, 5), StopSpec(-1, 0)]
    res = walk.run_until_multi_tau(params, specs, stream=2, budget=10 ** 7)
    assert res.status == walk.STATUS_OK
    ns = [s.n for s in res.snapshots]
    assert ns == sorted(ns)
    # local times grow pointwise between nested stopping times
    a, b = res.snapshot_for(StopSpec(2, 1)), res.snapshot_for(StopSpec(2, 5))
    for k in range(b.offset, b.offset + len(b.eplus)):
        assert a.site_L(k) <= b.site_L(k)
    # snapshot extrema agree with the per-spec segment combination
    first = res.snapshots[0]
    assert first.run_min == first.seg_min and first.run_max == first.seg_max


def test_single_spec_equals_multi_tau_degenerate():
    params = WalkParams(0.5, 47)
    a = walk.run_until_multi_tau(params, [StopSpec(3, 2)], stream=9, budget=10 ** 6)
    b = walk.run_until_multi_tau(params, [StopSpec(3, 2), StopSpec(10 ** 5, 0)],
                                 stream=9, budget=10 ** 6)
    assert a.snapshots[0].n == b.snapshots[0].n
    assert a.snapshots[0].x == b.snapshots[0].x


def test_csv_dumps(tmp_path):
    st = make_state(seed=3, record_path=True, budget=500)
    st.step(500)
    p1 = tmp_path / "profile.csv"
    p2 = tmp_path / "path.csv"
    walk.write_profile_csv(p1, st)
    walk.write_path_csv(p2, st)
    head = p1.read_text().splitlines()
    assert head[0] == "k,eplus,eminus,L"
    total = sum(int(r.split(",")[3]) for r in head[1:])
    assert total == st.n + 1
    rows = p2.read_text().splitlines()
    assert rows[0] == "n,x" and len(rows) == 502


def test_urn_walk_structural_conventions():
    # initial discrepancies: 0 at sites >= 0 (origin uses its own rule),
    # 1 at sites <= -1; one draw moves the site's discrepancy by +-1
    u = kernels.make_urn_walk(0.5, 3, 0, impl="python")
    assert u.site_discrepancy(0) == 0
    assert u.site_discrepancy(4) == 0
    assert u.site_discrepancy(-1) == 1
    x0 = u.x
    u.step_many(1)
    moved = u.x - x0
    assert u.site_discrepancy(0) == (1 if moved == 1 else -1)
    # first step from the origin chain is fair
    xs, _ = kernels.urn_endpoint_batch(0.5, 1, 100_000, 7, 0)
    assert abs((xs == 1).mean() - 0.5) < 0.005


def test_law_of_position_matches_enumeration_small():
    lam, n, reps = 0.5, 12, 200_000
    pe = oracle.enumerate_paths(lam, n)
    xs, l0, _ = kernels.endpoint_batch(lam, n, reps, 5, 0)
    tv = stats.empirical_tv_to_law(xs, pe.law_of_position())
    assert tv < 0.01
    tv_joint = stats.empirical_tv_to_law(
        xs * 64 + l0, pe.law_of_position_and_local_time(n, 0))
    assert tv_joint < 0.01


def test_position_law_symmetry_empirical():
    xs, _, _ = kernels.endpoint_batch(0.5, 12, 10 ** 6, 29, 0)
    vals, counts = np.unique(xs, return_counts=True)
    emp = dict(zip(vals.tolist(), counts.tolist()))
    n = len(xs)
    for j in (2, 4, 6, 8):
        p, q = emp.get(j, 0) / n, emp.get(-j, 0) / n
        # multinomial counts: Var(p - q) = (p(1-p) + q(1-q) + 2pq) / n
        se = np.sqrt((p * (1 - p) + q * (1 - q) + 2 * p * q) / n) + 1e-12
        assert abs(p - q) < 3 * se + 1e-9
