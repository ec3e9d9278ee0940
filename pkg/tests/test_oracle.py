"""Path enumeration and the joint urn DP against hand-computed laws."""

import numpy as np
import pytest

from tsawlab import oracle, urn


def test_one_step_law():
    pe = oracle.enumerate_paths(0.5, 1)
    assert pe.law_of_position().as_dict() == {-1: 0.5, 1: 0.5}


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_two_step_law_hand_expansion(lam):
    pe = oracle.enumerate_paths(lam, 2)
    law = pe.law_of_position().as_dict()
    assert abs(law[2] - 0.5 / (1 + lam)) < 1e-14
    assert abs(law[-2] - 0.5 / (1 + lam)) < 1e-14
    assert abs(law[0] - lam / (1 + lam)) < 1e-14


def test_total_probability_and_symmetry():
    pe = oracle.enumerate_paths(0.7, 10)
    assert abs(pe.prob.sum() - 1.0) < 1e-12
    law = pe.law_of_position().as_dict()
    for k in law:
        assert abs(law[k] - law[-k]) < 1e-13


def test_size_cap():
    with pytest.raises(ValueError):
        oracle.enumerate_paths(0.5, 17)


def test_local_time_consistency():
    pe = oracle.enumerate_paths(0.5, 6)
    # sum over sites of L(6, k) = 7 on every path
    total = sum(pe.local_time(6, k) for k in range(-7, 8))
    assert np.all(total == 7)
    # edge decomposition: L = eplus + eminus + [X_t = k]
    for k in (-1, 0, 2):
        up, down = pe.edge_counts(6, k)
        L = up + down + (pe.traj[:, 6] == k)
        assert np.array_equal(L, pe.local_time(6, k))


def test_tau_definition():
    pe = oracle.enumerate_paths(0.5, 8)
    taus = pe.tau(0, 0)
    assert np.all(taus == 0)  # origin visited at time 0
    taus1 = pe.tau(1, 0)
    hit = taus1 <= 8
    assert np.all(pe.traj[hit, :][np.arange(hit.sum()), taus1[hit]] == 1)
    law = pe.law_of_tau_capped(1, 0, 8)
    assert abs(law.prob_of(1) - 0.5) < 1e-14


def test_exact_law_guards():
    with pytest.raises(ValueError):
        oracle.ExactLaw(np.array([0, 1]), np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        oracle.ExactLaw(np.array([0]), np.array([-0.2]))


def test_joint_dbeta_marginals_match_single_level():
    lam, i0, M = 0.5, 1, 10
    states, joint, defect = oracle.joint_dbeta_dp(lam, i0, (3, 7), M)
    assert defect < 1e-12
    d3 = urn.exact_dbeta_dist(lam, "interior", i0, 3, M=M)
    d7 = urn.exact_dbeta_dist(lam, "interior", i0, 7, M=M)
    assert np.allclose(joint.sum(axis=1), d3.probs, atol=1e-12)
    assert np.allclose(joint.sum(axis=0), d7.probs, atol=1e-12)


def test_joint_dbeta_degenerate_diagonal():
    states, joint, _ = oracle.joint_dbeta_dp(0.5, 0, (4, 4), 10)
    off = joint - np.diag(np.diag(joint))
    assert np.all(off == 0.0)


def test_joint_tv_to_product_decreases():
    lam, M = 0.5, 10
    laws = urn.stationary_laws(lam, M)
    pi = laws.pi
    tvs = []
    for (n1, n2) in [(2, 4), (4, 8), (8, 16)]:
        _, joint, _ = oracle.joint_dbeta_dp(lam, 0, (n1, n2), M)
        prod = np.outer(pi, pi)
        tvs.append(0.5 * np.abs(joint - prod).sum())
    assert tvs[0] > tvs[1] > tvs[2]
