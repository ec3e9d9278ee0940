"""Exact ground truth at small scale.

Two oracles back every Monte Carlo module before it is trusted:

* :func:`enumerate_paths` computes the exact joint law of the first
  ``n_max`` steps of the walk by expanding all ``2**n_max`` trajectories and
  multiplying one-step probabilities.  Marginals (endpoint law, local times,
  truncated inverse local times, duality events) are derived from the
  trajectory table.
* :func:`joint_dbeta_dp` computes the exact joint law of the urn discrepancy
  observed at two different blue-draw counts, by dynamic programming on a
  truncated state space (the one-level law lives in :mod:`tsawlab.urn`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUM_STEPS = 16


@dataclass
class ExactLaw:
    """A finite law: integer outcomes with their probabilities."""

    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes)
        self.probabilities = np.asarray(self.probabilities, dtype=np.float64)
        if self.outcomes.shape[0] != self.probabilities.shape[0]:
            raise ValueError("outcomes and probabilities must align")
        if np.any(self.probabilities < -1e-15):
            raise ValueError("negative probability")
        if abs(self.probabilities.sum() - 1.0) > 1e-12:
            raise ValueError(f"law sums to {self.probabilities.sum()}, not 1")

    def as_dict(self) -> dict:
        return {int(o): float(p) for o, p in zip(self.outcomes, self.probabilities)}

    def prob_of(self, outcome: int) -> float:
        hit = self.probabilities[self.outcomes == outcome]
        return float(hit.sum())


def law_from_weights(outcomes: np.ndarray, weights: np.ndarray) -> ExactLaw:
    """Collapse repeated outcomes and drop zero-mass atoms."""
    outcomes = np.asarray(outcomes)
    order = np.argsort(outcomes, kind="stable")
    o = outcomes[order]
    w = np.asarray(weights, dtype=np.float64)[order]
    edges = np.flatnonzero(np.r_[True, o[1:] != o[:-1]])
    sums = np.add.reduceat(w, edges)
    keep = sums > 0
    return ExactLaw(o[edges][keep], sums[keep])


def empirical_law(samples: np.ndarray) -> ExactLaw:
    samples = np.asarray(samples)
    return law_from_weights(samples, np.full(len(samples), 1.0 / len(samples)))


class PathEnumeration:
    """All trajectories of the first ``n`` steps with their probabilities.

    ``traj[i, t]`` is the position of path ``i`` at time ``t``;
    ``prob[i]`` multiplies the one-step probabilities
    ``1/(1 + lam**w)`` (right) or its complement (left) along the path.
    """

    def __init__(self, lam: float, n: int):
        if not 0.0 < lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if not 1 <= n <= MAX_ENUM_STEPS:
            raise ValueError(f"n must be in [1, {MAX_ENUM_STEPS}]")
        self.lam = float(lam)
        self.n = int(n)
        self._expand()

    def _expand(self):
        n = self.n
        span = 2 * n + 3          # sites -n-1 .. n+1
        off = n + 1
        traj = np.zeros((1, n + 1), dtype=np.int8)
        prob = np.ones(1, dtype=np.float64)
        eplus = np.zeros((1, span), dtype=np.int8)
        eminus = np.zeros((1, span), dtype=np.int8)
        pos = np.zeros(1, dtype=np.int64)
        rows = np.arange(1)
        for t in range(n):
            rows = np.arange(len(pos))
            w = (eplus[rows, pos + off - 1] + eminus[rows, pos + off]).astype(np.int64) \
                - (eplus[rows, pos + off] + eminus[rows, pos + off + 1])
            p_right = 1.0 / (1.0 + np.power(self.lam, w.astype(np.float64)))
            # left copies first, then right copies: path index bit t = direction
            traj = np.vstack([traj, traj])
            prob = np.concatenate([prob * (1.0 - p_right), prob * p_right])
            eplus = np.vstack([eplus, eplus])
            eminus = np.vstack([eminus, eminus])
            k = len(pos)
            rows = np.arange(k)
            eminus[rows, pos + off] += 1
            eplus[k + rows, pos + off] += 1
            pos = np.concatenate([pos - 1, pos + 1])
            traj[:, t + 1] = pos
        self.traj = traj
        self.prob = prob
        self._eplus = eplus
        self._eminus = eminus
        self._offset = off

    # -- derived laws -------------------------------------------------------

    def law_of_position(self, t: int | None = None) -> ExactLaw:
        t = self.n if t is None else t
        return law_from_weights(self.traj[:, t].astype(np.int64), self.prob)

    def local_time(self, t: int, k: int) -> np.ndarray:
        """L(t, k) for every path (visit count up to time t inclusive)."""
        return (self.traj[:, :t + 1] == k).sum(axis=1).astype(np.int64)

    def law_of_local_time(self, t: int, k: int) -> ExactLaw:
        return law_from_weights(self.local_time(t, k), self.prob)

    def law_of_position_and_local_time(self, t: int, k: int) -> ExactLaw:
        """Joint law of (X_t, L(t, k)), encoded as X_t * 64 + L."""
        L = self.local_time(t, k)
        code = self.traj[:, t].astype(np.int64) * 64 + L
        return law_from_weights(code, self.prob)

    def tau(self, k: int, m: int) -> np.ndarray:
        """Per path: first time the visit count of k exceeds m, else n+1."""
        visits = np.cumsum(self.traj == k, axis=1)
        hit = visits >= m + 1
        t = np.argmax(hit, axis=1).astype(np.int64)
        t[~hit.any(axis=1)] = self.n + 1
        return t

    def law_of_tau_capped(self, k: int, m: int, cap: int) -> ExactLaw:
        return law_from_weights(np.minimum(self.tau(k, m), cap), self.prob)

    def edge_counts(self, t: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(up-crossings of k->k+1, down-crossings of k->k-1) up to time t."""
        here = self.traj[:, :t] == k
        up = (here & (self.traj[:, 1:t + 1] == k + 1)).sum(axis=1)
        down = (here & (self.traj[:, 1:t + 1] == k - 1)).sum(axis=1)
        return up.astype(np.int64), down.astype(np.int64)


def enumerate_paths(lam: float, n: int) -> PathEnumeration:
    return PathEnumeration(lam, n)


def joint_dbeta_dp(lam: float, i0: int, levels: tuple[int, int], M: int,
                   variant: str = "interior"):
    """Exact joint law of the discrepancy at two blue-draw counts.

    Returns (states, joint, defect): ``joint[a, b]`` is the probability of
    discrepancy ``states[a]`` at the first level and ``states[b]`` at the
    second; ``defect`` is the truncation mass loss.
    """
    from .urn import epoch_matrix

    n1, n2 = levels
    if not 0 <= n1 <= n2:
        raise ValueError("levels must satisfy 0 <= n1 <= n2")
    if abs(i0) > M:
        raise ValueError("initial state outside truncation")
    B = epoch_matrix(lam, variant, M)
    v = np.zeros(2 * M + 1)
    v[i0 + M] = 1.0
    v = v @ np.linalg.matrix_power(B, n1)
    step = np.linalg.matrix_power(B, n2 - n1)
    joint = v[:, None] * step
    states = np.arange(-M, M + 1)
    defect = 1.0 - joint.sum()
    return states, joint, defect
