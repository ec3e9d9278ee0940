"""Generalized urn discrepancy chains and their exact laws.

The walk's per-site decisions are equivalent to draws from a two-color urn
whose red-minus-blue discrepancy is a birth-death chain:

* interior sites: ``P(up | i) = lam^(2i-1) / (1 + lam^(2i-1))``
* origin:         ``P(up | i) = lam^(2i)   / (1 + lam^(2i))``

Sites k >= 1 start the interior chain at 0, sites k <= -1 at 1, the origin
chain starts at 0.  This module provides the stationary laws (pi, rho,
pi_tilde) with the variance sigma2, an exact dynamic-programming law for the
discrepancy at the n-th blue draw, total-variation mixing curves, tail-ratio
certificates, a Rubin-construction cross-check sampler, and the coupling /
coalescence experiments on directed-edge local-time chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import philox_generator

VARIANTS = ("interior", "origin")

TAIL_TOL = 1e-18


def urn_transition_prob(variant: str, i: int, lam: float) -> float:
    """P(discrepancy moves up | current state i)."""
    if variant == "interior":
        e = 1 - 2 * i
    elif variant == "origin":
        e = -2 * i
    else:
        raise ValueError(f"unknown variant {variant!r}")
    # 1/(1 + lam^e) with e = -(2i-1) resp. -2i; stable for any |i|
    t = e * math.log(lam)
    if t > 700.0:
        return 0.0
    if t < -700.0:
        return 1.0
    return 1.0 / (1.0 + lam ** e)


def truncation_for(lam: float, tol: float = TAIL_TOL) -> int:
    """Smallest M with lam^(M*(M-2)) < tol (covers the slowest tail, rho)."""
    M = 3
    while lam ** (M * (M - 2)) >= tol:
        M += 1
    return M


@dataclass
class StationaryLaws:
    """Truncated stationary laws of the discrepancy chains.

    pi       -- law of the interior discrepancy at blue draws, ~ lam^(x^2)
    rho      -- law of the interior chain itself, ~ lam^(x(x-2))(1+lam^(2x-1))
    pi_tilde -- origin-variant law at blue draws, ~ lam^((x+1)x)
    sigma2   -- variance of pi
    """

    lam: float
    M: int
    states: np.ndarray
    pi: np.ndarray
    rho: np.ndarray
    pi_tilde: np.ndarray
    sigma2: float

    def pi_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros(x.shape, dtype=np.float64)
        ok = np.abs(x) <= self.M
        out[ok] = self.pi[x[ok] + self.M]
        return out


def stationary_laws(lam: float, M: int | None = None, tol: float = TAIL_TOL) -> StationaryLaws:
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    if M is None:
        M = truncation_for(lam, tol)
    elif lam ** (M * (M - 2)) >= tol:
        raise ValueError(f"truncation M={M} too small for tail tolerance {tol}")
    x = np.arange(-M, M + 1, dtype=np.float64)
    pi = lam ** (x * x)
    pi /= pi.sum()
    rho = lam ** (x * (x - 2)) * (1.0 + lam ** (2 * x - 1))
    rho /= rho.sum()
    pi_tilde = lam ** ((x + 1) * x)
    pi_tilde /= pi_tilde.sum()
    sigma2 = float(np.sum(x * x * pi))
    return StationaryLaws(lam, M, np.arange(-M, M + 1), pi, rho, pi_tilde, sigma2)


def sigma2_series(lam: float, M: int) -> float:
    """sigma^2 from the theta series truncated at M (direct oracle)."""
    x = np.arange(-M, M + 1, dtype=np.float64)
    w = lam ** (x * x)
    return float(np.sum(x * x * w) / np.sum(w))


def detailed_balance_residual(laws: StationaryLaws) -> float:
    """max |rho(i) P(i->i+1) - rho(i+1) P(i+1->i)| inside the truncation."""
    lam, M = laws.lam, laws.M
    worst = 0.0
    for i in range(-M, M):
        up = urn_transition_prob("interior", i, lam)
        down_next = 1.0 - urn_transition_prob("interior", i + 1, lam)
        worst = max(worst, abs(laws.rho[i + M] * up - laws.rho[i + 1 + M] * down_next))
    return worst


# -- exact law of the discrepancy at blue draws ------------------------------


def epoch_matrix(lam: float, variant: str, M: int) -> np.ndarray:
    """One-blue-draw transition matrix of the discrepancy chain on [-M, M].

    Entry [i, j]: from state i, any number of up-steps then one down-step,
    landing at j.  Up-runs that would leave +M (or the final down-step
    leaving -M) lose their mass, so rows are sub-stochastic; callers track
    the defect.
    """
    size = 2 * M + 1
    B = np.zeros((size, size))
    for i in range(-M, M + 1):
        stay = 1.0
        state = i
        while state <= M:
            up = urn_transition_prob(variant, state, lam)
            j = state - 1
            if j >= -M:
                B[i + M, j + M] = stay * (1.0 - up)
            stay *= up
            state += 1
            if stay < 1e-30:
                break
    return B


@dataclass
class DbetaDist:
    """Exact (truncated) law of the discrepancy at the n-th blue draw."""

    states: np.ndarray
    probs: np.ndarray
    mass_defect: float

    def tv_to(self, other: np.ndarray) -> float:
        return 0.5 * float(np.abs(self.probs - other).sum()) + 0.5 * self.mass_defect


def exact_dbeta_dist(lam: float, variant: str, i0: int, n: int,
                     M: int | None = None, defect_tol: float = 1e-12) -> DbetaDist:
    """Law of the discrepancy at the n-th blue draw, started from i0.

    Dynamic programming over (state, blue draws); states clipped to
    [-M, M] with the lost mass reported, never silently renormalized.
    """
    if M is None:
        M = truncation_for(lam) + 2
    if abs(i0) > M:
        raise ValueError("initial state outside truncation")
    if n < 0:
        raise ValueError("n must be >= 0")
    B = epoch_matrix(lam, variant, M)
    v = np.zeros(2 * M + 1)
    v[i0 + M] = 1.0
    for _ in range(n):
        v = v @ B
    defect = 1.0 - v.sum()
    if defect > defect_tol:
        raise ValueError(
            f"truncation mass defect {defect:.3e} above tolerance {defect_tol};"
            f" increase M (= {M})")
    return DbetaDist(np.arange(-M, M + 1), v, defect)


def tv_mixing_curve(lam: float, variant: str, i0: int, n_max: int,
                    M: int | None = None) -> np.ndarray:
    """Rows (n, TV(law of discrepancy at n-th blue draw, pi)), 0 <= n <= n_max."""
    if M is None:
        M = truncation_for(lam) + 2
    laws = stationary_laws(lam, M)
    target = laws.pi if variant == "interior" else laws.pi_tilde
    B = epoch_matrix(lam, variant, M)
    v = np.zeros(2 * M + 1)
    v[i0 + M] = 1.0
    out = np.empty((n_max + 1, 2))
    for n in range(n_max + 1):
        defect = 1.0 - v.sum()
        out[n] = (n, max(0.5 * np.abs(v - target).sum() + 0.5 * defect, 0.0))
        v = v @ B
    return out


@dataclass
class TailRatioReport:
    """Certificate for the exponential tail bounds of the blue-draw law."""

    lam: float
    n_max: int
    y_max: int
    rows: list = field(default_factory=list)  # (side, y, n, x, ratio, bound)
    violations: int = 0
    max_margin: float = -np.inf  # max of ratio - bound (negative = all pass)

    def record(self, side, y, n, x, ratio, bound):
        self.rows.append((side, int(y), int(n), int(x), float(ratio), float(bound)))
        self.max_margin = max(self.max_margin, ratio - bound)
        if ratio > bound * (1.0 + 1e-12) + 1e-300:
            self.violations += 1


def tail_ratio_check(lam: float, n_max: int = 20, y_max: int = 10,
                     M: int | None = None) -> TailRatioReport:
    """Verify the tail-ratio bounds of the blue-draw law by exact DP.

    Right tail: for 0 <= y <= y_max, any start x <= y, 1 <= n <= n_max,
        P_x(D = y+1) / P_x(D = y) <= lam^(2y+1) / (1 - lam).
    Left tail: for -y_max <= y <= 0, any start x,
        P_x(D = y-1) / P_x(D = y) <= lam + lam^2.
    """
    if M is None:
        M = max(truncation_for(lam) + 2, y_max + 4)
    report = TailRatioReport(lam, n_max, y_max)
    B = epoch_matrix(lam, "interior", M)
    size = 2 * M + 1
    starts = range(-y_max - 2, y_max + 1)
    dists = {}
    for x in starts:
        v = np.zeros(size)
        v[x + M] = 1.0
        per_n = []
        for _ in range(n_max):
            v = v @ B
            per_n.append(v.copy())
        dists[x] = per_n
    right_bound = lam ** np.arange(1, 2 * y_max + 2, 2, dtype=np.float64) / (1.0 - lam)
    left_bound = lam + lam * lam
    for n in range(1, n_max + 1):
        for y in range(0, y_max + 1):
            for x in range(-y_max - 2, y + 1):
                v = dists[x][n - 1]
                py = v[y + M]
                py1 = v[y + 1 + M]
                if py <= 0.0:
                    continue
                report.record("right", y, n, x, py1 / py, right_bound[y])
        for y in range(-y_max, 1):
            for x in range(-y_max - 2, y_max + 1):
                v = dists[x][n - 1]
                py = v[y + M]
                pym1 = v[y - 1 + M]
                if py <= 0.0:
                    continue
                report.record("left", y, n, x, pym1 / py, left_bound)
    return report


def gaussian_tail_check(lam: float, n_max: int = 20, span: int = 8) -> float:
    """max over i, j, n of P_i(D_{beta_n} = j) - pi(j)/pi(i) (<= 0 expected)."""
    laws = stationary_laws(lam)
    M = max(laws.M + 2, span + 4)
    B = epoch_matrix(lam, "interior", M)
    x = np.arange(-M, M + 1, dtype=np.float64)
    pi_raw = lam ** (x * x)
    pi_raw /= pi_raw.sum()
    worst = -np.inf
    for i in range(-span, span + 1):
        v = np.zeros(2 * M + 1)
        v[i + M] = 1.0
        for _ in range(n_max):
            v = v @ B
            for j in range(-span, span + 1):
                bound = pi_raw[j + M] / pi_raw[i + M]
                worst = max(worst, v[j + M] - bound)
    return worst


# -- samplers ----------------------------------------------------------------


def sample_dbeta(lam: float, variant: str, i0: int, n: int, replicas: int,
                 seed: int, stream0: int = 0) -> np.ndarray:
    """Monte Carlo draws of the discrepancy at the n-th blue draw."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return kernels.dbeta_batch(lam, variant, i0, n, replicas, seed, stream0)


def rubin_red_before_blue(lam: float, ell: int, m: int, replicas: int,
                          seed: int) -> np.ndarray:
    """Indicator samples of {m red draws precede m blue draws}.

    Rubin's construction: the i-th red waits Exp(lam^(2(ell+i-1)-1)), the
    i-th blue waits Exp(lam^(2(i-1))); the event is that the red clock total
    is smaller.  Its probability equals P_ell(D_{beta_m} >= ell).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = philox_generator(seed, 17, ell & 0xFFFF, m)
    i = np.arange(1, m + 1, dtype=np.float64)
    red_rate = lam ** (2.0 * (ell + i - 1.0) - 1.0)
    blue_rate = lam ** (2.0 * (i - 1.0))
    red = rng.standard_exponential((replicas, m)) / red_rate
    blue = rng.standard_exponential((replicas, m)) / blue_rate
    return red.sum(axis=1) < blue.sum(axis=1)


def exact_red_before_blue(lam: float, ell: int, m: int, M: int | None = None) -> float:
    """P_ell(D_{beta_m} >= ell) by exact DP (the Rubin sampler's target)."""
    if M is None:
        M = truncation_for(lam) + 2 + abs(ell)
    d = exact_dbeta_dist(lam, "interior", ell, m, M=M, defect_tol=1e-9)
    return float(d.probs[d.states >= ell].sum())


# -- transition rows of directed-edge local-time chains ----------------------


def edge_chain_rows(lam: float, max_level: int, side: str = "left",
                    M: int | None = None) -> np.ndarray:
    """Transition rows of the directed-edge local-time chain.

    Row ``i`` is the law of the increment of the chain given current value
    ``i``: at sites <= -1 this is the blue-draw law at level i+1 started
    from 1; at sites >= 1 the level-i law started from 0.  Returned as an
    array of shape (max_level + 1, 2M + 1) over increments [-M, M].
    """
    if M is None:
        M = truncation_for(lam) + 2
    B = epoch_matrix(lam, "interior", M)
    rows = np.empty((max_level + 1, 2 * M + 1))
    v = np.zeros(2 * M + 1)
    if side == "left":
        v[1 + M] = 1.0
        v = v @ B  # level i uses beta_{i+1} from start 1
        for i in range(max_level + 1):
            rows[i] = v
            v = v @ B
    elif side == "right":
        rows[0] = 0.0
        rows[0, 0 + M] = 1.0  # level 0: beta_0 = 0 draws, increment 0
        v[0 + M] = 1.0
        for i in range(1, max_level + 1):
            v = v @ B
            rows[i] = v
    else:
        raise ValueError("side must be 'left' or 'right'")
    return rows


@dataclass
class CouplingResult:
    """Outcome of one coupling replica (see pair_coupling_experiment)."""

    b: int
    window: int
    s1_start: int
    s2_start: int
    gamma: int            # first increment mismatch step (window+1 if none)
    s1_min_window: int    # min of S1 over the window
    theta: int            # coalescence step of (S1, S2), -1 if unobserved
    budget_exhausted: bool


def maximal_coupling_gamma(s_values: np.ndarray, rows: np.ndarray,
                           pi: np.ndarray, M: int, rng) -> int:
    """First mismatch of the chain increments against iid-pi increments.

    The chain increment xi_j is accepted as the iid draw with probability
    min(1, pi(xi)/q(xi)) (maximal coupling given the realized path).
    Returns the 1-based step of the first mismatch, or len+1 if none.
    """
    inc = np.diff(s_values)
    for j, xi in enumerate(inc, start=1):
        i_prev = int(s_values[j - 1])
        q = rows[min(i_prev, rows.shape[0] - 1)]
        xi = int(xi)
        if abs(xi) > M:
            return j
        qx = q[xi + M]
        px = pi[xi + M]
        if qx <= 0.0:
            return j
        if rng.random() >= min(1.0, px / qx):
            return j
    return len(inc) + 1
