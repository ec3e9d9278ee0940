"""Rescaled local-time curves at inverse local times.

A curve indexed by (x, h) at scale n is the site local-time profile frozen
at tau_{floor(x n), floor(2 sigma h sqrt(n))} and rescaled by 2 sigma
sqrt(n) in height and n in space.  The module extracts curves from walk
snapshots, computes merge/absorption points two independent ways, and
checks the exact discrete identities:

* area: tau + 1 = sum_k L(tau, k), i.e. the rescaled curve integrates to
  (tau + 1) / (2 sigma n^(3/2));
* duality: {curve_(x,h) at y <= h'} = {curve height at x <= curve_(y,h')
  at x}, equivalently L(tau_{k,m}, j) = min{l >= 0 : L(tau_{j,l}, k) >= m+1}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .walk import MultiTauResult, StopSpec, TauSnapshot


def scaled_spec(x: float, h: float, n: int, sigma: float) -> StopSpec:
    """The lattice stop spec (floor(x n), floor(2 sigma h sqrt(n)))."""
    return StopSpec(int(math.floor(x * n)), int(math.floor(2.0 * sigma * h * math.sqrt(n))))


@dataclass
class RKCurve:
    """One rescaled curve with its stopping time and absorption points."""

    x: float
    h: float
    n: int
    sigma: float
    spec: StopSpec
    tau: int
    offset: int             # lattice site of L[0]
    L: np.ndarray           # site local times at tau over the visited range
    mu_minus: float         # rescaled walk minimum up to tau
    mu_plus: float          # rescaled walk maximum up to tau

    @property
    def height_scale(self) -> float:
        return 2.0 * self.sigma * math.sqrt(self.n)

    def value_at(self, y: float) -> float:
        """Curve value L(tau, floor(y n)) / (2 sigma sqrt(n))."""
        k = int(math.floor(y * self.n))
        i = k - self.offset
        L = int(self.L[i]) if 0 <= i < len(self.L) else 0
        return L / self.height_scale

    def values_at(self, ys) -> np.ndarray:
        return np.array([self.value_at(y) for y in ys])

    def curve(self):
        """(y grid over the visited range, rescaled values)."""
        ys = (self.offset + np.arange(len(self.L))) / self.n
        return ys, self.L / self.height_scale

    def area_identity_residual(self) -> int:
        """tau + 1 - sum_k L(tau, k); exactly 0 on every valid curve."""
        return self.tau + 1 - int(self.L.sum())

    def rescaled_area(self) -> float:
        """(tau + 1) / (2 sigma n^(3/2)) = integral of the rescaled curve."""
        return (self.tau + 1.0) / (2.0 * self.sigma * self.n ** 1.5)

    def start_value(self) -> float:
        """Curve value at its own index point: (floor(2 sigma h sqrt(n)) + 1) / (2 sigma sqrt(n))."""
        return (self.spec.m + 1) / self.height_scale


def extract_curve(snapshot: TauSnapshot, x: float, h: float, n: int, sigma: float) -> RKCurve:
    spec = scaled_spec(x, h, n, sigma)
    if snapshot.spec != spec:
        raise ValueError(f"snapshot is for {snapshot.spec}, expected {spec}")
    return RKCurve(
        x=x, h=h, n=n, sigma=sigma, spec=spec, tau=snapshot.n,
        offset=snapshot.offset, L=snapshot.local_times(),
        mu_minus=snapshot.run_min / n, mu_plus=snapshot.run_max / n)


def merge_points(result: MultiTauResult, spec_i: StopSpec, spec_j: StopSpec,
                 n: int) -> tuple[float, float]:
    """Rescaled walk extrema between the two stopping times.

    Combines the segment extrema captured at each fire: the maximum over
    [tau_i ^ tau_j, tau_i v tau_j] is the max of the later snapshots'
    segments together with the position at the earlier stop.  The
    degenerate pair (spec, spec) returns the running extrema up to its stop
    (the pairing-with-the-zero-curve convention).
    """
    if spec_i == spec_j:
        s = result.snapshot_for(spec_i)
        return s.run_min / n, s.run_max / n
    order = [result.specs[i] for i in result.fired_order]
    ia, ib = order.index(spec_i), order.index(spec_j)
    if ia > ib:
        ia, ib = ib, ia
    lo = result.snapshots[ia].x
    hi = lo
    for s in result.snapshots[ia + 1:ib + 1]:
        lo = min(lo, s.seg_min)
        hi = max(hi, s.seg_max)
    return lo / n, hi / n


def merge_point_by_edge_equality(snap_i: TauSnapshot, snap_j: TauSnapshot) -> int:
    """min{ j >= k_i v k_j : up-crossing profiles at the two times agree }.

    Cross-check for the walk-extrema definition; the two agree within one
    lattice site.
    """
    k0 = max(snap_i.spec.k, snap_j.spec.k)
    hi = max(snap_i.offset + len(snap_i.eplus), snap_j.offset + len(snap_j.eplus))
    for k in range(k0, hi + 1):
        if snap_i.site_eplus(k) == snap_j.site_eplus(k):
            return k
    raise RuntimeError("profiles never agree right of the stops")  # unreachable


def merge_point_by_edge_equality_left(snap_i: TauSnapshot, snap_j: TauSnapshot) -> int:
    """max{ j <= k_i ^ k_j : down-crossing profiles agree } (mirror check)."""
    k0 = min(snap_i.spec.k, snap_j.spec.k)
    lo = min(snap_i.offset, snap_j.offset)
    for k in range(k0, lo - 2, -1):
        if snap_i.site_eminus(k) == snap_j.site_eminus(k):
            return k
    raise RuntimeError("profiles never agree left of the stops")  # unreachable


# -- exact discrete duality ---------------------------------------------------


class TrajectoryIndex:
    """Visit-time index of a recorded trajectory for fast repeated queries.

    The plain functions below recount the path per call and serve as the
    reference implementation; this index gives the same answers in
    O(log #visits) per query (see test_rayknight for the agreement check).
    """

    def __init__(self, positions: np.ndarray):
        self.positions = np.asarray(positions, dtype=np.int64)
        self.lo = int(self.positions.min())
        order = np.argsort(self.positions, kind="stable")
        key = self.positions[order] - self.lo
        counts = np.bincount(key)
        self._starts = np.concatenate([[0], np.cumsum(counts)])
        self._times = order  # visit times per site, ascending within a site

    def visits(self, k: int) -> np.ndarray:
        i = k - self.lo
        if not 0 <= i < len(self._starts) - 1:
            return self._times[:0]
        return self._times[self._starts[i]:self._starts[i + 1]]

    def tau(self, k: int, m: int):
        v = self.visits(k)
        return int(v[m]) if len(v) > m else None

    def local_time(self, t: int, k: int) -> int:
        return int(np.searchsorted(self.visits(k), t, side="right"))

    def duality_holds(self, k: int, m: int, j: int, lprime: int) -> bool:
        t_km = self.tau(k, m)
        t_jl = self.tau(j, lprime)
        if t_km is None or t_jl is None:
            raise ValueError("trajectory too short to observe both stopping times")
        return (self.local_time(t_km, j) <= lprime) == (m + 1 <= self.local_time(t_jl, k))

    def backpath_identity_holds(self, k: int, m: int, j: int) -> bool:
        t_km = self.tau(k, m)
        if t_km is None or j == k:
            raise ValueError("need tau_{k,m} observed and j != k")
        lhs = self.local_time(t_km, j)
        if self.tau(j, lhs) is None:
            raise ValueError("trajectory too short: tau_{j, L(tau_km, j)} unobserved")
        for ell in range(lhs + 1):
            if self.local_time(self.tau(j, ell), k) >= m + 1:
                return ell == lhs
        return False


def backpath_value(positions: np.ndarray, t: int, k: int) -> int:
    """L(t, k) from a recorded trajectory (visit count up to t inclusive)."""
    return int(np.count_nonzero(positions[:t + 1] == k))


def tau_from_positions(positions: np.ndarray, k: int, m: int) -> int | None:
    """tau_{k,m} along a recorded trajectory, None if not reached."""
    hits = np.flatnonzero(positions == k)
    return int(hits[m]) if len(hits) > m else None


def duality_holds(positions: np.ndarray, k: int, m: int, j: int, lprime: int) -> bool:
    """Exact event identity, raw lattice form.

    {L(tau_{k,m}, j) <= l'} must equal {m + 1 <= L(tau_{j,l'}, k)}; both
    stopping times must be observed along the trajectory.
    """
    t_km = tau_from_positions(positions, k, m)
    t_jl = tau_from_positions(positions, j, lprime)
    if t_km is None or t_jl is None:
        raise ValueError("trajectory too short to observe both stopping times")
    left = backpath_value(positions, t_km, j) <= lprime
    right = m + 1 <= backpath_value(positions, t_jl, k)
    return left == right


def duality_check(positions: np.ndarray, x: float, h: float, y: float,
                  hprime: float, n: int, sigma: float) -> bool:
    """Scaled duality: {curve_(x,h)(y) <= h'} vs {curve height <= curve_(y,h')(x)}.

    Reduces to the lattice identity with k = floor(xn), m = floor(2 sigma h
    sqrt(n)), j = floor(yn), l' = floor(2 sigma h' sqrt(n)).
    """
    a = scaled_spec(x, h, n, sigma)
    b = scaled_spec(y, hprime, n, sigma)
    if a.k == b.k:
        raise ValueError("need floor(xn) != floor(yn)")
    return duality_holds(positions, a.k, a.m, b.k, b.m)


def backpath_identity_holds(positions: np.ndarray, k: int, m: int, j: int) -> bool:
    """L(tau_{k,m}, j) = min{ l >= 0 : L(tau_{j,l}, k) >= m + 1 }, checked directly."""
    t_km = tau_from_positions(positions, k, m)
    if t_km is None or j == k:
        raise ValueError("need tau_{k,m} observed and j != k")
    lhs = backpath_value(positions, t_km, j)
    if tau_from_positions(positions, j, lhs) is None:
        raise ValueError("trajectory too short: tau_{j, L(tau_km, j)} unobserved")
    for ell in range(lhs + 1):
        t_jl = tau_from_positions(positions, j, ell)
        if backpath_value(positions, t_jl, k) >= m + 1:
            return ell == lhs
    return False


# -- rescaled space/local-time processes --------------------------------------


def rescaled_processes(positions: np.ndarray, n: int, sigma: float,
                       t_grid) -> tuple[np.ndarray, np.ndarray]:
    """Sampled (X(t), H(t)) with space scale (2 sigma)^(-2/3) n and time n^(3/2).

    H is the local time at the current location, rescaled by
    (2 sigma)^(2/3) sqrt(n).  Requires the trajectory to cover
    ceil(max(t) * n^(3/2)) steps.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)
    steps = np.floor(t_grid * n ** 1.5).astype(np.int64)
    if steps.max() >= len(positions):
        raise ValueError("trajectory shorter than the requested time grid")
    xs = np.empty(len(t_grid))
    hs = np.empty(len(t_grid))
    for i, s in enumerate(steps):
        xk = positions[s]
        xs[i] = xk / ((2.0 * sigma) ** (-2.0 / 3.0) * n)
        hs[i] = backpath_value(positions, int(s), int(xk)) / ((2.0 * sigma) ** (2.0 / 3.0) * math.sqrt(n))
    return xs, hs


# -- dumps ---------------------------------------------------------------------


def write_curve_csv(path, curve: RKCurve):
    ys, vals = curve.curve()
    with open(path, "w") as f:
        f.write("y,value\n")
        for y, v in zip(ys, vals):
            f.write(f"{y!r},{v!r}\n")


def write_curve_meta(path, curve: RKCurve, seed: int):
    meta = {
        "x": curve.x, "h": curve.h, "n": curve.n, "sigma": curve.sigma,
        "tau_n": curve.tau, "mu_minus": curve.mu_minus, "mu_plus": curve.mu_plus,
        "seed": seed,
    }
    with open(path, "w") as f:
        json.dump(meta, f, sort_keys=True)
        f.write("\n")
