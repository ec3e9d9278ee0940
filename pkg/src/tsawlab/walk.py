"""Exact simulation of the bond-repelling self-avoiding walk.

The walk steps right with probability

    P(right) = 1 / (1 + lam**w),
    w = (eplus(x-1) + eminus(x)) - (eplus(x) + eminus(x+1)),

where eplus/eminus count directed-edge crossings; the integer exponent form
is immune to under/overflow of exp(-beta * counts).  Inverse local times
tau_{k,m} (the (m+1)-th visit to k) are the stopping times everything else
is built on; a multi-stop run captures a full local-time profile snapshot at
each of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

DEFAULT_BUDGET = 2 ** 40

STATUS_OK = "ok"
STATUS_BUDGET = "budget_exhausted"


@dataclass(frozen=True)
class WalkParams:
    """Model parameters: lam = exp(-beta) in (0, 1), and the master seed."""

    lam: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")

    @property
    def beta(self) -> float:
        return -math.log(self.lam)


@dataclass(frozen=True)
class StopSpec:
    """Inverse local time tau_{k,m}: first time the visit count of k exceeds m."""

    k: int
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be >= 0")


@dataclass
class TauSnapshot:
    """Full local-time state captured when one stop spec fired."""

    spec: StopSpec
    n: int                 # the stopping time itself
    x: int                 # current position (= spec.k)
    offset: int            # site of eplus[0]
    eplus: np.ndarray
    eminus: np.ndarray
    seg_min: int           # walk extrema since the previous fire (inclusive)
    seg_max: int
    run_min: int           # walk extrema over [0, n]
    run_max: int

    def site_eplus(self, k: int) -> int:
        i = k - self.offset
        return int(self.eplus[i]) if 0 <= i < len(self.eplus) else 0

    def site_eminus(self, k: int) -> int:
        i = k - self.offset
        return int(self.eminus[i]) if 0 <= i < len(self.eminus) else 0

    def local_times(self) -> np.ndarray:
        """L(n, k) over [offset, offset + len): eplus + eminus + [x = k]."""
        L = self.eplus + self.eminus
        L[self.x - self.offset] += 1
        return L

    def site_L(self, k: int) -> int:
        return self.site_eplus(k) + self.site_eminus(k) + (1 if k == self.x else 0)


@dataclass
class MultiTauResult:
    params: WalkParams
    specs: list
    status: str
    snapshots: list = field(default_factory=list)  # in firing order
    fired_order: list = field(default_factory=list)  # indices into specs
    final_n: int = 0

    def snapshot_for(self, spec: StopSpec) -> TauSnapshot:
        for s in self.snapshots:
            if s.spec == spec:
                return s
        raise KeyError(f"no snapshot for {spec} (status={self.status})")


class WalkState:
    """Single-owner walk wrapper around the active kernel."""

    def __init__(self, params: WalkParams, stream: int = 0, cap0: int = 4096,
                 record_path: bool = False, budget: int = DEFAULT_BUDGET,
                 impl: str | None = None):
        if record_path and budget > 2 ** 26:
            raise ValueError("path recording requires a budget <= 2**26 steps")
        self.params = params
        self.stream = stream
        self.budget = budget
        self._w = kernels.make_walk(params.lam, params.seed, stream, cap0=cap0,
                                    path_cap=budget if record_path else 0,
                                    impl=impl)

    # -- passthrough state ---------------------------------------------------

    @property
    def n(self) -> int:
        return int(self._w.n)

    @property
    def x(self) -> int:
        return int(self._w.x)

    @property
    def visited_range(self) -> tuple[int, int]:
        return int(self._w.xmin), int(self._w.xmax)

    def site_local_time(self, k: int) -> int:
        return int(self._w.site_L(k))

    def site_eplus(self, k: int) -> int:
        return int(self._w.site_eplus(k))

    def site_eminus(self, k: int) -> int:
        return int(self._w.site_eminus(k))

    def profile(self):
        return self._w.profile()

    def path(self) -> np.ndarray:
        return self._w.path()

    def positions(self) -> np.ndarray:
        """X_0..X_n from the recorded path."""
        return np.concatenate([[0], np.cumsum(self.path(), dtype=np.int64)])

    # -- dynamics -------------------------------------------------------------

    def step(self, nsteps: int = 1):
        self._w.step_many(nsteps)
        return self

    def step_probability(self) -> float:
        """P(next step is to the right) in the stable 1/(1 + lam**w) form."""
        x = self.x
        w = (self.site_eplus(x - 1) + self.site_eminus(x)
             - self.site_eplus(x) - self.site_eminus(x + 1))
        return right_step_probability(self.params.lam, w)

    def check_invariants(self):
        """Integer conservation laws; raises AssertionError on violation."""
        offset, ep, em = self.profile()
        assert ep.sum() + em.sum() == self.n, "edge crossings must sum to n"
        L = ep + em
        L[self.x - offset] += 1
        assert L.sum() == self.n + 1, "site local times must sum to n+1"
        # nearest-neighbor structure: eplus(k) - eminus(k+1) in {-1, 0, 1}
        em_shift = np.concatenate([em[1:], [0]])
        d = ep - em_shift
        assert np.all(np.abs(d) <= 1), "directed edge counts differ by more than 1"
        return True


def right_step_probability(lam: float, w: int) -> float:
    """1/(1 + lam**w), guarded for |w| beyond the table range."""
    t = w * math.log(lam)
    if t > 700.0:
        return 0.0
    if t < -700.0:
        return 1.0
    return 1.0 / (1.0 + lam ** w)


def step_probability(state: WalkState) -> float:
    return state.step_probability()


def run_until_tau(params: WalkParams, spec: StopSpec, *, stream: int = 0,
                  budget: int = DEFAULT_BUDGET, impl: str | None = None):
    """Run a fresh walk to tau_{k,m}.  Returns (state, status)."""
    res = run_until_multi_tau(params, [spec], stream=stream, budget=budget, impl=impl)
    return res


def run_until_multi_tau(params: WalkParams, specs, *, stream: int = 0,
                        budget: int = DEFAULT_BUDGET, record_path: bool = False,
                        impl: str | None = None, cap0: int = 4096) -> MultiTauResult:
    """Run one walk through all stop specs, snapshotting at each.

    Snapshots are captured in firing order; each carries the full visited-
    range profile plus segment extrema since the previous fire, so pairwise
    walk extrema between stopping times combine exactly from segments.
    If the budget is reached first, the result carries the snapshots fired
    so far and status "budget_exhausted" (never silent truncation).
    """
    specs = [StopSpec(int(s.k), int(s.m)) if isinstance(s, StopSpec)
             else StopSpec(int(s[0]), int(s[1])) for s in specs]
    if len(set(specs)) != len(specs):
        raise ValueError("stop specs must be distinct")
    st = WalkState(params, stream=stream, cap0=cap0, record_path=record_path,
                   budget=budget, impl=impl)
    w = st._w
    w.set_taus(np.array([s.k for s in specs], dtype=np.int64),
               np.array([s.m for s in specs], dtype=np.int64))
    res = MultiTauResult(params, specs, STATUS_OK)
    remaining = len(specs)
    while remaining:
        code = w.advance_to_tau(budget)
        if code == kernels.STATUS_BUDGET:
            res.status = STATUS_BUDGET
            break
        if code == kernels.STATUS_NO_PENDING:
            break
        offset, ep, em = w.profile()
        res.snapshots.append(TauSnapshot(
            spec=specs[code], n=int(w.n), x=int(w.x), offset=int(offset),
            eplus=ep, eminus=em,
            seg_min=int(w.seg_min_last), seg_max=int(w.seg_max_last),
            run_min=int(w.xmin), run_max=int(w.xmax)))
        res.fired_order.append(code)
        remaining -= 1
    res.final_n = int(w.n)
    res.walk = st
    return res


# -- CSV dumps ---------------------------------------------------------------


def write_profile_csv(path, snapshot_or_state):
    """Profile dump: header k,eplus,eminus,L, one row per visited site."""
    s = snapshot_or_state
    if isinstance(s, WalkState):
        offset, ep, em = s.profile()
        x = s.x
    else:
        offset, ep, em, x = s.offset, s.eplus, s.eminus, s.x
    with open(path, "w") as f:
        f.write("k,eplus,eminus,L\n")
        for i in range(len(ep)):
            k = offset + i
            L = int(ep[i]) + int(em[i]) + (1 if k == x else 0)
            f.write(f"{k},{int(ep[i])},{int(em[i])},{L}\n")


def write_path_csv(path, state: WalkState):
    """Trajectory dump: header n,x (requires path recording)."""
    pos = state.positions()
    with open(path, "w") as f:
        f.write("n,x\n")
        for n, x in enumerate(pos):
            f.write(f"{n},{int(x)}\n")
