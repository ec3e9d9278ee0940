"""Pure-Python simulation kernels.

Fallback implementation of the hot loops: the bond-repelling walk, the
urn-driven twin simulator, and the urn discrepancy chain.  The compiled
extension (``tsawlab._ckernel``) implements the same classes and functions
with identical random-stream consumption, so for a fixed ``(seed, stream)``
both kernels produce identical trajectories; see
``tests/test_kernel_twin.py``.  This module is the reference for those
semantics and is only fast enough for small runs.

Conventions shared by both kernels:

* one uniform double is consumed per step / per urn draw, compared against
  the right/up probability;
* right-step probability is ``1 / (1 + lam**w)`` where
  ``w = (eplus[x-1] + eminus[x]) - (eplus[x] + eminus[x+1])``, read from a
  precomputed table for ``|w| <= TABLE_HALF_WIDTH`` and computed with
  ``exp(w * log(lam))`` beyond it;
* edge counts live in dense arrays over the visited range, grown (doubled)
  when the walk reaches the boundary.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import Xoshiro256pp, derive_state

IMPL = "python"

TABLE_HALF_WIDTH = 64

# status codes returned by Walk.advance_to_tau
STATUS_BUDGET = -1
STATUS_NO_PENDING = -2


def right_prob_table(lam: float) -> np.ndarray:
    """Table of 1/(1 + lam**w) for w in [-64, 64] (index w + 64)."""
    w = np.arange(-TABLE_HALF_WIDTH, TABLE_HALF_WIDTH + 1, dtype=np.float64)
    return 1.0 / (1.0 + np.power(lam, w))


def urn_up_table(lam: float, variant: str) -> np.ndarray:
    """Up-step probability table for the urn discrepancy chain.

    interior: P(up | i) = lam^(2i-1) / (1 + lam^(2i-1)) = 1/(1 + lam^(1-2i))
    origin:   P(up | i) = lam^(2i)   / (1 + lam^(2i))   = 1/(1 + lam^(-2i))
    """
    i = np.arange(-TABLE_HALF_WIDTH, TABLE_HALF_WIDTH + 1, dtype=np.float64)
    e = (1.0 - 2.0 * i) if variant == "interior" else (-2.0 * i)
    return 1.0 / (1.0 + np.power(lam, e))


def _right_prob(w: int, pright: np.ndarray, loglam: float) -> float:
    if -TABLE_HALF_WIDTH <= w <= TABLE_HALF_WIDTH:
        return float(pright[w + TABLE_HALF_WIDTH])
    return 1.0 / (1.0 + math.exp(w * loglam))


def _urn_up_prob(i: int, table: np.ndarray, loglam: float, variant_interior: bool) -> float:
    if -TABLE_HALF_WIDTH <= i <= TABLE_HALF_WIDTH:
        return float(table[i + TABLE_HALF_WIDTH])
    e = (1 - 2 * i) if variant_interior else (-2 * i)
    return 1.0 / (1.0 + math.exp(e * loglam))


class Walk:
    """Mutable walk state: position, step count, directed-edge counts.

    Single-owner; all randomness comes from the xoshiro stream attached at
    construction.
    """

    def __init__(self, lam, loglam, pright, s0, s1, s2, s3, cap0=4096, path_cap=0):
        self.lam = float(lam)
        self.loglam = float(loglam)
        self.pright = np.asarray(pright, dtype=np.float64)
        self._rng = Xoshiro256pp.__new__(Xoshiro256pp)
        self._rng.s0, self._rng.s1, self._rng.s2, self._rng.s3 = s0, s1, s2, s3
        cap0 = max(int(cap0), 16)
        self._cap = cap0
        self._lo = -(cap0 // 2)
        self.eplus = np.zeros(cap0, dtype=np.int64)
        self.eminus = np.zeros(cap0, dtype=np.int64)
        self.n = 0
        self.x = 0
        self.xmin = 0
        self.xmax = 0
        self.seg_min = 0
        self.seg_max = 0
        self.seg_min_last = 0
        self.seg_max_last = 0
        self._spec_k = np.zeros(0, dtype=np.int64)
        self._spec_m = np.zeros(0, dtype=np.int64)
        self._spec_fired = np.zeros(0, dtype=np.uint8)
        self._init_checked = False
        self._path_cap = int(path_cap)
        self._path_len = 0
        self._path = np.zeros(self._path_cap, dtype=np.int8) if path_cap else None

    # -- stop specs -------------------------------------------------------

    def set_taus(self, ks, ms):
        ks = np.asarray(ks, dtype=np.int64)
        ms = np.asarray(ms, dtype=np.int64)
        if len(set(zip(ks.tolist(), ms.tolist()))) != len(ks):
            raise ValueError("stop specs must be distinct")
        self._spec_k = ks.copy()
        self._spec_m = ms.copy()
        self._spec_fired = np.zeros(len(ks), dtype=np.uint8)
        self._init_checked = False

    def _check_specs_here(self):
        # A visit to site x was just completed; L(n, x) = eplus + eminus + 1.
        here = self.x
        L = int(self.eplus[here - self._lo]) + int(self.eminus[here - self._lo]) + 1
        for j in range(len(self._spec_k)):
            if not self._spec_fired[j] and self._spec_k[j] == here and L == self._spec_m[j] + 1:
                self._spec_fired[j] = 1
                return j
        return None

    # -- storage ----------------------------------------------------------

    def _ensure(self):
        lo, cap, x = self._lo, self._cap, self.x
        if x - 1 >= lo and x + 1 < lo + cap:
            return
        new_cap = cap * 2
        new_lo = lo - (cap // 2) if x - 1 < lo else lo
        ep = np.zeros(new_cap, dtype=np.int64)
        em = np.zeros(new_cap, dtype=np.int64)
        off = lo - new_lo
        ep[off:off + cap] = self.eplus
        em[off:off + cap] = self.eminus
        self.eplus, self.eminus, self._lo, self._cap = ep, em, new_lo, new_cap

    # -- stepping ---------------------------------------------------------

    def _step(self):
        self._ensure()
        lo = self._lo
        x = self.x
        w = (int(self.eplus[x - 1 - lo]) + int(self.eminus[x - lo])
             - int(self.eplus[x - lo]) - int(self.eminus[x + 1 - lo]))
        p = _right_prob(w, self.pright, self.loglam)
        u = self._rng.next_double()
        if u < p:
            self.eplus[x - lo] += 1
            x += 1
            move = 1
        else:
            self.eminus[x - lo] += 1
            x -= 1
            move = -1
        self.x = x
        self.n += 1
        if self._path is not None:
            self._path[self._path_len] = move
            self._path_len += 1
        if x < self.xmin:
            self.xmin = x
        elif x > self.xmax:
            self.xmax = x
        if x < self.seg_min:
            self.seg_min = x
        elif x > self.seg_max:
            self.seg_max = x

    def step_many(self, nsteps: int):
        for _ in range(int(nsteps)):
            self._step()

    def advance_to_tau(self, budget: int):
        """Run until a pending stop spec fires or the step budget is hit.

        Returns the fired spec index, STATUS_BUDGET if ``n`` reached
        ``budget`` first, or STATUS_NO_PENDING if every spec already fired.
        On fire, ``seg_min``/``seg_max`` hold the walk extrema since the
        previous fire (inclusive of both endpoints) and are then reset to
        the current position.
        """
        if not self._init_checked:
            self._init_checked = True
            j = self._check_specs_here()
            if j is not None:
                self._fire_reset()
                return j
        if not np.any(self._spec_fired == 0):
            return STATUS_NO_PENDING
        while self.n < budget:
            self._step()
            j = self._check_specs_here()
            if j is not None:
                self._fire_reset()
                return j
        return STATUS_BUDGET

    def _fire_reset(self):
        self.seg_min_last = self.seg_min
        self.seg_max_last = self.seg_max
        self.seg_min = self.x
        self.seg_max = self.x

    # -- accessors ---------------------------------------------------------

    def site_eplus(self, k: int) -> int:
        i = k - self._lo
        return int(self.eplus[i]) if 0 <= i < self._cap else 0

    def site_eminus(self, k: int) -> int:
        i = k - self._lo
        return int(self.eminus[i]) if 0 <= i < self._cap else 0

    def site_L(self, k: int) -> int:
        return self.site_eplus(k) + self.site_eminus(k) + (1 if self.x == k else 0)

    def profile(self):
        """Copy of (eplus, eminus) over the visited range [xmin, xmax]."""
        a = self.xmin - self._lo
        b = self.xmax - self._lo + 1
        return self.xmin, self.eplus[a:b].copy(), self.eminus[a:b].copy()

    def path(self):
        if self._path is None:
            raise ValueError("path recording not enabled")
        return self._path[:self._path_len].copy()

    def rng_state(self):
        r = self._rng
        return (r.s0, r.s1, r.s2, r.s3)


class UrnWalk:
    """Walk simulator driven by per-site urn discrepancy chains.

    ``delta[k]`` stores the current discrepancy minus its initial value
    (0 at k >= 0, 1 at k <= -1), so the array starts at zero everywhere.
    Distributionally identical to :class:`Walk`.
    """

    def __init__(self, lam, loglam, up_interior, up_origin, s0, s1, s2, s3, cap0=4096):
        self.lam = float(lam)
        self.loglam = float(loglam)
        self.up_interior = np.asarray(up_interior, dtype=np.float64)
        self.up_origin = np.asarray(up_origin, dtype=np.float64)
        self._rng = Xoshiro256pp.__new__(Xoshiro256pp)
        self._rng.s0, self._rng.s1, self._rng.s2, self._rng.s3 = s0, s1, s2, s3
        cap0 = max(int(cap0), 16)
        self._cap = cap0
        self._lo = -(cap0 // 2)
        self.delta = np.zeros(cap0, dtype=np.int64)
        self.n = 0
        self.x = 0
        self.visits0 = 1

    def _ensure(self):
        lo, cap, x = self._lo, self._cap, self.x
        if x - 1 >= lo and x + 1 < lo + cap:
            return
        new_cap = cap * 2
        new_lo = lo - (cap // 2) if x - 1 < lo else lo
        d = np.zeros(new_cap, dtype=np.int64)
        d[lo - new_lo:lo - new_lo + cap] = self.delta
        self.delta, self._lo, self._cap = d, new_lo, new_cap

    def _step(self):
        self._ensure()
        x = self.x
        i = int(self.delta[x - self._lo]) + (1 if x < 0 else 0)
        if x == 0:
            p = _urn_up_prob(i, self.up_origin, self.loglam, False)
        else:
            p = _urn_up_prob(i, self.up_interior, self.loglam, True)
        u = self._rng.next_double()
        if u < p:
            self.delta[x - self._lo] += 1
            self.x = x + 1
        else:
            self.delta[x - self._lo] -= 1
            self.x = x - 1
        self.n += 1
        if self.x == 0:
            self.visits0 += 1

    def step_many(self, nsteps: int):
        for _ in range(int(nsteps)):
            self._step()

    def site_discrepancy(self, k: int) -> int:
        i = k - self._lo
        base = 1 if k < 0 else 0
        return (int(self.delta[i]) if 0 <= i < self._cap else 0) + base


# -- batch entry points (one stream per replica) ---------------------------


def endpoint_batch(lam, loglam, pright, nsteps, replicas, seed, stream0):
    """Run `replicas` fresh walks for `nsteps` steps each.

    Returns (x, l_origin, l_here): final position, L(n, 0), L(n, X_n).
    Replica r uses stream stream0 + r.
    """
    xs = np.empty(replicas, dtype=np.int64)
    l0 = np.empty(replicas, dtype=np.int64)
    lx = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        s = derive_state(seed, stream0 + r)
        w = Walk(lam, loglam, pright, *s, cap0=2 * nsteps + 8)
        w.step_many(nsteps)
        xs[r] = w.x
        l0[r] = w.site_L(0)
        lx[r] = w.site_L(w.x)
    return xs, l0, lx


def urn_endpoint_batch(lam, loglam, up_interior, up_origin, nsteps, replicas, seed, stream0):
    """Urn-driven twin of :func:`endpoint_batch`; returns (x, l_origin)."""
    xs = np.empty(replicas, dtype=np.int64)
    l0 = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        s = derive_state(seed, stream0 + r)
        w = UrnWalk(lam, loglam, up_interior, up_origin, *s, cap0=2 * nsteps + 8)
        w.step_many(nsteps)
        xs[r] = w.x
        l0[r] = w.visits0
    return xs, l0


def tau_capped_batch(lam, loglam, pright, k, m, cap, replicas, seed, stream0):
    """Law of tau_{k,m} truncated at `cap` steps, one value per replica."""
    out = np.empty(replicas, dtype=np.int64)
    ks = np.array([k], dtype=np.int64)
    ms = np.array([m], dtype=np.int64)
    for r in range(replicas):
        s = derive_state(seed, stream0 + r)
        w = Walk(lam, loglam, pright, *s, cap0=2 * cap + 8)
        w.set_taus(ks, ms)
        code = w.advance_to_tau(cap)
        out[r] = w.n if code >= 0 else cap
    return out


def dbeta_batch(lam, loglam, up_interior, up_origin, interior, i0, nblues, replicas, seed, stream0):
    """Sample the urn discrepancy at the nblues-th down-step, per replica."""
    table = up_interior if interior else up_origin
    out = np.empty(replicas, dtype=np.int64)
    for r in range(replicas):
        rng = Xoshiro256pp.__new__(Xoshiro256pp)
        rng.s0, rng.s1, rng.s2, rng.s3 = derive_state(seed, stream0 + r)
        i = int(i0)
        blues = 0
        while blues < nblues:
            p = _urn_up_prob(i, table, loglam, interior)
            if rng.next_double() < p:
                i += 1
            else:
                i -= 1
                blues += 1
        out[r] = i
    return out
