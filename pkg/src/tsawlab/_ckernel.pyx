# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simulation kernels.

Mirror of ``tsawlab._pykernel`` (same classes, same stream consumption, same
arithmetic); see that module's docstring for the shared conventions.  The hot
loops run without the GIL so replicas can be driven from a thread pool.

Internally the directed-edge counts are interleaved in one array
(``edge[2*(site - lo) + 1]`` = up-crossings, ``edge[2*(site - lo)]`` =
down-crossings) so a step is a single branchless read-modify-write; the
Python twin keeps two plain arrays, which is observationally identical.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp as c_exp
from libc.stdint cimport int8_t, int64_t, uint8_t, uint64_t

cnp.import_array()

IMPL = "compiled"

TABLE_HALF_WIDTH = 64

STATUS_BUDGET = -1
STATUS_NO_PENDING = -2

DEF THW = 64

cdef uint64_t SM64_GAMMA = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t SM64_MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t SM64_MIX2 = <uint64_t>0x94D049BB133111EB
cdef uint64_t STREAM_SALT = <uint64_t>0xD1B54A32D192ED03


cdef inline uint64_t _rotl(uint64_t v, int k) nogil:
    return (v << k) | (v >> (64 - k))


cdef struct XoState:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef inline uint64_t _xo_next(XoState* st) nogil:
    cdef uint64_t result = _rotl(st.s0 + st.s3, 23) + st.s0
    cdef uint64_t t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = _rotl(st.s3, 45)
    return result


cdef inline double _xo_double(XoState* st) nogil:
    return <double>(_xo_next(st) >> 11) * 1.1102230246251565e-16


cdef inline uint64_t _sm64(uint64_t* z) nogil:
    z[0] = z[0] + SM64_GAMMA
    cdef uint64_t x = z[0]
    x = (x ^ (x >> 30)) * SM64_MIX1
    x = (x ^ (x >> 27)) * SM64_MIX2
    return x ^ (x >> 31)


cdef inline void _derive(uint64_t seed, uint64_t stream, XoState* st) nogil:
    cdef uint64_t z = seed ^ (stream * STREAM_SALT + <uint64_t>1)
    st.s0 = _sm64(&z)
    st.s1 = _sm64(&z)
    st.s2 = _sm64(&z)
    st.s3 = _sm64(&z)
    if st.s0 == 0 and st.s1 == 0 and st.s2 == 0 and st.s3 == 0:
        st.s0 = SM64_GAMMA


cdef inline double _right_prob(int64_t w, const double* pright, double loglam) nogil:
    if -THW <= w <= THW:
        return pright[w + THW]
    return 1.0 / (1.0 + c_exp(w * loglam))


cdef inline double _urn_up_prob(int64_t i, const double* table, double loglam,
                                bint interior) nogil:
    cdef double e
    if -THW <= i <= THW:
        return table[i + THW]
    e = <double>(1 - 2 * i) if interior else <double>(-2 * i)
    return 1.0 / (1.0 + c_exp(e * loglam))


# walk-loop exit reasons (internal)
DEF RUN_GROW = 1
DEF RUN_BUDGET = 2
DEF RUN_FIRED = 3


cdef class Walk:
    """Compiled twin of ``_pykernel.Walk``."""

    cdef public double lam
    cdef double loglam
    cdef double[::1] pright
    cdef XoState rng
    cdef int64_t[::1] edge_v
    cdef object _edge
    cdef int64_t lo, cap
    cdef public int64_t n, x, xmin, xmax, seg_min, seg_max
    cdef public int64_t seg_min_last, seg_max_last
    cdef int64_t[::1] spec_k
    cdef int64_t[::1] spec_m
    cdef uint8_t[::1] spec_fired
    cdef object _spec_arrays
    cdef object _fired_arr
    cdef Py_ssize_t nspec
    cdef bint init_checked
    cdef int8_t[::1] path_v
    cdef object _path
    cdef public int64_t path_len
    cdef int64_t path_cap

    def __init__(self, lam, loglam, pright, s0, s1, s2, s3, cap0=4096, path_cap=0):
        self.lam = lam
        self.loglam = loglam
        self.pright = np.ascontiguousarray(pright, dtype=np.float64)
        self.rng.s0 = <uint64_t>s0
        self.rng.s1 = <uint64_t>s1
        self.rng.s2 = <uint64_t>s2
        self.rng.s3 = <uint64_t>s3
        cap0 = max(int(cap0), 16)
        self.cap = cap0
        self.lo = -(cap0 // 2)
        self._edge = np.zeros(2 * cap0, dtype=np.int64)
        self.edge_v = self._edge
        self.n = 0
        self.x = 0
        self.xmin = self.xmax = 0
        self.seg_min = self.seg_max = 0
        self.seg_min_last = self.seg_max_last = 0
        self.nspec = 0
        self.init_checked = False
        self.path_cap = int(path_cap)
        self.path_len = 0
        if self.path_cap > 0:
            self._path = np.zeros(self.path_cap, dtype=np.int8)
            self.path_v = self._path
        else:
            self._path = None

    def set_taus(self, ks, ms):
        ks = np.ascontiguousarray(ks, dtype=np.int64)
        ms = np.ascontiguousarray(ms, dtype=np.int64)
        if len(set(zip(ks.tolist(), ms.tolist()))) != len(ks):
            raise ValueError("stop specs must be distinct")
        self._spec_arrays = (ks.copy(), ms.copy())
        self.spec_k = self._spec_arrays[0]
        self.spec_m = self._spec_arrays[1]
        self._fired_arr = np.zeros(len(ks), dtype=np.uint8)
        self.spec_fired = self._fired_arr
        self.nspec = len(ks)
        self.init_checked = False

    cdef void _grow(self):
        cdef int64_t new_cap = self.cap * 2
        cdef int64_t new_lo = self.lo - (self.cap // 2) if self.x - 1 < self.lo else self.lo
        edge = np.zeros(2 * new_cap, dtype=np.int64)
        cdef int64_t off = self.lo - new_lo
        edge[2 * off:2 * off + 2 * self.cap] = self._edge
        self._edge = edge
        self.edge_v = edge
        self.lo, self.cap = new_lo, new_cap

    cdef int _run(self, int64_t target_n, bint check_specs, bint record,
                  Py_ssize_t* fired) nogil:
        """Step until target_n, a spec fires, or the array needs growth."""
        cdef int64_t* edge = &self.edge_v[0]
        cdef const double* pr = &self.pright[0]
        cdef double loglam = self.loglam
        cdef int64_t lo = self.lo, hi = self.lo + self.cap
        cdef int64_t n = self.n, x = self.x
        cdef int64_t xmin = self.xmin, xmax = self.xmax
        cdef int64_t smin = self.seg_min, smax = self.seg_max
        cdef int64_t plen = self.path_len
        cdef int8_t* path = NULL
        cdef XoState rng = self.rng
        cdef int64_t w, L, idx, g
        cdef double p
        cdef Py_ssize_t j
        cdef int out = RUN_BUDGET
        if record:
            path = &self.path_v[0]
        while n < target_n:
            if x - 1 < lo or x + 1 >= hi:
                out = RUN_GROW
                break
            idx = (x - lo) << 1
            w = (edge[idx - 1] + edge[idx]) - (edge[idx + 1] + edge[idx + 2])
            p = _right_prob(w, pr, loglam)
            g = <int64_t>(_xo_double(&rng) < p)
            edge[idx | g] += 1
            x += 2 * g - 1
            n += 1
            if record:
                path[plen] = <int8_t>(2 * g - 1)
                plen += 1
            if x < xmin:
                xmin = x
            elif x > xmax:
                xmax = x
            if x < smin:
                smin = x
            elif x > smax:
                smax = x
            if check_specs:
                idx = (x - lo) << 1
                L = edge[idx] + edge[idx + 1] + 1
                for j in range(self.nspec):
                    if self.spec_fired[j] == 0 and self.spec_k[j] == x \
                            and L == self.spec_m[j] + 1:
                        self.spec_fired[j] = 1
                        fired[0] = j
                        out = RUN_FIRED
                        break
                if out == RUN_FIRED:
                    break
        self.n, self.x = n, x
        self.xmin, self.xmax = xmin, xmax
        self.seg_min, self.seg_max = smin, smax
        self.path_len = plen
        self.rng = rng
        return out

    def step_many(self, nsteps):
        cdef int64_t target = self.n + <int64_t>nsteps
        cdef Py_ssize_t fired = -1
        cdef bint record = self.path_cap > 0
        cdef int out
        if record and self.path_len + <int64_t>nsteps > self.path_cap:
            raise ValueError("path buffer too small")
        while True:
            with nogil:
                out = self._run(target, False, record, &fired)
            if out == RUN_GROW:
                self._grow()
            else:
                return

    def advance_to_tau(self, budget):
        cdef int64_t target = <int64_t>budget
        cdef Py_ssize_t fired = -1
        cdef Py_ssize_t j
        cdef bint record = self.path_cap > 0
        cdef int out
        if not self.init_checked:
            self.init_checked = True
            j = self._check_specs_here()
            if j >= 0:
                self._fire_reset()
                return j
        if self.nspec == 0 or bool(np.all(np.asarray(self._fired_arr) != 0)):
            return STATUS_NO_PENDING
        if record and target > self.path_cap:
            raise ValueError("path buffer too small")
        while True:
            with nogil:
                out = self._run(target, True, record, &fired)
            if out == RUN_GROW:
                self._grow()
                continue
            if out == RUN_FIRED:
                self._fire_reset()
                return fired
            return STATUS_BUDGET

    cdef Py_ssize_t _check_specs_here(self):
        cdef int64_t idx = (self.x - self.lo) << 1
        cdef int64_t L = self.edge_v[idx] + self.edge_v[idx + 1] + 1
        cdef Py_ssize_t j
        for j in range(self.nspec):
            if self.spec_fired[j] == 0 and self.spec_k[j] == self.x \
                    and L == self.spec_m[j] + 1:
                self.spec_fired[j] = 1
                return j
        return -1

    cdef void _fire_reset(self):
        self.seg_min_last = self.seg_min
        self.seg_max_last = self.seg_max
        self.seg_min = self.x
        self.seg_max = self.x

    def site_eplus(self, k):
        cdef int64_t i = <int64_t>k - self.lo
        return int(self.edge_v[2 * i + 1]) if 0 <= i < self.cap else 0

    def site_eminus(self, k):
        cdef int64_t i = <int64_t>k - self.lo
        return int(self.edge_v[2 * i]) if 0 <= i < self.cap else 0

    def site_L(self, k):
        return self.site_eplus(k) + self.site_eminus(k) + (1 if self.x == k else 0)

    def profile(self):
        a = self.xmin - self.lo
        b = self.xmax - self.lo + 1
        return self.xmin, self._edge[2 * a + 1:2 * b:2].copy(), self._edge[2 * a:2 * b:2].copy()

    def path(self):
        if self._path is None:
            raise ValueError("path recording not enabled")
        return self._path[:self.path_len].copy()

    def rng_state(self):
        return (self.rng.s0, self.rng.s1, self.rng.s2, self.rng.s3)


cdef class UrnWalk:
    """Compiled twin of ``_pykernel.UrnWalk``."""

    cdef public double lam
    cdef double loglam
    cdef double[::1] up_interior
    cdef double[::1] up_origin
    cdef XoState rng
    cdef int64_t[::1] delta_v
    cdef object _delta
    cdef int64_t lo, cap
    cdef public int64_t n, x, visits0

    def __init__(self, lam, loglam, up_interior, up_origin, s0, s1, s2, s3, cap0=4096):
        self.lam = lam
        self.loglam = loglam
        self.up_interior = np.ascontiguousarray(up_interior, dtype=np.float64)
        self.up_origin = np.ascontiguousarray(up_origin, dtype=np.float64)
        self.rng.s0 = <uint64_t>s0
        self.rng.s1 = <uint64_t>s1
        self.rng.s2 = <uint64_t>s2
        self.rng.s3 = <uint64_t>s3
        cap0 = max(int(cap0), 16)
        self.cap = cap0
        self.lo = -(cap0 // 2)
        self._delta = np.zeros(cap0, dtype=np.int64)
        self.delta_v = self._delta
        self.n = 0
        self.x = 0
        self.visits0 = 1

    cdef void _grow(self):
        cdef int64_t new_cap = self.cap * 2
        cdef int64_t new_lo = self.lo - (self.cap // 2) if self.x - 1 < self.lo else self.lo
        d = np.zeros(new_cap, dtype=np.int64)
        d[self.lo - new_lo:self.lo - new_lo + self.cap] = self._delta
        self._delta = d
        self.delta_v = d
        self.lo, self.cap = new_lo, new_cap

    cdef int _run(self, int64_t target_n) nogil:
        cdef int64_t* d = &self.delta_v[0]
        cdef const double* pint = &self.up_interior[0]
        cdef const double* porg = &self.up_origin[0]
        cdef double loglam = self.loglam
        cdef int64_t lo = self.lo, hi = self.lo + self.cap
        cdef int64_t n = self.n, x = self.x, v0 = self.visits0
        cdef XoState rng = self.rng
        cdef int64_t i, g
        cdef double p
        cdef int out = RUN_BUDGET
        while n < target_n:
            if x - 1 < lo or x + 1 >= hi:
                out = RUN_GROW
                break
            i = d[x - lo] + (1 if x < 0 else 0)
            if x == 0:
                p = _urn_up_prob(i, porg, loglam, False)
            else:
                p = _urn_up_prob(i, pint, loglam, True)
            g = <int64_t>(_xo_double(&rng) < p)
            d[x - lo] += 2 * g - 1
            x += 2 * g - 1
            n += 1
            if x == 0:
                v0 += 1
        self.n, self.x, self.visits0 = n, x, v0
        self.rng = rng
        return out

    def step_many(self, nsteps):
        cdef int64_t target = self.n + <int64_t>nsteps
        cdef int out
        while True:
            with nogil:
                out = self._run(target)
            if out == RUN_GROW:
                self._grow()
            else:
                return

    def site_discrepancy(self, k):
        cdef int64_t i = <int64_t>k - self.lo
        base = 1 if k < 0 else 0
        return (int(self.delta_v[i]) if 0 <= i < self.cap else 0) + base


# -- batch entry points -----------------------------------------------------


def endpoint_batch(lam, loglam, pright, nsteps, replicas, seed, stream0):
    cdef int64_t R = <int64_t>replicas
    cdef int64_t N = <int64_t>nsteps
    xs = np.empty(R, dtype=np.int64)
    l0 = np.empty(R, dtype=np.int64)
    lx = np.empty(R, dtype=np.int64)
    cdef int64_t[::1] xs_v = xs, l0_v = l0, lx_v = lx
    cdef double[::1] pr_v = np.ascontiguousarray(pright, dtype=np.float64)
    buf = np.zeros(2 * (2 * N + 4), dtype=np.int64)
    cdef int64_t[::1] buf_v = buf
    cdef double ll = loglam
    cdef uint64_t sd = <uint64_t>seed, st0 = <uint64_t>stream0
    cdef int64_t r, j, n, x, lo, w, idx, g
    cdef int64_t width = 2 * (2 * N + 4)
    cdef XoState rng
    cdef const double* pr = &pr_v[0]
    cdef int64_t* edge
    with nogil:
        lo = -(N + 2)
        edge = &buf_v[0]
        for r in range(R):
            for j in range(width):
                edge[j] = 0
            _derive(sd, st0 + <uint64_t>r, &rng)
            x = 0
            for n in range(N):
                idx = (x - lo) << 1
                w = (edge[idx - 1] + edge[idx]) - (edge[idx + 1] + edge[idx + 2])
                g = <int64_t>(_xo_double(&rng) < _right_prob(w, pr, ll))
                edge[idx | g] += 1
                x += 2 * g - 1
            xs_v[r] = x
            idx = (-lo) << 1
            l0_v[r] = edge[idx] + edge[idx + 1] + (1 if x == 0 else 0)
            idx = (x - lo) << 1
            lx_v[r] = edge[idx] + edge[idx + 1] + 1
    return xs, l0, lx


def urn_endpoint_batch(lam, loglam, up_interior, up_origin, nsteps, replicas, seed, stream0):
    cdef int64_t R = <int64_t>replicas
    cdef int64_t N = <int64_t>nsteps
    xs = np.empty(R, dtype=np.int64)
    l0 = np.empty(R, dtype=np.int64)
    cdef int64_t[::1] xs_v = xs, l0_v = l0
    cdef double[::1] pint_v = np.ascontiguousarray(up_interior, dtype=np.float64)
    cdef double[::1] porg_v = np.ascontiguousarray(up_origin, dtype=np.float64)
    buf = np.zeros(2 * N + 4, dtype=np.int64)
    cdef int64_t[::1] buf_v = buf
    cdef double ll = loglam
    cdef uint64_t sd = <uint64_t>seed, st0 = <uint64_t>stream0
    cdef int64_t r, j, n, x, lo, i, v0, g
    cdef int64_t width = 2 * N + 4
    cdef XoState rng
    cdef const double* pint = &pint_v[0]
    cdef const double* porg = &porg_v[0]
    cdef int64_t* d
    cdef double p
    with nogil:
        lo = -(N + 2)
        d = &buf_v[0]
        for r in range(R):
            for j in range(width):
                d[j] = 0
            _derive(sd, st0 + <uint64_t>r, &rng)
            x = 0
            v0 = 1
            for n in range(N):
                i = d[x - lo] + (1 if x < 0 else 0)
                if x == 0:
                    p = _urn_up_prob(i, porg, ll, False)
                else:
                    p = _urn_up_prob(i, pint, ll, True)
                g = <int64_t>(_xo_double(&rng) < p)
                d[x - lo] += 2 * g - 1
                x += 2 * g - 1
                if x == 0:
                    v0 += 1
            xs_v[r] = x
            l0_v[r] = v0
    return xs, l0


def tau_capped_batch(lam, loglam, pright, k, m, cap, replicas, seed, stream0):
    cdef int64_t R = <int64_t>replicas
    cdef int64_t N = <int64_t>cap
    cdef int64_t kk = <int64_t>k, mm = <int64_t>m
    out = np.empty(R, dtype=np.int64)
    cdef int64_t[::1] out_v = out
    cdef double[::1] pr_v = np.ascontiguousarray(pright, dtype=np.float64)
    buf = np.zeros(2 * (2 * N + 4), dtype=np.int64)
    cdef int64_t[::1] buf_v = buf
    cdef double ll = loglam
    cdef uint64_t sd = <uint64_t>seed, st0 = <uint64_t>stream0
    cdef int64_t r, j, n, x, lo, w, tau, idx, g
    cdef int64_t width = 2 * (2 * N + 4)
    cdef XoState rng
    cdef const double* pr = &pr_v[0]
    cdef int64_t* edge
    with nogil:
        lo = -(N + 2)
        edge = &buf_v[0]
        for r in range(R):
            for j in range(width):
                edge[j] = 0
            _derive(sd, st0 + <uint64_t>r, &rng)
            x = 0
            tau = N
            if kk == 0 and mm == 0:
                tau = 0
            else:
                for n in range(N):
                    idx = (x - lo) << 1
                    w = (edge[idx - 1] + edge[idx]) - (edge[idx + 1] + edge[idx + 2])
                    g = <int64_t>(_xo_double(&rng) < _right_prob(w, pr, ll))
                    edge[idx | g] += 1
                    x += 2 * g - 1
                    idx = (x - lo) << 1
                    if x == kk and edge[idx] + edge[idx + 1] + 1 == mm + 1:
                        tau = n + 1
                        break
            out_v[r] = tau
    return out


def dbeta_batch(lam, loglam, up_interior, up_origin, interior, i0, nblues, replicas, seed, stream0):
    cdef int64_t R = <int64_t>replicas
    cdef int64_t NB = <int64_t>nblues
    cdef bint isint = bool(interior)
    out = np.empty(R, dtype=np.int64)
    cdef int64_t[::1] out_v = out
    cdef double[::1] tab_v = np.ascontiguousarray(
        up_interior if isint else up_origin, dtype=np.float64)
    cdef double ll = loglam
    cdef uint64_t sd = <uint64_t>seed, st0 = <uint64_t>stream0
    cdef int64_t r, i, blues, start = <int64_t>i0
    cdef XoState rng
    cdef const double* tab = &tab_v[0]
    with nogil:
        for r in range(R):
            _derive(sd, st0 + <uint64_t>r, &rng)
            i = start
            blues = 0
            while blues < NB:
                if _xo_double(&rng) < _urn_up_prob(i, tab, ll, isint):
                    i += 1
                else:
                    i -= 1
                    blues += 1
            out_v[r] = i
    return out
