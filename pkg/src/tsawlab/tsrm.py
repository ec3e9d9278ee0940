"""Grid simulator for the limiting local-time curves.

A curve started from (x, h) is a two-sided reflected/absorbed Brownian
motion in the space variable: to the right of x it starts at h, is
reflected at 0 on [x, 0] when x < 0 and absorbed at 0 on [max(x, 0), inf);
the left side is the mirror image.  The enclosed area is the limit of the
rescaled inverse local times.

Implementation: Euler scheme with Gaussian increments of variance dx.
Absorption uses the Brownian-bridge crossing probability exp(-2ab/dx)
between grid points, which removes the O(sqrt(dx)) bias of sign-only
checks.  Families of curves evolve with independent increments until they
touch or cross on the grid, then follow the lowest-indexed member's stream.

Everything is vectorized over replicas in fixed-size chunks; chunk c of a
run draws from a Philox stream keyed (seed, tag, c, side), so results do
not depend on worker scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import philox_generator

CHUNK = 16384
DEFAULT_YMAX = 50.0


class UnabsorbedError(RuntimeError):
    """A curve was still positive at the domain cap."""


# ---------------------------------------------------------------------------
# one-sided batch simulation
# ---------------------------------------------------------------------------


def _forward_side(x, h, dx, replicas, seed, tag, side_id, y_stops, ymax):
    """Simulate the right-hand side of curves from (x, h), vectorized.

    Reflection at 0 on [x, 0] when x < 0; absorption at 0 from max(x, 0) on.
    The left-hand side of a curve is this with x -> -x and mirrored stops.

    Returns dict with per-replica arrays:
      endpoint  -- y where the curve was absorbed (nan if it hit ymax alive)
      area      -- trapezoid area from x to absorption (or to ymax)
      values    -- (replicas, len(y_stops)) curve values at the stops
      alive_cap -- bool, True where the curve reached ymax unabsorbed
    """
    x = float(x)
    h = float(h)
    if h < 0:
        raise ValueError("h must be >= 0")
    y_stops = np.asarray(sorted(y_stops), dtype=np.float64)
    if np.any(y_stops < x):
        raise ValueError("forward stops must lie at or right of x")
    nsteps = int(math.ceil((ymax - x) / dx))
    # grid indices of stops (nearest grid point)
    stop_idx = np.rint((y_stops - x) / dx).astype(np.int64)
    reflect_until = int(math.floor((0.0 - x) / dx)) if x < 0 else 0

    endpoint = np.empty(replicas)
    area = np.zeros(replicas)
    alive_cap = np.zeros(replicas, dtype=bool)
    values = np.zeros((replicas, len(y_stops)))

    sqdx = math.sqrt(dx)
    for c0 in range(0, replicas, CHUNK):
        c1 = min(c0 + CHUNK, replicas)
        R = c1 - c0
        rng = philox_generator(seed, tag, side_id, c0 // CHUNK)
        v = np.full(R, h)
        ep = np.full(R, np.nan)
        ar = np.zeros(R)
        # indices of still-active replicas; shrinks as curves are absorbed,
        # so the per-step cost tracks the live population
        live = np.arange(R)
        vlive = np.full(R, h)
        if h == 0.0 and reflect_until == 0:
            # absorbed immediately at the start point
            live = live[:0]
            vlive = vlive[:0]
            ep[:] = x
        stop_ptr = 0
        nstops = len(stop_idx)
        while stop_ptr < nstops and stop_idx[stop_ptr] == 0:
            values[c0:c1, stop_ptr] = v
            stop_ptr += 1
        j = 0
        while j < nsteps and len(live):
            j += 1
            vo = vlive
            vn = vo + rng.standard_normal(len(live)) * sqdx
            if j <= reflect_until:
                vn = np.abs(vn)
                ar[live] += 0.5 * dx * (vo + vn)
                vlive = vn
            else:
                dead = vn <= 0.0
                alive = ~dead
                if alive.any():
                    u = rng.random(int(alive.sum()))
                    cross = u < np.exp(-2.0 * vo[alive] * vn[alive] / dx)
                    dead[np.flatnonzero(alive)[cross]] = True
                ar[live] += np.where(dead, 0.5 * dx * vo, 0.5 * dx * (vo + vn))
                if dead.any():
                    ep[live[dead]] = x + j * dx
                    keep = ~dead
                    live = live[keep]
                    vlive = vn[keep]
                else:
                    vlive = vn
            if stop_ptr < nstops and stop_idx[stop_ptr] == j:
                v[:] = 0.0
                v[live] = vlive
                while stop_ptr < nstops and stop_idx[stop_ptr] == j:
                    values[c0:c1, stop_ptr] = v
                    stop_ptr += 1
        if stop_ptr < nstops:
            v[:] = 0.0
            v[live] = vlive
            while stop_ptr < nstops:
                values[c0:c1, stop_ptr] = v  # zero for absorbed, current if capped
                stop_ptr += 1
        alive_cap[c0:c1][live] = True
        endpoint[c0:c1] = ep
        area[c0:c1] = ar
    return {
        "endpoint": endpoint,
        "area": area,
        "values": values,
        "alive_cap": alive_cap,
        "y_stops": y_stops,
    }


def sample_curves(x, h, dx, replicas, seed, *, tag=0, y_stops=(), ymax=DEFAULT_YMAX):
    """Two-sided curve summaries from (x, h): areas, absorption points, values.

    Returns dict with arrays m_plus, m_minus (nan where capped), area
    (right + left trapezoid area = inverse local time when both absorbed),
    values at requested stops (columns ordered like sorted(y_stops)),
    capped (either side hit ymax alive).
    """
    y_stops = sorted(float(y) for y in y_stops)
    right_stops = [y for y in y_stops if y >= x]
    left_stops = [-y for y in y_stops if y < x]
    right = _forward_side(x, h, dx, replicas, seed, tag, 0, right_stops, ymax)
    left = _forward_side(-x, h, dx, replicas, seed, tag, 1, left_stops, ymax)
    cols = {}
    for k, y in enumerate(right["y_stops"]):
        cols[float(y)] = right["values"][:, k]
    for k, y in enumerate(left["y_stops"]):
        cols[float(-y)] = left["values"][:, k]
    values = np.column_stack([cols[y] for y in y_stops]) if y_stops else np.zeros((replicas, 0))
    return {
        "m_plus": right["endpoint"],
        "m_minus": -left["endpoint"],
        "area": right["area"] + left["area"],
        "values": values,
        "y_stops": np.asarray(y_stops),
        "capped": right["alive_cap"] | left["alive_cap"],
    }


# ---------------------------------------------------------------------------
# single curve with stored grid values
# ---------------------------------------------------------------------------


@dataclass
class LimitCurve:
    """One realized curve on its grid, both sides, with absorption points."""

    x: float
    h: float
    dx: float
    right_values: np.ndarray   # values at x, x+dx, ...
    left_values: np.ndarray    # values at x, x-dx, ...
    m_plus: float              # nan if capped
    m_minus: float
    capped: bool

    def value_at(self, y: float) -> float:
        if y >= self.x:
            j = int(round((y - self.x) / self.dx))
            vals = self.right_values
        else:
            j = int(round((self.x - y) / self.dx))
            vals = self.left_values
        return float(vals[j]) if j < len(vals) else 0.0

    def inverse_local_time(self) -> float:
        """Trapezoid area between the absorption points."""
        if self.capped:
            raise UnabsorbedError(
                f"curve from ({self.x}, {self.h}) not absorbed inside the domain cap;"
                " increase ymax")
        r = np.trapz(self.right_values, dx=self.dx)
        l = np.trapz(self.left_values, dx=self.dx)
        return float(r + l)

    def grid(self):
        ys = np.concatenate([
            self.x - self.dx * np.arange(len(self.left_values) - 1, 0, -1),
            self.x + self.dx * np.arange(len(self.right_values)),
        ])
        vs = np.concatenate([self.left_values[:0:-1], self.right_values])
        return ys, vs


def _side_path(x, h, dx, rng, ymax):
    nsteps = int(math.ceil((ymax - x) / dx))
    reflect_until = int(math.floor((0.0 - x) / dx)) if x < 0 else 0
    vals = [h]
    v = h
    sqdx = math.sqrt(dx)
    if h == 0.0 and reflect_until == 0:
        return np.array(vals), x, False
    for j in range(1, nsteps + 1):
        vn = v + rng.standard_normal() * sqdx
        if j <= reflect_until:
            v = abs(vn)
            vals.append(v)
            continue
        if vn <= 0.0 or rng.random() < math.exp(-2.0 * v * max(vn, 0.0) / dx):
            vals.append(0.0)
            return np.array(vals), x + j * dx, False
        v = vn
        vals.append(v)
    return np.array(vals), math.nan, True


def simulate_single_curve(x, h, dx, seed, *, tag=0, ymax=DEFAULT_YMAX) -> LimitCurve:
    """One two-sided curve with full grid values (small-scale / dump use)."""
    rng_r = philox_generator(seed, tag, 0, 0)
    rng_l = philox_generator(seed, tag, 1, 0)
    rv, m_plus, capped_r = _side_path(float(x), float(h), dx, rng_r, ymax)
    lv, m_minus_m, capped_l = _side_path(-float(x), float(h), dx, rng_l, ymax)
    return LimitCurve(float(x), float(h), dx, rv, lv,
                      m_plus, -m_minus_m if not math.isnan(m_minus_m) else math.nan,
                      capped_r or capped_l)


# ---------------------------------------------------------------------------
# coalescing forward families
# ---------------------------------------------------------------------------


def sample_family_merges(points, dx, replicas, seed, *, tag=0, ymax=DEFAULT_YMAX):
    """Forward-side family summaries: absorption points and pairwise merges.

    ``points`` is a list of (x_i, h_i) with a common x (the general case is
    not needed here).  Curves evolve with independent increments; when two
    touch or cross at a grid point they are merged and follow the
    lowest-indexed stream.  Absorption uses the bridge test.

    Returns dict with m_plus (replicas, N) absorption points, merge_plus
    (replicas, N, N) pairwise merge locations (nan where capped), and the
    per-curve forward trapezoid areas.
    """
    xs = {float(x) for x, _ in points}
    if len(xs) != 1:
        raise ValueError("family sampler requires a common x")
    x = xs.pop()
    hs = [float(h) for _, h in points]
    N = len(hs)
    nsteps = int(math.ceil((ymax - x) / dx))
    reflect_until = int(math.floor((0.0 - x) / dx)) if x < 0 else 0
    sqdx = math.sqrt(dx)

    m_plus = np.full((replicas, N), np.nan)
    merge_plus = np.full((replicas, N, N), np.nan)
    capped = np.zeros(replicas, dtype=bool)
    areas = np.zeros((replicas, N))

    for c0 in range(0, replicas, CHUNK):
        c1 = min(c0 + CHUNK, replicas)
        R = c1 - c0
        rng = philox_generator(seed, tag, 2, c0 // CHUNK)
        # compacted state over replicas with at least one live curve
        live = np.arange(R)
        v = np.tile(hs, (R, 1)).astype(np.float64)   # (L, N)
        owner = np.tile(np.arange(N), (R, 1))        # stream each curve follows
        absorbed = np.zeros((R, N), dtype=bool)
        mp_l = np.full((R, N), np.nan)
        mg_l = np.full((R, N, N), np.nan)
        ar_l = np.zeros((R, N))
        # identical (or inverted) starting heights merge at x itself
        for a in range(N):
            for b in range(a + 1, N):
                hit = v[:, b] <= v[:, a]
                if hit.any():
                    mg_l[hit, a, b] = mg_l[hit, b, a] = x
                    owner[hit, b] = a
                    v[hit, b] = v[hit, a]

        for j in range(1, nsteps + 1):
            if not len(live):
                break
            y = x + j * dx
            # resolve owner chains (b -> a -> 0) before drawing
            for _ in range(2):
                owner = np.take_along_axis(owner, owner, axis=1)
            xi = rng.standard_normal((len(live), N)) * sqdx
            u = rng.random((len(live), N))
            vo = v
            vn = vo + np.take_along_axis(xi, owner, axis=1)
            if j <= reflect_until:
                vn = np.abs(vn)
            # merge before absorption: a curve cannot cross below a live
            # lower-indexed one without coalescing with it
            for a in range(N):
                for b in range(a + 1, N):
                    newly = np.isnan(mg_l[live, a, b]) & (vn[:, b] <= vn[:, a])
                    if newly.any():
                        rows = live[newly]
                        mg_l[rows, a, b] = mg_l[rows, b, a] = y
                        owner[newly, b] = owner[newly, a]
                        vn[newly, b] = vn[newly, a]
            if j > reflect_until:
                vo_own = np.take_along_axis(vo, owner, axis=1)
                vn_own = np.take_along_axis(vn, owner, axis=1)
                u_own = np.take_along_axis(u, owner, axis=1)
                dead = (vn_own <= 0.0) | (u_own < np.exp(
                    -2.0 * vo_own * np.maximum(vn_own, 0.0) / dx))
                dead &= ~absorbed
                # a bridge death above a live lower curve means the pair
                # crossed inside the step: coalescing takes precedence
                for b in range(N - 1, 0, -1):
                    for a in range(b - 1, -1, -1):
                        res = dead[:, b] & ~dead[:, a] & ~absorbed[:, a] \
                            & (vn[:, a] > 0.0) & np.isnan(mg_l[live, a, b]) \
                            & (owner[:, b] == b)
                        if res.any():
                            rows = live[res]
                            mg_l[rows, a, b] = mg_l[rows, b, a] = y
                            owner[res, b] = owner[res, a]
                            vn[res, b] = vn[res, a]
                            dead[res, b] = False
                vn = np.where(dead | absorbed, 0.0, vn)
                for col in range(N):
                    mp_l[live[dead[:, col]], col] = y
                absorbed |= dead
                # a curve dying onto an already-absorbed partner merges here
                for a in range(N):
                    for b in range(a + 1, N):
                        late = np.isnan(mg_l[live, a, b]) & (vn[:, b] <= vn[:, a]) \
                            & absorbed[:, a] & absorbed[:, b]
                        if late.any():
                            rows = live[late]
                            mg_l[rows, a, b] = mg_l[rows, b, a] = y
            ar_l[live] += 0.5 * dx * (vo + vn)
            v = vn
            done = absorbed.all(axis=1)
            if done.any():
                keep = ~done
                live = live[keep]
                v = v[keep]
                owner = owner[keep]
                absorbed = absorbed[keep]
        capped[c0:c1][live] = True
        m_plus[c0:c1] = mp_l
        merge_plus[c0:c1] = mg_l
        areas[c0:c1] = ar_l
    return {"m_plus": m_plus, "merge_plus": merge_plus, "capped": capped,
            "area": areas}


def sample_family(points, dx, replicas, seed, *, tag=0, ymax=DEFAULT_YMAX):
    """Two-sided family: forward merges/endpoints plus total curve areas.

    The backward sides coalesce independently (mirrored run); areas sum the
    two sides, giving each curve's inverse local time when fully absorbed.
    """
    fwd = sample_family_merges(points, dx, replicas, seed, tag=(tag, 0), ymax=ymax)
    mirrored = [(-x, h) for x, h in points]
    bwd = sample_family_merges(mirrored, dx, replicas, seed, tag=(tag, 1), ymax=ymax)
    return {
        "m_plus": fwd["m_plus"],
        "merge_plus": fwd["merge_plus"],
        "m_minus": -bwd["m_plus"],
        "merge_minus": -bwd["merge_plus"],
        "area": fwd["area"] + bwd["area"],
        "capped": fwd["capped"] | bwd["capped"],
    }


# ---------------------------------------------------------------------------
# inverse local times and the geometric-time density
# ---------------------------------------------------------------------------


def sample_inverse_local_time(x, h, dx, replicas, seed, *, tag=0, ymax=DEFAULT_YMAX):
    """Samples of the curve area from (x, h); nan where the cap was hit."""
    out = sample_curves(x, h, dx, replicas, seed, tag=tag, ymax=ymax)
    area = out["area"].copy()
    area[out["capped"]] = np.nan
    return area


def geometric_time_density(a_nodes, h_nodes, rate, replicas, dx, seed,
                           *, tag=0, ymax=DEFAULT_YMAX):
    """Estimate the limiting density rate * E[exp(-rate * t_{a,h})] per node.

    Returns an array of rows (a, h, density, se).  Curves that hit the
    domain cap contribute exp(-rate * accumulated area), an upper bound
    whose error is bounded by their (tiny) weight.
    """
    rows = []
    node_id = 0
    for a in a_nodes:
        for h in h_nodes:
            out = sample_curves(a, h, dx, replicas, seed, tag=(tag, node_id))
            node_id += 1
            w = rate * np.exp(-rate * out["area"])
            rows.append((a, h, float(w.mean()), float(w.std(ddof=1) / math.sqrt(replicas))))
    return np.asarray(rows)
