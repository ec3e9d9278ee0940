"""Experiment runner: configuration, replica parallelism, reports.

Every experiment is deterministic given (seed, parameters): replica r draws
from stream r (walk kernels) or from a Philox key (seed, tag, r), results
are folded in replica order, and reports carry no wall-clock data, so a
rerun with any worker count is byte-identical.

Heavy sample stages can be cached: arrays are stored under a digest of the
parameters that determine them (package version included), so re-running an
experiment with the same config reuses the samples and recomputes the gates.
Set ``--cache DIR`` or TSAWLAB_CACHE.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels, oracle, rayknight, stats, tsrm, urn, walk
from .rng import philox_generator

DEFAULT_POINTS = ((-1.0, 1.0),)
KS_FLOOR = 1e-3          # per-family p-value floor from the gates
TV_GATE = 0.01
LOG_TV_FLOOR = 1e-15     # double-precision floor for log-TV regression


@dataclass
class ExperimentConfig:
    experiment: str
    lam: float = 0.5
    n: int = 10 ** 4
    replicas: int = 10 ** 4
    seed: int = 1
    dx: float = 1e-4
    points: tuple = DEFAULT_POINTS
    t_grid: tuple | None = None
    horizon: float = 20.0
    budget: int | None = None
    ymax: float = 50.0
    ref_replicas: int = 10 ** 5
    workers: int | None = None
    out: str | None = None
    cache: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        for name in ("n", "replicas", "ref_replicas"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.dx <= 0 or self.ymax <= 0 or self.horizon <= 0:
            raise ValueError("dx, ymax and horizon must be positive")
        self.points = tuple((float(x), float(h)) for x, h in self.points)
        if self.t_grid is not None:
            self.t_grid = tuple(float(t) for t in self.t_grid)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["points"] = [list(p) for p in self.points]
        d["t_grid"] = list(self.t_grid) if self.t_grid is not None else None
        return d

    def report_params(self) -> dict:
        """Config as recorded in reports: execution details (worker count,
        output/cache paths) are excluded so reruns are byte-identical."""
        d = self.to_dict()
        for volatile in ("workers", "out", "cache"):
            d.pop(volatile, None)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "points" in d and d["points"] is not None:
            d["points"] = tuple(tuple(p) for p in d["points"])
        if d.get("t_grid") is not None:
            d["t_grid"] = tuple(d["t_grid"])
        return cls(**d)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def effective_workers(self) -> int:
        if self.workers:
            return self.workers
        env = os.environ.get("TSAWLAB_WORKERS")
        if env:
            return max(1, int(env))
        return max(1, os.cpu_count() or 1)


@dataclass
class ExperimentReport:
    name: str
    params: dict
    statistics: list = field(default_factory=list)
    gates: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates)

    def stat(self, name, value, **kw):
        entry = {"name": name, "value": _jsonable(value)}
        entry.update({k: _jsonable(v) for k, v in kw.items()})
        self.statistics.append(entry)

    def gate(self, name, passed, **kw):
        entry = {"name": name, "passed": bool(passed)}
        entry.update({k: _jsonable(v) for k, v in kw.items()})
        self.gates.append(entry)

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "params": self.params,
            "statistics": self.statistics,
            "gates": self.gates,
            "pass": self.passed,
            "artifacts": self.artifacts,
            "version": __version__,
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


# -- cache of heavy deterministic sample stages --------------------------------


def _cache_dir(cfg: ExperimentConfig):
    return cfg.cache or os.environ.get("TSAWLAB_CACHE") or None


def _cached_arrays(cfg: ExperimentConfig, stage: str, key: dict, builder):
    """Build (or load) a dict of numpy arrays determined by ``key``."""
    cache = _cache_dir(cfg)
    digest = hashlib.sha256(
        json.dumps({"stage": stage, "version": __version__, **_jsonable(key)},
                   sort_keys=True).encode()).hexdigest()[:24]
    if cache:
        path = os.path.join(cache, f"{stage}-{digest}.npz")
        if os.path.exists(path):
            with np.load(path) as z:
                return {k: z[k] for k in z.files}
    out = builder()
    if cache:
        os.makedirs(cache, exist_ok=True)
        path = os.path.join(cache, f"{stage}-{digest}.npz")
        tmp = path + ".tmp.npz"
        np.savez_compressed(tmp, **out)
        os.replace(tmp, path)
    return out


def _replica_map(fn, n_replicas: int, workers: int):
    """Run fn(replica_index) for each replica; results in index order."""
    if workers <= 1:
        return [fn(r) for r in range(n_replicas)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n_replicas)))


def _sigma_of(lam: float) -> float:
    return math.sqrt(urn.stationary_laws(lam).sigma2)


def _write(cfg: ExperimentConfig, name: str, text: str) -> str | None:
    if not cfg.out:
        return None
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w") as f:
        f.write(text)
    return name


# ==============================================================================
# experiments
# ==============================================================================


def exp_sigma(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("sigma", cfg.report_params())
    laws = urn.stationary_laws(cfg.lam)
    M = laws.M
    s_m = urn.sigma2_series(cfg.lam, M)
    s_2m = urn.sigma2_series(cfg.lam, 2 * M)
    resid = urn.detailed_balance_residual(laws)
    rep.stat("sigma2", laws.sigma2, M=M)
    rep.stat("sigma2_2M", s_2m)
    rep.stat("detailed_balance_residual", resid)
    rep.gate("sigma2_truncation_stable", abs(s_m - s_2m) < 1e-12,
             diff=abs(s_m - s_2m), tol=1e-12)
    rep.gate("detailed_balance", resid < 1e-12, residual=resid, tol=1e-12)
    for v, total in (("pi", laws.pi.sum()), ("rho", laws.rho.sum()),
                     ("pi_tilde", laws.pi_tilde.sum())):
        rep.gate(f"{v}_normalized", abs(total - 1.0) < 1e-12, total=total)
    sym = float(np.abs(laws.pi - laws.pi[::-1]).max())
    rep.gate("pi_symmetric", sym == 0.0, max_asym=sym)
    lines = ["x,pi,rho,pi_tilde"]
    for i, x in enumerate(laws.states):
        lines.append(f"{x},{laws.pi[i]!r},{laws.rho[i]!r},{laws.pi_tilde[i]!r}")
    art = _write(cfg, "stationary_laws.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["stationary_laws"] = art
    return rep


def exp_enumerate(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("enumerate", cfg.report_params())
    nsteps = int(cfg.extra.get("steps", 12))
    pe = oracle.enumerate_paths(cfg.lam, nsteps)
    law = pe.law_of_position()
    total = float(pe.prob.sum())
    rep.stat("total_probability", total)
    rep.gate("total_probability_one", abs(total - 1.0) < 1e-12, total=total)
    d = law.as_dict()
    asym = max(abs(d[k] - d.get(-k, 0.0)) for k in d)
    rep.gate("position_law_symmetric", asym < 1e-13, max_asym=asym)
    lines = ["outcome,probability"]
    for o, p in zip(law.outcomes, law.probabilities):
        lines.append(f"{int(o)},{float(p)!r}")
    art = _write(cfg, f"position_law_{nsteps}.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["position_law"] = art
    return rep


def exp_exact_law(cfg: ExperimentConfig) -> ExperimentReport:
    """TV between simulated and enumerated laws, both walk engines."""
    rep = ExperimentReport("exact-law", cfg.report_params())
    nsteps = int(cfg.extra.get("steps", 12))
    lams = cfg.extra.get("lambdas", [0.3, 0.5, 0.7])
    for i, lam in enumerate(lams):
        pe = oracle.enumerate_paths(lam, nsteps)
        law_x = pe.law_of_position()
        law_joint = pe.law_of_position_and_local_time(nsteps, 0)
        xs, l0, _ = kernels.endpoint_batch(lam, nsteps, cfg.replicas, cfg.seed,
                                           stream0=(1 + i) << 40)
        uxs, ul0 = kernels.urn_endpoint_batch(lam, nsteps, cfg.replicas, cfg.seed,
                                              stream0=(11 + i) << 40)
        tv_walk = stats.empirical_tv_to_law(xs, law_x)
        tv_urn = stats.empirical_tv_to_law(uxs, law_x)
        tv_joint = stats.empirical_tv_to_law(xs * 64 + l0, law_joint)
        tv_joint_urn = stats.empirical_tv_to_law(uxs * 64 + ul0, law_joint)
        rep.stat(f"tv_walk_lam{lam}", tv_walk)
        rep.stat(f"tv_urn_lam{lam}", tv_urn)
        rep.stat(f"tv_joint_walk_lam{lam}", tv_joint)
        rep.stat(f"tv_joint_urn_lam{lam}", tv_joint_urn)
        rep.gate(f"walk_matches_enumeration_lam{lam}", tv_walk < TV_GATE, tv=tv_walk)
        rep.gate(f"urn_matches_enumeration_lam{lam}", tv_urn < TV_GATE, tv=tv_urn)
        rep.gate(f"joint_walk_lam{lam}", tv_joint < TV_GATE, tv=tv_joint)
        rep.gate(f"joint_urn_lam{lam}", tv_joint_urn < TV_GATE, tv=tv_joint_urn)
    return rep


def exp_verify_identities(cfg: ExperimentConfig) -> ExperimentReport:
    """Exact integer identities on recorded small-scale walks."""
    rep = ExperimentReport("verify-identities", cfg.report_params())
    sigma = _sigma_of(cfg.lam)
    budget = int(cfg.extra.get("steps", 200_000))
    reps = int(cfg.extra.get("walks", max(2, min(cfg.replicas, 20))))
    checks = {"decomposition": 0, "sum_rule": 0, "area": 0,
              "duality": 0, "backpath": 0, "edge_structure": 0}
    violations = dict.fromkeys(checks, 0)

    params = walk.WalkParams(cfg.lam, cfg.seed)
    for r in range(reps):
        # a few stop specs give snapshots for the area identity
        rng = philox_generator(cfg.seed, 23, r)
        ks, ms = _random_specs(rng, budget)
        res = walk.run_until_multi_tau(params, list(zip(ks, ms)),
                                       stream=(7 << 40) + r, record_path=True,
                                       budget=budget)
        for snap in res.snapshots:
            checks["area"] += 1
            if int(snap.local_times().sum()) != snap.n + 1:
                violations["area"] += 1
        st = res.walk
        st.step(budget - st.n)
        pos = st.positions()
        offset, ep, em = st.profile()
        # edge structure along the whole profile
        checks["edge_structure"] += len(ep)
        d = ep - np.concatenate([em[1:], [0]])
        violations["edge_structure"] += int(np.count_nonzero(np.abs(d) > 1))
        # decomposition L = eplus + eminus + [x = k] against trajectory recount
        for t in sorted(rng.choice(budget, size=3, replace=False).tolist()):
            xs = pos[:t + 1]
            lo, hi = xs.min(), xs.max()
            counts = np.bincount((xs - lo).astype(np.int64))
            upi, downi = _edge_counts_from_path(pos, t, lo, hi)
            here = pos[t]
            for k in range(lo, hi + 1):
                L_direct = int(counts[k - lo])
                L_decomp = upi[k - lo] + downi[k - lo] + (1 if here == k else 0)
                checks["decomposition"] += 1
                if L_direct != L_decomp:
                    violations["decomposition"] += 1
            checks["sum_rule"] += 1
            if int(counts.sum()) != t + 1:
                violations["sum_rule"] += 1
        # duality tuples on the recorded trajectory
        index = rayknight.TrajectoryIndex(pos)
        tuples_done = 0
        while tuples_done < int(cfg.extra.get("duality_tuples", 700)):
            k, m, j, lp = _random_duality_tuple(rng, pos)
            try:
                bp = index.backpath_identity_holds(k, m, j)
            except ValueError:
                continue  # indeterminate on this finite path; resample
            tuples_done += 1
            checks["duality"] += 1
            if not index.duality_holds(k, m, j, lp):
                violations["duality"] += 1
            checks["backpath"] += 1
            if not bp:
                violations["backpath"] += 1
        if r == 0 and cfg.out:
            rep.artifacts["profile"] = _write(cfg, "profile.csv", _profile_csv_text(st))
            rep.artifacts["path"] = _write(cfg, "path.csv", _path_csv_text(pos))
    for name in checks:
        rep.stat(f"checks_{name}", checks[name])
        rep.gate(f"no_{name}_violations", violations[name] == 0,
                 checks=checks[name], violations=violations[name])
    total = sum(checks.values())
    rep.stat("total_checks", total)
    rep.gate("enough_checks", total >= 10_000, total=total)
    # scaled duality events, a la the curve-level statement
    rep.stat("sigma", sigma)
    return rep


def _random_specs(rng, budget):
    span = max(4, int(budget ** 0.4))
    ks, ms, seen = [], [], set()
    while len(ks) < 6:
        k = int(rng.integers(-span, span + 1))
        m = int(rng.integers(0, max(2, span // 2)))
        if (k, m) not in seen:
            seen.add((k, m))
            ks.append(k)
            ms.append(m)
    return np.array(ks, dtype=np.int64), np.array(ms, dtype=np.int64)


def _edge_counts_from_path(pos, t, lo, hi):
    width = hi - lo + 1
    up = np.zeros(width, dtype=np.int64)
    down = np.zeros(width, dtype=np.int64)
    a = pos[:t]
    b = pos[1:t + 1]
    right = b > a
    np.add.at(up, (a[right] - lo), 1)
    np.add.at(down, (a[~right] - lo), 1)
    return up, down


def _random_duality_tuple(rng, pos):
    """(k, m, j, l') whose stopping times are both observed on the path."""
    lo, hi = int(pos.min()), int(pos.max())
    counts = np.bincount((pos - lo).astype(np.int64))
    while True:
        k, j = rng.integers(lo, hi + 1, size=2)
        if k == j or counts[k - lo] < 1 or counts[j - lo] < 1:
            continue
        m = int(rng.integers(0, counts[k - lo]))
        lp = int(rng.integers(0, counts[j - lo]))
        return int(k), m, int(j), lp


def exp_urn_mixing(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("urn-mixing", cfg.report_params())
    n_max = int(cfg.extra.get("n_max", 60))
    curve = urn.tv_mixing_curve(cfg.lam, "interior", int(cfg.extra.get("i0", 1)), n_max)
    tv60 = float(curve[min(60, n_max), 1])
    rep.stat("tv_at_60", tv60)
    rep.gate("tv_below_1e-3_by_60", tv60 < 1e-3, tv=tv60)
    # log-TV regression over n in [5, 30], above the double-precision floor
    ns = curve[5:31, 0]
    tvs = curve[5:31, 1]
    ok = tvs > LOG_TV_FLOOR
    slope, intercept = np.polyfit(ns[ok], np.log(tvs[ok]), 1)
    fitted = slope * ns[ok] + intercept
    resid = np.log(tvs[ok]) - fitted
    r2 = 1.0 - float(np.sum(resid ** 2) / np.sum((np.log(tvs[ok]) - np.log(tvs[ok]).mean()) ** 2))
    rep.stat("log_tv_slope", slope, points_used=int(ok.sum()))
    rep.stat("log_tv_r2", r2)
    rep.gate("log_tv_linear", r2 > 0.9, r2=r2)
    rep.gate("tv_rate_negative", slope < 0, slope=slope)
    # envelope check: tv(n) <= C3 exp(-C2 n) with fitted constants
    env = np.exp(intercept + slope * ns[ok]) * (1.0 + 1e-6)
    rep.gate("tv_within_fitted_envelope",
             bool(np.all(tvs[ok] <= np.maximum(env, LOG_TV_FLOOR) * 3.0)),
             max_ratio=float(np.max(tvs[ok] / env)))
    tail = np.all(np.diff(curve[5:, 1]) <= 1e-15)
    rep.gate("tv_eventually_decreasing", bool(tail))
    lines = ["n,tv"] + [f"{int(a)},{b!r}" for a, b in curve]
    art = _write(cfg, "tv_mixing.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["tv_mixing"] = art
    return rep


def exp_tail_bounds(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("tail-bounds", cfg.report_params())
    n_max = int(cfg.extra.get("n_max", 20))
    y_max = int(cfg.extra.get("y_max", 10))
    report = urn.tail_ratio_check(cfg.lam, n_max=n_max, y_max=y_max)
    rep.stat("ratio_checks", len(report.rows))
    rep.stat("max_margin", report.max_margin)
    rep.gate("all_tail_ratios_within_bounds", report.violations == 0,
             violations=report.violations, max_margin=report.max_margin)
    g = urn.gaussian_tail_check(cfg.lam, n_max=min(n_max, 20), span=8)
    rep.stat("gaussian_tail_max_excess", g)
    rep.gate("gaussian_tail_bound", g <= 1e-9, excess=g)
    lines = ["y,n,ratio,bound"]
    for side, y, n, x, ratio, bound in report.rows:
        if x == min(1, y):  # one representative start per (y, n) keeps the dump small
            lines.append(f"{y},{n},{ratio!r},{bound!r}")
    art = _write(cfg, "tail_ratios.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["tail_ratios"] = art
    return rep


# -- heavy sample stages -------------------------------------------------------


def single_curve_samples(cfg: ExperimentConfig, x: float, h: float, ys) -> dict:
    """Walk-side curve samples at scale n: values at ys, areas, endpoints."""
    sigma = _sigma_of(cfg.lam)
    spec = rayknight.scaled_spec(x, h, cfg.n, sigma)
    budget = cfg.budget or int(math.ceil(2.0 * sigma * cfg.n ** 1.5 * cfg.horizon)) + 1
    params = walk.WalkParams(cfg.lam, cfg.seed)
    ys = tuple(ys)

    def one(r):
        res = walk.run_until_multi_tau(params, [spec], stream=(1 << 44) + r,
                                       budget=budget, cap0=1 << 14)
        if res.status != walk.STATUS_OK:
            return (np.nan,) * (len(ys) + 3)
        curve = rayknight.extract_curve(res.snapshots[0], x, h, cfg.n, sigma)
        if curve.area_identity_residual() != 0:
            raise AssertionError(f"area identity violated on replica {r}")
        vals = tuple(curve.value_at(y) for y in ys)
        return vals + (curve.rescaled_area(), curve.mu_plus, curve.mu_minus)

    def build():
        rows = np.asarray(_replica_map(one, cfg.replicas, cfg.effective_workers()))
        return {
            "values": rows[:, :len(ys)],
            "area": rows[:, len(ys)],
            "mu_plus": rows[:, len(ys) + 1],
            "mu_minus": rows[:, len(ys) + 2],
            "sigma": np.float64(sigma),
        }

    key = {"lam": cfg.lam, "n": cfg.n, "replicas": cfg.replicas, "seed": cfg.seed,
           "x": x, "h": h, "ys": list(ys), "horizon": cfg.horizon, "budget": budget}
    return _cached_arrays(cfg, "walk-curve", key, build)


def reference_curve_samples(cfg: ExperimentConfig, x: float, h: float, ys) -> dict:
    key = {"lam": cfg.lam, "dx": cfg.dx, "ref_replicas": cfg.ref_replicas,
           "seed": cfg.seed, "x": x, "h": h, "ys": list(ys), "ymax": cfg.ymax}

    def build():
        out = tsrm.sample_curves(x, h, cfg.dx, cfg.ref_replicas, cfg.seed,
                                 tag=31, y_stops=list(ys), ymax=cfg.ymax)
        return {"values": out["values"], "area": out["area"],
                "m_plus": np.where(np.isnan(out["m_plus"]), np.inf, out["m_plus"]),
                "m_minus": np.where(np.isnan(out["m_minus"]), -np.inf, out["m_minus"]),
                "capped": out["capped"]}

    return _cached_arrays(cfg, "ref-curve", key, build)


def exp_grkt_single(cfg: ExperimentConfig) -> ExperimentReport:
    """Single-curve distributional match: walk curves vs the reference."""
    rep = ExperimentReport("grkt-single", cfg.report_params())
    (x, h) = cfg.points[0]
    ys = tuple(cfg.extra.get("ys", (-0.5, 0.0, 0.5, 1.0)))
    w = single_curve_samples(cfg, x, h, ys)
    ref = reference_curve_samples(cfg, x, h, ys)

    ok_w = np.isfinite(w["area"]) & (w["area"] <= cfg.horizon)
    ok_r = ~ref["capped"] & (ref["area"] <= cfg.horizon)
    # reference curves alive at ymax with area below the horizon would be
    # mis-censored; they are counted and must be negligible
    stranded = int(np.count_nonzero(ref["capped"] & (ref["area"] <= cfg.horizon)))
    rep.stat("walk_censored_fraction", 1.0 - float(ok_w.mean()))
    rep.stat("ref_censored_fraction", 1.0 - float(ok_r.mean()))
    rep.gate("ref_stranded_negligible", stranded <= 0.001 * cfg.ref_replicas,
             stranded=stranded)

    pvals = []
    for i, y in enumerate(ys):
        d, p = stats.ks_two_sample(w["values"][ok_w, i], ref["values"][ok_r, i])
        rep.stat(f"ks_y_{y}", d, p=p)
        pvals.append(p)
    rep.gate("curve_marginals_ks", stats.bonferroni_pass(pvals, KS_FLOOR),
             p_values=pvals, floor=KS_FLOOR, bonferroni=len(pvals))

    pw = float((w["mu_plus"][ok_w] <= 1.0).mean())
    pr = float((ref["m_plus"][ok_r] <= 1.0).mean())
    rep.stat("absorbed_by_1_walk", pw)
    rep.stat("absorbed_by_1_ref", pr)
    rep.gate("absorption_probability_match", abs(pw - pr) < 0.02, diff=abs(pw - pr))
    if cfg.out:
        # dump one representative curve (replica 0 rerun) for downstream tooling
        sigma = float(w["sigma"])
        budget = cfg.budget or int(math.ceil(2.0 * sigma * cfg.n ** 1.5 * cfg.horizon)) + 1
        res = walk.run_until_multi_tau(walk.WalkParams(cfg.lam, cfg.seed),
                                       [rayknight.scaled_spec(x, h, cfg.n, sigma)],
                                       stream=(1 << 44), budget=budget)
        if res.status == walk.STATUS_OK:
            curve = rayknight.extract_curve(res.snapshots[0], x, h, cfg.n, sigma)
            ys_grid, vals = curve.curve()
            lines = ["y,value"] + [f"{a!r},{b!r}" for a, b in zip(ys_grid, vals)]
            rep.artifacts["curve"] = _write(cfg, "curve.csv", "\n".join(lines) + "\n")
            meta = {"x": x, "h": h, "n": cfg.n, "sigma": sigma, "tau_n": curve.tau,
                    "mu_minus": curve.mu_minus, "mu_plus": curve.mu_plus,
                    "seed": cfg.seed}
            rep.artifacts["curve_meta"] = _write(
                cfg, "curve_meta.json", json.dumps(meta, sort_keys=True) + "\n")
    return rep


def exp_tau_lim(cfg: ExperimentConfig) -> ExperimentReport:
    """Rescaled inverse local time vs the limit areas, censored at the horizon."""
    rep = ExperimentReport("tau-lim", cfg.report_params())
    (x, h) = cfg.points[0]
    ys = tuple(cfg.extra.get("ys", (-0.5, 0.0, 0.5, 1.0)))
    w = single_curve_samples(cfg, x, h, ys)
    ref = reference_curve_samples(cfg, x, h, ys)
    tau_c = stats.censor_at(w["area"], cfg.horizon)
    ref_c = stats.censor_at(np.where(ref["capped"], np.inf, ref["area"]), cfg.horizon)
    d, p = stats.ks_two_sample(tau_c, ref_c)
    rep.stat("ks", d, p=p)
    rep.gate("tau_distribution_ks", p > KS_FLOOR, p=p, floor=KS_FLOOR)
    mdiff = stats.censored_mean_diff(w["area"], np.where(ref["capped"], np.inf, ref["area"]),
                                     cfg.horizon)
    rep.stat("censored_mean_walk", float(tau_c.mean()))
    rep.stat("censored_mean_ref", float(ref_c.mean()))
    rep.stat("relative_mean_diff", mdiff)
    rep.gate("censored_mean_within_5pct", mdiff < 0.05, diff=mdiff)
    return rep


def joint_curve_samples(cfg: ExperimentConfig) -> dict:
    """Walk-side joint samples for two curves at a common x: endpoints + merge."""
    sigma = _sigma_of(cfg.lam)
    (x1, h1), (x2, h2) = cfg.points[0], cfg.points[1]
    if x1 != x2 or not h1 < h2:
        raise ValueError("joint experiment needs a common x and h1 < h2")
    s1 = rayknight.scaled_spec(x1, h1, cfg.n, sigma)
    s2 = rayknight.scaled_spec(x2, h2, cfg.n, sigma)
    budget = cfg.budget or int(math.ceil(2.0 * sigma * cfg.n ** 1.5 * cfg.horizon)) + 1
    params = walk.WalkParams(cfg.lam, cfg.seed)

    def one(r):
        res = walk.run_until_multi_tau(params, [s1, s2], stream=(2 << 44) + r,
                                       budget=budget, cap0=1 << 14)
        if res.status != walk.STATUS_OK:
            return (np.nan,) * 7
        c1 = rayknight.extract_curve(res.snapshot_for(s1), x1, h1, cfg.n, sigma)
        c2 = rayknight.extract_curve(res.snapshot_for(s2), x2, h2, cfg.n, sigma)
        if c1.area_identity_residual() != 0 or c2.area_identity_residual() != 0:
            raise AssertionError(f"area identity violated on replica {r}")
        # tau_1 < tau_2 (same site, lower level), so the walk max between the
        # stops is the later snapshot's segment max together with X_{tau_1}
        merge_site = max(res.snapshot_for(s1).x, res.snapshot_for(s2).seg_max)
        invariant = _joint_invariants_hold(res, s1, s2, merge_site)
        return (c1.mu_plus, c2.mu_plus, merge_site / cfg.n, c1.rescaled_area(),
                c2.rescaled_area(), float(invariant), c1.tau <= c2.tau)

    def build():
        rows = np.asarray(_replica_map(one, cfg.replicas, cfg.effective_workers()))
        return {"mu1": rows[:, 0], "mu2": rows[:, 1], "merge": rows[:, 2],
                "area1": rows[:, 3], "area2": rows[:, 4],
                "invariants": rows[:, 5], "ordered": rows[:, 6],
                "sigma": np.float64(sigma)}

    key = {"lam": cfg.lam, "n": cfg.n, "replicas": cfg.replicas, "seed": cfg.seed,
           "points": [list(p) for p in cfg.points[:2]], "horizon": cfg.horizon,
           "budget": budget}
    return _cached_arrays(cfg, "walk-joint", key, build)


def _joint_invariants_hold(res, s1, s2, merge_site) -> bool:
    """Pointwise ordering and equality-beyond-merge of the two profiles."""
    a, b = res.snapshot_for(s1), res.snapshot_for(s2)
    lo = min(a.offset, b.offset)
    hi = max(a.offset + len(a.eplus), b.offset + len(b.eplus))
    La = np.zeros(hi - lo, dtype=np.int64)
    Lb = np.zeros(hi - lo, dtype=np.int64)
    La[a.offset - lo:a.offset - lo + len(a.eplus)] = a.local_times()
    Lb[b.offset - lo:b.offset - lo + len(b.eplus)] = b.local_times()
    if np.any(La > Lb):
        return False
    sites = lo + np.arange(hi - lo)
    beyond = sites > merge_site
    return bool(np.all(La[beyond] == Lb[beyond]))


def exp_grkt_joint(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("grkt-joint", cfg.report_params())
    w = joint_curve_samples(cfg)
    ref_key = {"lam": cfg.lam, "dx": cfg.dx, "ref_replicas": cfg.ref_replicas,
               "seed": cfg.seed, "points": [list(p) for p in cfg.points[:2]],
               "ymax": cfg.ymax}

    def build_ref():
        fam = tsrm.sample_family(list(cfg.points[:2]), cfg.dx, cfg.ref_replicas,
                                 cfg.seed, tag=37, ymax=cfg.ymax)
        return {"m1": np.where(np.isnan(fam["m_plus"][:, 0]), np.inf, fam["m_plus"][:, 0]),
                "m2": np.where(np.isnan(fam["m_plus"][:, 1]), np.inf, fam["m_plus"][:, 1]),
                "merge": np.where(np.isnan(fam["merge_plus"][:, 0, 1]), np.inf,
                                  fam["merge_plus"][:, 0, 1]),
                "area2": fam["area"][:, 1],
                "capped": fam["capped"]}

    ref = _cached_arrays(cfg, "ref-family", ref_key, build_ref)

    ok_w = np.isfinite(w["area2"]) & (w["area2"] <= cfg.horizon)
    ok_r = ~ref["capped"] & (ref["area2"] <= cfg.horizon)
    rep.stat("walk_censored_fraction", 1.0 - float(ok_w.mean()))
    rep.stat("ref_censored_fraction", 1.0 - float(ok_r.mean()))

    for name, wcol, rcol in (("mu_plus_1", "mu1", "m1"), ("mu_plus_2", "mu2", "m2"),
                             ("merge_plus", "merge", "merge")):
        d, p = stats.ks_two_sample(w[wcol][ok_w], ref[rcol][ok_r])
        rep.stat(f"ks_{name}", d, p=p)
        rep.gate(f"{name}_ks", p > KS_FLOOR, p=p, floor=KS_FLOOR)

    inv_ok = bool(np.all(w["invariants"][ok_w] == 1.0))
    ord_ok = bool(np.all(w["ordered"][ok_w] == 1.0))
    rep.gate("profile_ordering_and_merge_equality", inv_ok and ord_ok,
             ordering=ord_ok, equality_beyond_merge=inv_ok)
    return rep


def exp_exponent(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport("exponent", cfg.report_params())
    grid = cfg.extra.get("m_grid")
    if grid is None:
        grid = [int(round(10 ** e)) for e in (3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0)]
    grid = [int(m) for m in grid]
    reps = cfg.replicas
    params = walk.WalkParams(cfg.lam, cfg.seed)

    def one(r):
        st = walk.WalkState(params, stream=(3 << 44) + r, cap0=1 << 12)
        out = np.empty(len(grid), dtype=np.int64)
        for i, m in enumerate(grid):
            st.step(m - st.n)
            out[i] = abs(st.x)
        return out

    def build():
        rows = np.asarray(_replica_map(one, reps, cfg.effective_workers()))
        return {"absx": rows, "m_grid": np.asarray(grid, dtype=np.int64)}

    key = {"lam": cfg.lam, "replicas": reps, "seed": cfg.seed, "m_grid": grid}
    data = _cached_arrays(cfg, "walk-exponent", key, build)
    fit = stats.exponent_fit(grid, [data["absx"][:, i] for i in range(len(grid))])
    rep.stat("alpha", fit.slope, stderr=fit.stderr)
    rep.stat("r2", fit.r2)
    rep.gate("alpha_two_thirds", abs(fit.slope - 2.0 / 3.0) <= 0.03,
             alpha=fit.slope, target=2.0 / 3.0, tol=0.03)
    rep.gate("loglog_linear", fit.r2 > 0.99, r2=fit.r2)
    lines = ["m,median_absx"] + [
        f"{m},{float(np.median(data['absx'][:, i]))!r}" for i, m in enumerate(grid)]
    art = _write(cfg, "exponent.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["exponent"] = art
    return rep


def exp_geom_time(cfg: ExperimentConfig) -> ExperimentReport:
    """Joint law of rescaled position/local time at an exponential time."""
    rep = ExperimentReport("geom-time", cfg.report_params())
    rate = float(cfg.extra.get("rate", 1.0))
    sigma = _sigma_of(cfg.lam)
    n = cfg.n
    xs_scale = (2.0 * sigma) ** (-2.0 / 3.0) * n
    hs_scale = (2.0 * sigma) ** (2.0 / 3.0) * math.sqrt(n)
    a_edges = np.asarray(cfg.extra.get("a_edges", (-1.25, -0.75, -0.25, 0.25, 0.75, 1.25)))
    h_edges = np.asarray(cfg.extra.get("h_edges", (0.0, 0.35, 0.7, 1.05, 1.4, 1.75)))
    params = walk.WalkParams(cfg.lam, cfg.seed)

    def one(r):
        g = philox_generator(cfg.seed, 41, r).standard_exponential() / rate
        steps = int(g * n ** 1.5)
        st = walk.WalkState(params, stream=(4 << 44) + r, cap0=1 << 12)
        if steps:
            st.step(steps)
        return st.x / xs_scale, (st.site_local_time(st.x) - 1) / hs_scale

    def build():
        rows = np.asarray(_replica_map(one, cfg.replicas, cfg.effective_workers()))
        return {"a": rows[:, 0], "h": rows[:, 1]}

    key = {"lam": cfg.lam, "n": n, "replicas": cfg.replicas, "seed": cfg.seed,
           "rate": rate}
    data = _cached_arrays(cfg, "walk-geom", key, build)
    emp, _, _ = np.histogram2d(data["a"], data["h"], bins=[a_edges, h_edges])
    emp /= cfg.replicas

    # reference bin masses: 2x2 Gauss-Legendre nodes per cell
    gauss = 0.5 / math.sqrt(3.0)
    density_replicas = int(cfg.extra.get("density_replicas", 20000))
    ref_key = {"lam": cfg.lam, "rate": rate, "dx": cfg.dx, "seed": cfg.seed,
               "density_replicas": density_replicas,
               "a_edges": a_edges.tolist(), "h_edges": h_edges.tolist(),
               "ymax": cfg.ymax}

    def build_ref():
        dens = np.zeros((len(a_edges) - 1, len(h_edges) - 1))
        ses = np.zeros_like(dens)
        node_rows = []
        for i in range(len(a_edges) - 1):
            ca, wa = 0.5 * (a_edges[i] + a_edges[i + 1]), a_edges[i + 1] - a_edges[i]
            for j in range(len(h_edges) - 1):
                ch, wh = 0.5 * (h_edges[j] + h_edges[j + 1]), h_edges[j + 1] - h_edges[j]
                nodes_a = [ca - gauss * wa, ca + gauss * wa]
                nodes_h = [ch - gauss * wh, ch + gauss * wh]
                tbl = tsrm.geometric_time_density(
                    nodes_a, nodes_h, rate, density_replicas, cfg.dx, cfg.seed,
                    tag=(43, i, j), ymax=cfg.ymax)
                node_rows.append(tbl)
                dens[i, j] = tbl[:, 2].mean() * wa * wh
                ses[i, j] = float(np.sqrt((tbl[:, 3] ** 2).mean() / len(tbl))) * wa * wh
        return {"bins": dens, "se": ses, "nodes": np.vstack(node_rows)}

    ref = _cached_arrays(cfg, "ref-geom", ref_key, build_ref)
    disc = float(np.abs(emp - ref["bins"]).max())
    rep.stat("max_bin_discrepancy", disc)
    rep.stat("empirical_mass_in_bins", float(emp.sum()))
    rep.stat("reference_mass_in_bins", float(ref["bins"].sum()))
    rep.gate("bin_discrepancy_below_0.03", disc < 0.03, max_discrepancy=disc)
    lines = ["a,h,density,se"]
    for a, h, d, s in ref["nodes"]:
        lines.append(f"{a!r},{h!r},{d!r},{s!r}")
    art = _write(cfg, "geom_density.csv", "\n".join(lines) + "\n")
    if art:
        rep.artifacts["geom_density"] = art
    return rep


# -- coupling / coalescence ----------------------------------------------------


def _extract_chain(snap, k: int, length: int) -> np.ndarray:
    """Directed-edge local-time chain S(j) = eplus(k + j), j = 0..length."""
    out = np.zeros(length + 1, dtype=np.int64)
    a = max(k, snap.offset)
    b = min(k + length, snap.offset + len(snap.eplus) - 1)
    if b >= a:
        out[a - k:b - k + 1] = snap.eplus[a - snap.offset:b - snap.offset + 1]
    return out


def coupling_replica(cfg, b: int, window: int, r: int, rows, pi, M,
                     budget: int) -> urn.CouplingResult | None:
    """One walk realization: chains at two stop levels, coupled against pi."""
    k = -(window + 2 * b + 64)
    m1, m2 = 2 * b, 3 * b
    params = walk.WalkParams(cfg.lam, cfg.seed)
    res = walk.run_until_multi_tau(
        params, [walk.StopSpec(k, m1), walk.StopSpec(k, m2)],
        stream=(5 << 44) + (b << 24) + r, budget=budget, cap0=1 << 14)
    if res.status != walk.STATUS_OK:
        return urn.CouplingResult(b, window, -1, -1, -1, -1, -1, True)
    snap1 = res.snapshot_for(walk.StopSpec(k, m1))
    snap2 = res.snapshot_for(walk.StopSpec(k, m2))
    s1 = _extract_chain(snap1, k, window)
    s2 = _extract_chain(snap2, k, window)
    rng = philox_generator(cfg.seed, 47, b, r)
    gamma = urn.maximal_coupling_gamma(s1, rows, pi, M, rng)
    theta = -1
    hit = np.flatnonzero(s2 - s1 <= 0)
    if len(hit):
        theta = int(hit[0])
    return urn.CouplingResult(b, window, int(s1[0]), int(s2[0]), gamma,
                              int(s1[: window + 1].min()), theta, False)


def exp_coupling(cfg: ExperimentConfig) -> ExperimentReport:
    """Increment coupling against the stationary law (decoupling time)."""
    rep = ExperimentReport("coupling", cfg.report_params())
    bs = [int(b) for b in cfg.extra.get("b_values", (50, 100, 200))]
    delta = float(cfg.extra.get("delta", 0.5))
    reps = cfg.replicas
    laws = urn.stationary_laws(cfg.lam)
    M = laws.M + 2
    pi = urn.stationary_laws(cfg.lam, M=M).pi
    probs, min_probs = [], []
    for b in bs:
        window = int(b ** (2.0 - delta))
        max_level = 3 * b + 40 * int(math.sqrt(b)) + 64
        rows = urn.edge_chain_rows(cfg.lam, max_level, side="left", M=M)
        budget = cfg.budget or int(1.5e9)

        def one(r, _b=b, _w=window, _rows=rows, _budget=budget):
            return coupling_replica(cfg, _b, _w, r, _rows, pi, M, _budget)

        key = {"lam": cfg.lam, "seed": cfg.seed, "b": b, "window": window,
               "replicas": reps, "delta": delta, "budget": budget}

        def build(_one=one):
            out = _replica_map(_one, reps, cfg.effective_workers())
            return {
                "gamma": np.array([c.gamma for c in out], dtype=np.int64),
                "s1min": np.array([c.s1_min_window for c in out], dtype=np.int64),
                "s1start": np.array([c.s1_start for c in out], dtype=np.int64),
                "budget_exhausted": np.array([c.budget_exhausted for c in out]),
            }

        data = _cached_arrays(cfg, "walk-coupling", key, build)
        ok = ~data["budget_exhausted"]
        p_gamma = float((data["gamma"][ok] > window).mean())
        p_min = float((data["s1min"][ok] > b / 2).mean())
        probs.append(p_gamma)
        min_probs.append(p_min)
        rep.stat(f"p_gamma_gt_window_b{b}", p_gamma, window=window,
                 resolved=int(ok.sum()))
        rep.stat(f"p_min_above_half_b{b}", p_min)
        rep.stat(f"mean_s1_start_b{b}", float(data["s1start"][ok].mean()))
    se = math.sqrt(0.25 / reps)
    nondecreasing = all(probs[i + 1] >= probs[i] - 3 * se for i in range(len(probs) - 1))
    rep.gate("decoupling_prob_final", probs[-1] >= 0.9, p=probs[-1], b=bs[-1])
    rep.gate("decoupling_prob_nondecreasing", nondecreasing, probs=probs,
             slack=3 * se)
    rep.gate("min_stays_above_half", min_probs[-1] >= 0.9, p_min=min_probs[-1])
    return rep


def exp_coalescence(cfg: ExperimentConfig) -> ExperimentReport:
    """Coalescence time of two chains from one walk at nearby stop levels."""
    rep = ExperimentReport("coalescence", cfg.report_params())
    b = int(cfg.extra.get("b", 4))
    span = b ** 7
    start_floor = b ** 4
    m1 = 2 * (start_floor + 2 * b)
    m2 = m1 + b
    k = -(span + 256)
    reps = cfg.replicas
    budget = cfg.budget or int(1.5e9)
    params = walk.WalkParams(cfg.lam, cfg.seed)

    def one(r):
        res = walk.run_until_multi_tau(
            params, [walk.StopSpec(k, m1), walk.StopSpec(k, m2)],
            stream=(6 << 44) + r, budget=budget, cap0=1 << 16)
        if res.status != walk.STATUS_OK:
            return (-1, -1, -1)
        snap1 = res.snapshot_for(walk.StopSpec(k, m1))
        snap2 = res.snapshot_for(walk.StopSpec(k, m2))
        length = int(snap2.run_max - k)
        s1 = _extract_chain(snap1, k, length)
        s2 = _extract_chain(snap2, k, length)
        hit = np.flatnonzero(s2 - s1 <= 0)
        theta = int(hit[0]) if len(hit) else -1
        return (int(s1[0]), int(s2[0] - s1[0]), theta)

    key = {"lam": cfg.lam, "seed": cfg.seed, "b": b, "m1": m1, "m2": m2,
           "k": k, "replicas": reps, "budget": budget}

    def build():
        rows = np.asarray(_replica_map(one, reps, cfg.effective_workers()),
                          dtype=np.int64)
        return {"s1": rows[:, 0], "gap": rows[:, 1], "theta": rows[:, 2]}

    data = _cached_arrays(cfg, "walk-coalescence", key, build)
    qual = (data["s1"] >= start_floor) & (data["gap"] > 0) & (data["gap"] <= b)
    rep.stat("qualifying_fraction", float(qual.mean()), replicas=reps)
    theta = data["theta"][qual]
    p = float(((theta >= 0) & (theta < span)).mean()) if qual.any() else 0.0
    rep.stat("p_theta_below_b7", p, span=span, qualifying=int(qual.sum()))
    rep.gate("coalescence_before_b7", p >= 0.95, p=p)
    rep.gate("enough_qualifying_replicas", int(qual.sum()) >= 50,
             count=int(qual.sum()))
    return rep


def exp_limit_sim(cfg: ExperimentConfig) -> ExperimentReport:
    """Reference-simulator self checks: refinement, closed form, scaling."""
    rep = ExperimentReport("limit-sim", cfg.report_params())
    from scipy.stats import foldnorm

    (x, h) = cfg.points[0]
    reps = cfg.ref_replicas
    # grid refinement: P(area <= t) moves < 0.01 when dx is halved
    a1 = tsrm.sample_curves(x, h, cfg.dx, reps, cfg.seed, tag=53, ymax=cfg.ymax)
    a2 = tsrm.sample_curves(x, h, cfg.dx / 2.0, reps, cfg.seed, tag=54, ymax=cfg.ymax)
    c1 = stats.censor_at(np.where(a1["capped"], np.inf, a1["area"]), cfg.horizon)
    c2 = stats.censor_at(np.where(a2["capped"], np.inf, a2["area"]), cfg.horizon)
    tgrid = np.linspace(0.0, cfg.horizon * 0.99, 60)
    f1 = stats.ECDF(c1)(tgrid)
    f2 = stats.ECDF(c2)(tgrid)
    worst = float(np.abs(f1 - f2).max())
    rep.stat("refinement_max_cdf_shift", worst, dx=cfg.dx)
    rep.gate("grid_refinement_consistent", worst < 0.01, shift=worst)
    # closed-form marginal on the reflecting interval: |N(h, y - x)|
    if x < 0:
        y0 = x / 2.0
        out = tsrm.sample_curves(x, h, cfg.dx, reps, cfg.seed, tag=55, y_stops=[y0],
                                 ymax=cfg.ymax)
        span = y0 - x
        v = out["values"][:, 0]
        cdf = foldnorm(c=h / math.sqrt(span), scale=math.sqrt(span)).cdf
        grid = np.linspace(0.0, np.quantile(v, 0.999), 200)
        d = float(np.abs(stats.ECDF(v)(grid) - cdf(grid)).max())
        rep.stat("reflected_marginal_ks", d, y=y0)
        rep.gate("reflected_marginal_matches", d < 0.01, stat=d)
    # diffusive scaling: area(cx, sqrt(c) h) ~ c^(3/2) area(x, h)
    c = float(cfg.extra.get("scale_factor", 4.0))
    big = tsrm.sample_curves(c * x, math.sqrt(c) * h, cfg.dx * c, reps, cfg.seed,
                             tag=56, ymax=cfg.ymax * c)
    smal = tsrm.sample_curves(x, h, cfg.dx, reps, cfg.seed, tag=57, ymax=cfg.ymax)
    hb = cfg.horizon * c ** 1.5
    sb = stats.censor_at(np.where(big["capped"], np.inf, big["area"]), hb)
    ss = stats.censor_at(np.where(smal["capped"], np.inf, smal["area"]) * c ** 1.5, hb)
    dks, p = stats.ks_two_sample(sb, ss)
    rep.stat("scaling_ks", dks, p=p, c=c)
    rep.gate("scaling_law_ks", p > KS_FLOOR, p=p)
    # dump one curve in the shared schema
    if cfg.out:
        curve = tsrm.simulate_single_curve(x, h, cfg.dx, cfg.seed, tag=58, ymax=cfg.ymax)
        ys, vs = curve.grid()
        lines = ["y,value"] + [f"{a!r},{b!r}" for a, b in zip(ys, vs)]
        rep.artifacts["curve"] = _write(cfg, "limit_curve.csv", "\n".join(lines) + "\n")
        meta = {"x": x, "h": h, "n": None, "sigma": None,
                "tau_n": None, "mu_minus": curve.m_minus, "mu_plus": curve.m_plus,
                "seed": cfg.seed}
        rep.artifacts["curve_meta"] = _write(cfg, "limit_curve_meta.json",
                                             json.dumps(meta, sort_keys=True) + "\n")
    return rep


EXPERIMENTS = {
    "sigma": exp_sigma,
    "enumerate": exp_enumerate,
    "exact-law": exp_exact_law,
    "verify-identities": exp_verify_identities,
    "urn-mixing": exp_urn_mixing,
    "tail-bounds": exp_tail_bounds,
    "grkt-single": exp_grkt_single,
    "grkt-joint": exp_grkt_joint,
    "tau-lim": exp_tau_lim,
    "exponent": exp_exponent,
    "geom-time": exp_geom_time,
    "coupling": exp_coupling,
    "coalescence": exp_coalescence,
    "limit-sim": exp_limit_sim,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    if cfg.experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {cfg.experiment!r};"
                         f" choose from {sorted(EXPERIMENTS)}")
    rep = EXPERIMENTS[cfg.experiment](cfg)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, f"{cfg.experiment}.json"), "w") as f:
            f.write(rep.to_json() + "\n")
    return rep


def _profile_csv_text(state) -> str:
    offset, ep, em = state.profile()
    lines = ["k,eplus,eminus,L"]
    for i in range(len(ep)):
        k = offset + i
        L = int(ep[i]) + int(em[i]) + (1 if k == state.x else 0)
        lines.append(f"{k},{int(ep[i])},{int(em[i])},{L}")
    return "\n".join(lines) + "\n"


def _path_csv_text(pos) -> str:
    lines = ["n,x"] + [f"{n},{int(x)}" for n, x in enumerate(pos)]
    return "\n".join(lines) + "\n"
