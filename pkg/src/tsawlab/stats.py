"""Distribution comparison and estimation used by the acceptance experiments.

Only what the experiments need: empirical CDFs, the two-sample
Kolmogorov-Smirnov test (asymptotic p-value), total variation between
finite laws, log-log quantile regression for the displacement exponent,
and a shared-censoring helper for comparing heavy-tailed positive
variables truncated at a common horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .oracle import ExactLaw


@dataclass
class ECDF:
    """Right-continuous empirical CDF of a 1-d sample."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            raise ValueError("empty sample")
        self.points = np.sort(pts)

    def __call__(self, x) -> np.ndarray:
        return np.searchsorted(self.points, x, side="right") / len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)


def ks_statistic(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)| over the pooled sample points."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / len(a)
    fb = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and its asymptotic two-sided p-value.

    p = Q(sqrt(n_eff) * D) with Q the Kolmogorov survival function and
    n_eff = n_a n_b / (n_a + n_b).  Ties (lattice-valued or censored
    samples) make the test mildly conservative.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    d = ks_statistic(a, b)
    n_eff = len(a) * len(b) / (len(a) + len(b))
    p = float(special.kolmogorov(math.sqrt(n_eff) * d))
    return d, min(max(p, 0.0), 1.0)


def tv_distance(p: ExactLaw | np.ndarray, q: ExactLaw | np.ndarray) -> float:
    """(1/2) sum |p - q| over the union of supports."""
    if isinstance(p, ExactLaw) or isinstance(q, ExactLaw):
        pd = p.as_dict() if isinstance(p, ExactLaw) else dict(enumerate(p))
        qd = q.as_dict() if isinstance(q, ExactLaw) else dict(enumerate(q))
        keys = set(pd) | set(qd)
        return 0.5 * sum(abs(pd.get(k, 0.0) - qd.get(k, 0.0)) for k in keys)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p - q).sum())


def empirical_tv_to_law(samples: np.ndarray, law: ExactLaw) -> float:
    """TV between the empirical law of integer samples and an exact law."""
    samples = np.asarray(samples)
    values, counts = np.unique(samples, return_counts=True)
    emp = dict(zip(values.tolist(), (counts / len(samples)).tolist()))
    keys = set(emp) | set(law.as_dict())
    exact = law.as_dict()
    return 0.5 * sum(abs(emp.get(k, 0.0) - exact.get(k, 0.0)) for k in keys)


@dataclass
class ExponentFit:
    """Least-squares fit of log q-quantile of |X_m| against log m."""

    slope: float
    intercept: float
    r2: float
    stderr: float
    log_m: np.ndarray
    log_q: np.ndarray


def exponent_fit(ms, abs_samples, quantile: float = 0.5) -> ExponentFit:
    """Fit log quantile(|X_m|) ~ alpha log m over the m grid.

    ``abs_samples`` is a sequence (one entry per m) of samples of |X_m|.
    Requires at least 4 grid points spanning at least two decades.
    """
    ms = np.asarray(ms, dtype=np.float64)
    if len(ms) < 4 or ms.max() / ms.min() < 100.0:
        raise ValueError("need >= 4 grid points spanning >= 2 decades")
    qs = np.array([np.quantile(np.asarray(s, dtype=np.float64), quantile)
                   for s in abs_samples])
    if np.any(qs <= 0):
        raise ValueError("degenerate quantiles (<= 0); increase m or replicas")
    lx = np.log(ms)
    ly = np.log(qs)
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    dof = max(len(ms) - 2, 1)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(ss_res / dof / sxx) if sxx > 0 else float("nan")
    return ExponentFit(float(slope), float(intercept), r2, stderr, lx, ly)


# -- shared censoring ---------------------------------------------------------


def censor_at(samples: np.ndarray, horizon: float) -> np.ndarray:
    """min(sample, horizon) with NaN (unresolved) mapped to the horizon."""
    s = np.asarray(samples, dtype=np.float64).copy()
    s[~np.isfinite(s)] = horizon
    return np.minimum(s, horizon)


def censored_mean_diff(a, b, horizon: float) -> float:
    """Relative difference of E[min(., horizon)] between two samples."""
    ma = float(censor_at(a, horizon).mean())
    mb = float(censor_at(b, horizon).mean())
    return abs(ma - mb) / max(abs(mb), 1e-300)


def bonferroni_pass(p_values, alpha: float) -> bool:
    """Family gate: every Bonferroni-adjusted p-value exceeds alpha."""
    p = np.asarray(list(p_values), dtype=np.float64)
    return bool(np.all(np.minimum(p * len(p), 1.0) > alpha))
