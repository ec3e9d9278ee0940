"""Kernel selection and construction helpers.

The compiled extension is preferred; the pure-Python module is the fallback.
Both produce identical streams for identical ``(seed, stream)``, so the
choice affects speed only.  Set ``TSAWLAB_KERNEL=python`` (or ``compiled``)
to force one.

Probability tables are built here, once per lambda, and handed to whichever
kernel is active so that both implementations share the exact same doubles.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache

from . import _pykernel

try:  # pragma: no cover - exercised implicitly by the import
    from . import _ckernel
except ImportError:  # pragma: no cover
    _ckernel = None

_choice = os.environ.get("TSAWLAB_KERNEL", "").strip().lower()
if _choice in ("python", "py"):
    _impl = _pykernel
elif _choice in ("compiled", "c", "cy"):
    if _ckernel is None:
        raise ImportError("TSAWLAB_KERNEL=compiled but tsawlab._ckernel is not built")
    _impl = _ckernel
else:
    _impl = _ckernel if _ckernel is not None else _pykernel

IMPL = _impl.IMPL

STATUS_BUDGET = _pykernel.STATUS_BUDGET
STATUS_NO_PENDING = _pykernel.STATUS_NO_PENDING


def implementation(name: str | None = None):
    """Return the active kernel module, or a specific one by name."""
    if name is None:
        return _impl
    if name in ("python", "py"):
        return _pykernel
    if name in ("compiled", "c", "cy"):
        if _ckernel is None:
            raise ImportError("compiled kernel not available")
        return _ckernel
    raise ValueError(f"unknown kernel implementation {name!r}")


@lru_cache(maxsize=32)
def tables(lam: float):
    """(log lam, right-step table, urn interior table, urn origin table)."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    return (
        math.log(lam),
        _pykernel.right_prob_table(lam),
        _pykernel.urn_up_table(lam, "interior"),
        _pykernel.urn_up_table(lam, "origin"),
    )


def make_walk(lam, seed, stream, cap0=4096, path_cap=0, impl=None):
    from .rng import derive_state

    loglam, pright, _, _ = tables(float(lam))
    mod = implementation(impl)
    s = derive_state(int(seed), int(stream))
    return mod.Walk(float(lam), loglam, pright, *s, cap0=cap0, path_cap=path_cap)


def make_urn_walk(lam, seed, stream, cap0=4096, impl=None):
    from .rng import derive_state

    loglam, _, up_int, up_org = tables(float(lam))
    mod = implementation(impl)
    s = derive_state(int(seed), int(stream))
    return mod.UrnWalk(float(lam), loglam, up_int, up_org, *s, cap0=cap0)


def endpoint_batch(lam, nsteps, replicas, seed, stream0, impl=None):
    loglam, pright, _, _ = tables(float(lam))
    return implementation(impl).endpoint_batch(
        float(lam), loglam, pright, int(nsteps), int(replicas), int(seed), int(stream0))


def urn_endpoint_batch(lam, nsteps, replicas, seed, stream0, impl=None):
    loglam, _, up_int, up_org = tables(float(lam))
    return implementation(impl).urn_endpoint_batch(
        float(lam), loglam, up_int, up_org, int(nsteps), int(replicas), int(seed), int(stream0))


def tau_capped_batch(lam, k, m, cap, replicas, seed, stream0, impl=None):
    loglam, pright, _, _ = tables(float(lam))
    return implementation(impl).tau_capped_batch(
        float(lam), loglam, pright, int(k), int(m), int(cap), int(replicas),
        int(seed), int(stream0))


def dbeta_batch(lam, variant, i0, nblues, replicas, seed, stream0, impl=None):
    loglam, _, up_int, up_org = tables(float(lam))
    return implementation(impl).dbeta_batch(
        float(lam), loglam, up_int, up_org, variant == "interior", int(i0),
        int(nblues), int(replicas), int(seed), int(stream0))
