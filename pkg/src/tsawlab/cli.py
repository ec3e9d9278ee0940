"""Command-line experiment runner.

    tsawlab <experiment> [--config cfg.json] [--lambda 0.5 --n 10000 ...]
    tsawlab report --out DIR

Every experiment writes ``<out>/<experiment>.json`` plus its CSV artifacts
and exits 0 iff all gates passed.  Flags override config-file values; the
config round-trips losslessly through JSON.  TSAWLAB_WORKERS overrides the
worker count (results are identical for any value).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

_DEFAULTS = {
    "grkt-joint": {"points": ((-1.0, 1.0), (-1.0, 2.0)), "replicas": 2000,
                   "horizon": 40.0},
    "coupling": {"replicas": 300},
    "coalescence": {"replicas": 200},
    "verify-identities": {"replicas": 20},
    "exact-law": {"replicas": 10 ** 6},
    "exponent": {"replicas": 2000},
    "limit-sim": {"dx": 1e-3},
    "geom-time": {"dx": 1e-3},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsawlab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in sorted(EXPERIMENTS):
        sp = sub.add_parser(name, help=EXPERIMENTS[name].__doc__)
        _add_common(sp)
    rp = sub.add_parser("report", help="aggregate report JSONs in --out")
    rp.add_argument("--out", required=True)
    return p


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file (flags override it)")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--ref-replicas", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--delta", dest="dx", type=float, help="reference grid step")
    sp.add_argument("--horizon", type=float, help="censoring horizon")
    sp.add_argument("--budget", type=int, help="per-replica step cap")
    sp.add_argument("--ymax", type=float)
    sp.add_argument("--points", help="JSON list of [x, h] pairs")
    sp.add_argument("--t-grid", help="JSON list of times")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out", help="output directory for report + artifacts")
    sp.add_argument("--cache", help="directory for cached sample arrays")
    sp.add_argument("--extra", help="JSON dict of experiment-specific knobs")


def config_from_args(args) -> ExperimentConfig:
    base = {"experiment": args.experiment}
    base.update(_DEFAULTS.get(args.experiment, {}))
    if args.config:
        with open(args.config) as f:
            loaded = json.load(f)
        loaded.pop("experiment", None)
        base.update(loaded)
    for name in ("lam", "n", "replicas", "ref_replicas", "seed", "dx", "horizon",
                 "budget", "ymax", "workers", "out", "cache"):
        v = getattr(args, name, None)
        if v is not None:
            base[name] = v
    if getattr(args, "points", None):
        base["points"] = json.loads(args.points)
    if getattr(args, "t_grid", None):
        base["t_grid"] = json.loads(args.t_grid)
    if getattr(args, "extra", None):
        extra = dict(base.get("extra") or {})
        extra.update(json.loads(args.extra))
        base["extra"] = extra
    return ExperimentConfig.from_dict(base)


def _report_command(out_dir: str) -> int:
    rows = []
    for name in sorted(os.listdir(out_dir)):
        if not name.endswith(".json") or name.endswith("_meta.json"):
            continue
        with open(os.path.join(out_dir, name)) as f:
            try:
                rep = json.load(f)
            except json.JSONDecodeError:
                continue
        if "gates" not in rep:
            continue
        rows.append((rep["name"], rep["pass"], len(rep["gates"])))
        for g in rep["gates"]:
            status = "PASS" if g["passed"] else "FAIL"
            print(f"{rep['name']:>18}  {status}  {g['name']}")
    if not rows:
        print("no reports found", file=sys.stderr)
        return 2
    failed = [name for name, ok, _ in rows if not ok]
    print(f"\n{len(rows)} experiments, {len(rows) - len(failed)} passed,"
          f" {len(failed)} failed" + (f": {', '.join(failed)}" if failed else ""))
    return 0 if not failed else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment == "report":
        return _report_command(args.out)
    cfg = config_from_args(args)
    rep = run_experiment(cfg)
    for g in rep.gates:
        print(f"{'PASS' if g['passed'] else 'FAIL'}  {rep.name}:{g['name']}")
    print(f"{'PASS' if rep.passed else 'FAIL'}  {rep.name}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
