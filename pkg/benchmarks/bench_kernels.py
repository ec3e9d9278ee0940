"""Benchmark the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--steps 2000000]

Both implementations consume identical random streams, so the comparison is
pure speed; the suite verifies equality separately (tests/test_kernel_twin).
"""

import argparse
import time

from tsawlab import kernels


def rate(fn, steps):
    t0 = time.perf_counter()
    fn(steps)
    dt = time.perf_counter() - t0
    return steps / dt, dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2_000_000,
                    help="steps for the python kernel (compiled gets 50x)")
    args = ap.parse_args()

    impls = ["python"]
    if kernels._ckernel is not None:
        impls.insert(0, "compiled")

    print(f"{'kernel':>22} {'impl':>9} {'steps/s':>14} {'ns/step':>9}")
    results = {}
    for impl in impls:
        mult = 50 if impl == "compiled" else 1
        w = kernels.make_walk(0.5, 1, 1, impl=impl)
        r, _ = rate(w.step_many, args.steps * mult)
        results[("walk", impl)] = r
        print(f"{'walk step':>22} {impl:>9} {r:14.3e} {1e9 / r:9.2f}")
        u = kernels.make_urn_walk(0.5, 1, 1, impl=impl)
        r, _ = rate(u.step_many, args.steps * mult)
        results[("urn", impl)] = r
        print(f"{'urn-driven step':>22} {impl:>9} {r:14.3e} {1e9 / r:9.2f}")
        r, _ = rate(lambda n, _i=impl: kernels.dbeta_batch(
            0.5, "interior", 1, 20, n // 40, 3, 0, impl=_i), args.steps * mult)
        results[("dbeta", impl)] = r
        print(f"{'urn chain draw':>22} {impl:>9} {r:14.3e} {1e9 / r:9.2f}")
    if len(impls) == 2:
        print()
        for name in ("walk", "urn", "dbeta"):
            s = results[(name, "compiled")] / results[(name, "python")]
            print(f"speedup {name}: {s:,.0f}x")


if __name__ == "__main__":
    main()
