"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--rows 20000]

Reports the best wall time per kernel and the speed-up; both backends
must agree to 1e-9 on every benchmarked output.
"""
import argparse
import time

import numpy as np

from optnoise import _pykernels

try:
    from optnoise import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rows, seed=0):
    rng = np.random.default_rng(seed)
    batch = dict(
        is_call=rng.integers(0, 2, rows).astype(np.int8),
        S=rng.uniform(80, 120, rows), K=np.full(rows, 100.0),
        T=rng.uniform(0.05, 1.0, rows), r=rng.uniform(0.0, 0.08, rows),
        sigma=rng.uniform(0.1, 0.5, rows))
    batch["b"] = batch["r"] - 0.01
    return {
        "crr european 10k steps": lambda k: k.crr_price(True, False, 100.0, 100.0, 1.0, 0.05,
                                                        0.05, 0.2, 10_000),
        "crr american 10k steps": lambda k: k.crr_price(False, True, 100.0, 100.0, 1.0, 0.05,
                                                        0.05, 0.2, 10_000),
        f"baw batch {rows} rows": lambda k: k.baw_price_batch(
            batch["is_call"], batch["S"], batch["K"], batch["T"], batch["r"], batch["b"],
            batch["sigma"], 1e-6, 100)[0],
        f"bs batch {rows} rows": lambda k: k.bs_price_batch(
            batch["is_call"], batch["S"], batch["K"], batch["T"], batch["r"], batch["b"],
            batch["sigma"]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rows", type=int, default=20_000)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; build with `pip install -e .`")
        return 1
    print(f"{'kernel':<28}{'python s':>12}{'cython s':>12}{'speed-up':>10}")
    for name, fn in cases(args.rows).items():
        tp, op = best_of(lambda: fn(_pykernels), args.repeat)
        tc, oc = best_of(lambda: fn(_kernels), args.repeat)
        np.testing.assert_allclose(oc, op, rtol=1e-9, atol=1e-9)
        print(f"{name:<28}{tp:12.4f}{tc:12.4f}{tp / tc:9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
