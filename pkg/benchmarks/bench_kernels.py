"""Compare the compiled pair-counting kernels against the numpy fallback.

Run:

    python3 benchmarks/bench_kernels.py [--rows 20000] [--classes 100]

The same benchmark with DISTILLAB_PURE=1 exercises only the fallback, so
an end-to-end comparison is simply running it in both modes; this script
additionally times both implementations in-process.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from distillab import _kernels
from distillab._kernels import _pure


def bench(fn, a, b, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(a, b)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--classes", type=int, default=100)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    a = rng.normal(size=(args.rows, args.classes))
    b = rng.normal(size=(args.rows, args.classes))

    print(f"rows={args.rows} classes={args.classes} "
          f"(pairs per row: {args.classes * (args.classes - 1) // 2})")
    print(f"compiled extension loaded: {_kernels.USING_EXTENSION}")

    for name in ("kendall_signed_many", "kendall_paper_many"):
        pure_fn = getattr(_pure, name)
        active_fn = getattr(_kernels, name)
        np.testing.assert_allclose(active_fn(a, b), pure_fn(a, b), atol=1e-12)
        t_pure = bench(pure_fn, a, b, args.repeats)
        row = f"{name:24s} pure: {t_pure * 1e3:9.1f} ms"
        if _kernels.USING_EXTENSION:
            t_ext = bench(active_fn, a, b, args.repeats)
            row += (f"   compiled: {t_ext * 1e3:9.1f} ms"
                    f"   speedup: {t_pure / t_ext:5.1f}x")
        print(row)


if __name__ == "__main__":
    main()
