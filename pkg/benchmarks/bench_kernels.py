"""Time the numba and numpy kernels on the workloads the simulation uses.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 1000]

The first numba call per kernel compiles (or loads the on-disk cache) and is
reported separately from the steady-state timings.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fairaudit import _accel, kernels


def _workloads(n: int, rng: np.random.Generator) -> dict[str, tuple]:
    X = rng.standard_normal((n, 2))
    y = (X @ np.array([1.0, 1.5]) > 0).astype(np.float64)
    codes = rng.integers(0, 4, 50 * n)
    truth = rng.random(50 * n) < 0.4
    pred = rng.random(50 * n) < 0.5
    return {
        "logistic_gd": ((X, y, 0.1, 2000, 0.0), {}),
        "counterfactual_shift": ((X[:, 0].copy(), X[:, 1].copy(), 0.8, 1.2, -0.1, 1e-6, np.inf), {}),
        "grouped_confusion": ((codes, 4, truth, pred, np.ones(50 * n)), {}),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, default=1000, help="agents (confusion kernel uses 50x rows)")
    args = parser.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    work = _workloads(args.n, np.random.default_rng(0))
    print(f"{'kernel':<22}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'first call ms':>16}")
    for name, (call_args, kw) in work.items():
        fn_np = getattr(kernels, f"{name}_numpy")
        fn_nb = getattr(kernels, f"{name}_numba")
        first = timeit.timeit(lambda: fn_nb(*call_args, **kw), number=1)
        t_np = min(timeit.repeat(lambda: fn_np(*call_args, **kw), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn_nb(*call_args, **kw), number=1, repeat=args.repeat))
        print(f"{name:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x{first * 1e3:>16.1f}")


if __name__ == "__main__":
    main()
