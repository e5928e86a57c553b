#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the numpy fallback.

Times the four hot kernels (symmetric Jacobi eigensolve, Hessenberg+QR
eigenvalues, scaling-and-squaring exponential, RK4 stepping) on both
backends and reports the speedup plus the worst cross-backend drift.

Usage:
    python benchmarks/compare_backends.py [--sizes 10 30 60 120] [--repeats 5]
"""

import argparse
import time

import numpy as np

from lognormgrid import _kernels_py

try:
    from lognormgrid import _kernels_c
except ImportError:
    _kernels_c = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def _drift(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - b))) / scale


def bench_case(name, py_fn, c_fn, repeats):
    t_py, r_py = _time(py_fn, repeats)
    t_c, r_c = _time(c_fn, repeats)
    drift = _drift(r_py, r_c)
    print(
        f"  {name:<12} python {t_py * 1e3:9.2f} ms   c {t_c * 1e3:9.2f} ms   "
        f"speedup {t_py / t_c:6.1f}x   drift {drift:.2e}"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", nargs="+", type=int, default=[10, 30, 60, 120])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _kernels_c is None:
        raise SystemExit(
            "compiled backend not built; run pip install -e . --no-build-isolation"
        )

    rng = np.random.default_rng(args.seed)
    for n in args.sizes:
        m = rng.standard_normal((n, n))
        sym = 0.5 * (m + m.T)
        k = rng.standard_normal(n)
        z0 = rng.standard_normal(n)
        steps = 2000
        print(f"n = {n}")
        bench_case(
            "sym_eigvals",
            lambda: _kernels_py.sym_eigvals(sym),
            lambda: _kernels_c.sym_eigvals(sym),
            args.repeats,
        )
        bench_case(
            "eigvals",
            lambda: np.sort_complex(_kernels_py.eigvals(m)),
            lambda: np.sort_complex(_kernels_c.eigvals(m)),
            args.repeats,
        )
        bench_case(
            "expm",
            lambda: _kernels_py.expm(m / n),
            lambda: _kernels_c.expm(m / n),
            args.repeats,
        )
        bench_case(
            "rk4",
            lambda: _kernels_py.rk4(m / n, k, z0, 1e-3, steps, 1e12)[0],
            lambda: _kernels_c.rk4(m / n, k, z0, 1e-3, steps, 1e12)[0],
            args.repeats,
        )


if __name__ == "__main__":
    main()
