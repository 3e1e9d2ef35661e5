"""Time the numba and numpy implementations of the hot kernels.

    python3 benchmarks/bench_kernels.py [--points 4097] [--steps 2000] [--repeat 3]

Numba timings exclude the one-off compilation, which is reported separately.
"""
import argparse
import time

import numpy as np

from ctpt import _kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(points, steps):
    rng = np.random.default_rng(0)
    x = np.linspace(-20, 20, points)
    h = x[1] - x[0]
    psi = (np.exp(-x**2 / 2) * (1 + 0.1j * x)).astype(complex)
    xi = rng.normal(size=points) * 3 + 0.5j
    xq = x / 1.3
    ab = rng.normal(size=(5, points)) + 1j * rng.normal(size=(5, points))
    ab[2] += 10
    alpha = np.exp(-2 * (np.arange(steps) + 0.5) * 1e-3)
    return {
        "hermite_functions (n=64)": lambda k: k.hermite_functions(64, xi),
        "cubic_interp": lambda k: k.cubic_interp(x[0], h, psi, xq),
        "penta_solve": lambda k: k.penta_solve(ab, psi),
        f"cn_propagate ({steps} steps)": lambda k: k.cn_propagate(psi, x, h, 1.0, 1.0, 2.0, alpha, 1e-3, 100),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--points", type=int, default=4097)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels.NUMBA is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"grid points {args.points}, best of {args.repeat}")
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}{'compile [s]':>13}")
    for name, fn in cases(args.points, args.steps).items():
        t0 = time.perf_counter()
        fn(_kernels.NUMBA)
        compile_time = time.perf_counter() - t0
        t_np = _best(lambda: fn(_kernels.NUMPY), args.repeat)
        t_nb = _best(lambda: fn(_kernels.NUMBA), args.repeat)
        print(f"{name:<28}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{compile_time:>13.2f}")


if __name__ == "__main__":
    main()
