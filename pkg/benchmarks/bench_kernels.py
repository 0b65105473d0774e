"""Time the compiled Gibbs kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --p 100 --iters 200

Both backends get the same seed, so the script also confirms that their
draws agree bit for bit before reporting a speed-up.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from glshrink import kernels
from glshrink.numerics import RngStream


def _cases(y, Y, n_warm, n_keep):
    return {
        "hs_chain": (y, 1.0, 0.0, n_warm, n_keep),
        "hsplus_chain": (y, 1.0, n_warm, n_keep),
        "laplace_chain": (y, 1.0, 1.0, n_warm, n_keep),
        "global_chain": (y, 1.0, n_warm, n_keep),
        "normal_draws": (y, 300.0, n_keep),
        "t_slice_chain": (Y, 3.0, 1, np.array([0.0, 300.0, 1.0, 1.0]), n_warm, n_keep),
    }


def _time(fn, args, seed, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        bg = RngStream(seed, 1).bit_generator
        t0 = time.perf_counter()
        out = fn(*args, bg)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=100)
    ap.add_argument("--iters", type=int, default=200, help="kept draws (warm-up is the same length)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20160601)
    args = ap.parse_args(argv)
    if kernels.COMPILED is None:
        print("compiled kernels are not built; nothing to compare")
        return 1

    gen = RngStream(args.seed).generator
    y = gen.normal(size=args.p)
    y[0] += 10.0
    Y = gen.standard_t(3, size=(100, 2))
    print(f"p={args.p} iterations={2 * args.iters} best of {args.repeat}")
    print(f"{'kernel':<15}{'python s':>11}{'compiled s':>12}{'speed-up':>10}  identical")
    for name, a in _cases(y, Y, args.iters, args.iters).items():
        t_py, out_py = _time(getattr(kernels.PYTHON, name), a, args.seed, args.repeat)
        t_c, out_c = _time(getattr(kernels.COMPILED, name), a, args.seed, args.repeat)
        same = all(np.array_equal(u, v) for u, v in zip(out_py, out_c))
        print(f"{name:<15}{t_py:>11.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
