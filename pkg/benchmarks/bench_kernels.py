"""Compiled vs numpy kernels on the hot loops.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from kprojective import _kernels
from kprojective._kernels import python as py


def cases(rng):
    m = rng.standard_normal((3, 3, 4))
    v = rng.standard_normal((3, 4))
    f = rng.standard_normal((200, 3, 4))
    p = rng.standard_normal((10_000, 3, 4))
    return {
        "qmatmul 3x3": lambda k: k.qmatmul(m, m),
        "qmatvec 3x3": lambda k: k.qmatvec(m, v),
        "canonicalize_rep": lambda k: k.canonicalize_rep(v),
        "normalized_orbit x200": lambda k: k.normalized_orbit(m, v, 200),
        "power_iterate x200": lambda k: k.power_iterate(m, v, 200, 0.0),
        "min_abs_pairing 200 x 1e4": lambda k: k.min_abs_pairing(f, p),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.compiled is None:
        print("compiled kernels not built; run `python setup.py build_ext --inplace`")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'numpy (s)':>12s} {'cython (s)':>12s} {'speedup':>9s}")
    for name, fn in cases(rng).items():
        n = 1 if "min_abs" in name else 200
        tp = min(timeit.repeat(lambda: fn(py), number=n, repeat=args.repeat)) / n
        tc = min(timeit.repeat(lambda: fn(_kernels.compiled), number=n, repeat=args.repeat)) / n
        print(f"{name:28s} {tp:12.3e} {tc:12.3e} {tp / tc:9.1f}x")


if __name__ == "__main__":
    main()
