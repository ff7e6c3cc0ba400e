"""Compare the compiled kernels with the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on both backends, checks that their outputs agree bit for
bit, and times an end-to-end replace-one curve with each backend swapped
into the moments module.
"""
from __future__ import annotations

import argparse
import random
import sys
import timeit

import numpy as np

from fsrdp import _kernels_py, moments
from fsrdp.core import default_alpha_grid
from fsrdp.fswor import step_replace_one

try:
    from fsrdp import _kernels
except ImportError:
    _kernels = None


def _cases():
    rng = random.Random(0)
    signs = [rng.choice((-1, 1)) for _ in range(64)]
    logs = [rng.uniform(-50.0, 50.0) for _ in range(64)]
    table = moments._log_binom_table(256)
    return {
        "signed_log_sum (64 terms)": lambda k: k.signed_log_sum(signs, logs),
        "log_moment_direct (sigma=6, k<=256)": lambda k: k.log_moment_direct(4.0 / 36.0, 256, table),
        "log_moment_series (sigma=50, k<=64)": lambda k: k.log_moment_series(4.0 / 2500.0, 64, 200_000),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple) and not isinstance(a[0], np.ndarray):
        return a == b
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def _best(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def _curve(backend) -> None:
    moments.kernels = backend
    moments.clear_cache()
    for alpha in default_alpha_grid():
        step_replace_one(alpha, 6.0, 0.0024, 4)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    print(f"{'kernel':40s} {'compiled':>12s} {'python':>12s} {'speedup':>8s}  identical")
    for name, fn in _cases().items():
        fast = _best(lambda: fn(_kernels), args.repeat)
        slow = _best(lambda: fn(_kernels_py), args.repeat)
        same = _same(fn(_kernels), fn(_kernels_py))
        print(f"{name:40s} {fast * 1e6:10.1f}us {slow * 1e6:10.1f}us {slow / fast:7.1f}x  {same}")
    original = moments.kernels
    try:
        fast = min(timeit.repeat(lambda: _curve(_kernels), number=1, repeat=args.repeat))
        slow = min(timeit.repeat(lambda: _curve(_kernels_py), number=1, repeat=args.repeat))
    finally:
        moments.kernels = original
        moments.clear_cache()
    name = "replace-one curve, default grid (cold)"
    print(f"{name:40s} {fast * 1e3:10.1f}ms {slow * 1e3:10.1f}ms {slow / fast:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
