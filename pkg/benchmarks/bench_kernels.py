"""Compare the compiled kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints median wall time per call for each kernel and backend, plus the
maximum absolute difference between the two results.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from qds import _fallback, kernels
from qds.channels import random_channel
from qds.spinchain import random_tensor


def _contiguous(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def cases(rng):
    c = random_channel(4, rng, 3)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    t = random_tensor(2, 3, rng)
    rho = np.eye(3, dtype=complex) / 3
    words6 = _contiguous(_fallback.word_products(t.ops, 6))
    kraus, ops = _contiguous(c.kraus), _contiguous(t.ops)
    return {
        "kraus_apply (n=4, m=3)": lambda impl: impl.kraus_apply(kraus, x),
        "kraus_power_apply (200 steps)": lambda impl: impl.kraus_power_apply(kraus, x, 200),
        "word_products (d=2, k=3, len 8)": lambda impl: impl.word_products(ops, 8),
        "gram_marginal (64 words, k=3)": lambda impl: impl.gram_marginal(words6, rho),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    ext = kernels.compiled
    if ext is None:
        print("compiled extension not available; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'compiled':>12s} {'fallback':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(rng).items():
        fb = min(timeit.repeat(lambda: fn(_fallback), number=20, repeat=args.repeat)) / 20
        if ext is not None:
            cy = min(timeit.repeat(lambda: fn(ext), number=20, repeat=args.repeat)) / 20
            diff = float(np.abs(np.asarray(fn(ext)) - np.asarray(fn(_fallback))).max())
            print(f"{name:34s} {cy * 1e6:10.1f}us {fb * 1e6:10.1f}us {fb / cy:7.2f}x {diff:10.1e}")
        else:
            print(f"{name:34s} {'-':>12s} {fb * 1e6:10.1f}us")


if __name__ == "__main__":
    main()
