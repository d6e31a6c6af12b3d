"""Compiled kernels vs the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-repeat wall time per call and the speedup. Both backends must
return identical arrays; the script exits non-zero otherwise.
"""

import argparse
import sys
import timeit

import numpy as np

from permstat import _backend
from permstat.matrix_conc import JACOBI_MAX_SWEEPS, JACOBI_TOL
from permstat.perm_core import Pcg32


def _sym_stack(count, d, seed=1):
    g = Pcg32(seed)
    raw = np.array([g.random() * 2 - 1 for _ in range(count * d * d)]).reshape(count, d, d)
    return (raw + raw.swapaxes(1, 2)) / 2


def cases():
    mats = _sym_stack(4096, 3)
    return {
        "permutation_batch N=200 x4096": lambda k: k.permutation_batch(200, 7, 3, 0, 4096),
        "permutation_batch N=20 x4096": lambda k: k.permutation_batch(20, 7, 3, 0, 4096),
        "jacobi 3x3 x4096": lambda k: k.jacobi_eigvals_batch(mats, JACOBI_TOL, JACOBI_MAX_SWEEPS),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if "compiled" not in _backend.BACKENDS:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
        return 1
    compiled, python = _backend.BACKENDS["compiled"], _backend.BACKENDS["python"]
    print(f"{'kernel':<32}{'compiled ms':>12}{'python ms':>12}{'speedup':>9}")
    mismatch = False
    for name, fn in cases().items():
        mismatch |= not np.array_equal(fn(compiled), fn(python))
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(python), number=1, repeat=args.repeat))
        print(f"{name:<32}{tc * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tc:>8.1f}x")
    if mismatch:
        print("backends disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
