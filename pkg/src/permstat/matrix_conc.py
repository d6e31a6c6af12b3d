"""Combinatorial sums of symmetric matrices and their tail bounds.

Spectra come from cyclic Jacobi rotations (:func:`jacobi_eigh`); operator
norms are ``max |eigenvalue|``. The batched spectrum used by the Monte Carlo
harness runs in the compiled kernel and performs exactly the same rotation
sequence as :func:`jacobi_eigh`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .concentration import TailBoundSpec, empirical_tail, tail_bound
from .errors import DataError, InvalidSizeError
from .perm_core import Permutation, RngState

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_DIM = 64


def _check_symmetric(S) -> np.ndarray:
    S = np.array(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DataError(f"expected a square matrix, got shape {S.shape}")
    if S.shape[0] > MAX_DIM:
        raise InvalidSizeError(f"Jacobi solver is capped at d <= {MAX_DIM}, got d={S.shape[0]}")
    if not np.isfinite(S).all():
        raise DataError("matrix has non-finite entries")
    scale = max(float(np.abs(S).max()), 1.0)
    if np.abs(S - S.T).max() > 1e-12 * scale:
        raise DataError("matrix is not symmetric")
    return S


def jacobi_eigh(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm is at most
    ``1e-12 * ||S||_F``.
    """
    a = _check_symmetric(S)
    d = a.shape[0]
    v = np.eye(d)
    fro2 = 0.0
    for p in range(d):
        for q in range(d):
            fro2 = fro2 + a[p, q] * a[p, q]
    tol2 = JACOBI_TOL * JACOBI_TOL
    if fro2 != 0.0:
        for _ in range(JACOBI_MAX_SWEEPS):
            off = 0.0
            for p in range(d - 1):
                for q in range(p + 1, d):
                    off = off + a[p, q] * a[p, q]
            if 2.0 * off <= tol2 * fro2:
                break
            for p in range(d - 1):
                for q in range(p + 1, d):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    if abs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    a[p, p] = a[p, p] - t * apq
                    a[q, q] = a[q, q] + t * apq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(d):
                        if r == p or r == q:
                            continue
                        arp, arq = a[r, p], a[r, q]
                        a[r, p] = arp - s * (arq + tau * arp)
                        a[r, q] = arq + s * (arp - tau * arq)
                        a[p, r] = a[r, p]
                        a[q, r] = a[r, q]
                    vp, vq = v[:, p].copy(), v[:, q].copy()
                    v[:, p] = vp - s * (vq + tau * vp)
                    v[:, q] = vq + s * (vp - tau * vq)
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def sym_eigen(S) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted descending."""
    return jacobi_eigh(S)[0]


def op_norm(S) -> float:
    w = sym_eigen(S)
    return float(max(abs(w[0]), abs(w[-1])))


def eigvals_batch(mats: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Unsorted Jacobi eigenvalues of a ``(count, d, d)`` stack."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise DataError(f"expected a (count, d, d) stack, got shape {mats.shape}")
    return _backend.get(backend).jacobi_eigvals_batch(mats, JACOBI_TOL, JACOBI_MAX_SWEEPS)


def op_norm_batch(mats: np.ndarray, backend: str | None = None) -> np.ndarray:
    return np.abs(eigvals_batch(mats, backend)).max(axis=1)


@dataclass(frozen=True, eq=False)
class SymMatrixFamily:
    """``N x N`` array of symmetric ``d x d`` matrices ``A[i, j]``."""

    N: int
    d: int
    A: np.ndarray = field(repr=False)
    M_bound: float
    sigma2: float
    centered: bool


def _as_family_array(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 2:
        A = A[:, :, None, None]
    if A.ndim != 4 or A.shape[0] != A.shape[1] or A.shape[2] != A.shape[3]:
        raise DataError(f"matrix family must have shape (N, N, d, d), got {A.shape}")
    if not np.isfinite(A).all():
        raise DataError("matrix family has non-finite entries")
    if A.shape[0] < 1 or A.shape[2] > MAX_DIM:
        raise InvalidSizeError(f"unsupported family shape {A.shape}")
    scale = max(float(np.abs(A).max()), 1.0)
    if np.abs(A - A.swapaxes(2, 3)).max() > 1e-12 * scale:
        raise DataError("every A[i, j] must be symmetric")
    return A


def make_family(A) -> SymMatrixFamily:
    """Wrap a family without modifying it; computes ``M`` and ``sigma^2``."""
    A = _as_family_array(A)
    N, d = A.shape[0], A.shape[2]
    M = float(op_norm_batch(A.reshape(N * N, d, d)).max())
    sq = np.einsum("ijab,ijbc->ac", A, A)
    sigma2 = op_norm(0.5 * (sq + sq.T)) / N
    scale = max(float(np.abs(A).max()), 1.0)
    centered = bool(np.abs(A.sum(axis=(0, 1))).max() <= 1e-10 * scale * N * N)
    A.setflags(write=False)
    return SymMatrixFamily(N, d, A, M, sigma2, centered)


def center_family(A) -> SymMatrixFamily:
    """Subtract the grand mean ``(1/N^2) sum A[i, j]`` from every entry.

    This enforces ``sum_{i,j} A[i, j] = 0`` only; rows and columns are not
    separately centered.
    """
    A = _as_family_array(A)
    N = A.shape[0]
    return make_family(A - A.sum(axis=(0, 1)) / (N * N))


def matrix_comb_sum(F: SymMatrixFamily, pi: Permutation) -> np.ndarray:
    if pi.n != F.N:
        raise DataError(f"permutation size {pi.n} does not match N={F.N}")
    return F.A[np.arange(F.N), pi.zero_based()].sum(axis=0)


def matrix_comb_sum_batch(F: SymMatrixFamily, perms: np.ndarray) -> np.ndarray:
    return F.A[np.arange(F.N), perms].sum(axis=1)


def matrix_bound_spec(kind: str, F: SymMatrixFamily) -> TailBoundSpec:
    if not F.centered:
        raise DataError("matrix tail bounds need a centered family (sum of A[i, j] = 0)")
    if kind == "hoeffding":
        return TailBoundSpec("matrix_hoeffding", {"d": F.d, "M": F.M_bound, "N": F.N})
    if kind == "bernstein":
        return TailBoundSpec("matrix_bernstein", {"d": F.d, "sigma2": F.sigma2, "M": F.M_bound})
    raise ValueError(f"kind must be 'hoeffding' or 'bernstein', got {kind!r}")


def matrix_tail_bound(kind: str, F: SymMatrixFamily, t: float) -> float:
    """``P(||sum_i A[i, pi(i)]||_op >= t)`` bound, prefactor ``2d`` included."""
    return tail_bound(matrix_bound_spec(kind, F), t)


def matrix_scale(F: SymMatrixFamily) -> float:
    """Natural deviation scale ``sqrt(N sigma^2 / (N - 1))``; equals sigma_A
    when ``d = 1`` and the family is a centered score matrix."""
    if F.N < 2:
        return 0.0
    return math.sqrt(F.N * F.sigma2 / (F.N - 1))


def matrix_empirical_tail(F: SymMatrixFamily, thresholds, B: int, rng: RngState, threads=None):
    return empirical_tail(
        lambda p: op_norm_batch(matrix_comb_sum_batch(F, p)), F.N, thresholds, B, rng, threads
    )


def random_centered_family(N: int, d: int, rng: RngState) -> SymMatrixFamily:
    """Family with symmetric entries drawn uniformly from ``[-1, 1]``, then
    centered."""
    if N < 1 or d < 1:
        raise InvalidSizeError(f"need N, d >= 1, got N={N}, d={d}")
    gen = rng.generator()
    raw = np.array([2.0 * gen.random() - 1.0 for _ in range(N * N * d * d)]).reshape(N, N, d, d)
    raw = np.triu(raw) + np.swapaxes(np.triu(raw, 1), 2, 3)
    return center_family(raw)
