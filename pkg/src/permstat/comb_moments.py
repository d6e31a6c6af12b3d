"""Score matrices and the exact moments of permutation sums.

A score matrix ``a`` (N x N) defines the combinatorial sum
``Y(pi) = sum_i a[i, pi(i)]``. Every quantity here is a closed form in the
doubly centered matrix ``d``; nothing is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvalidSizeError
from .perm_core import Permutation, RngState

__all__ = [
    "PermMatrix",
    "SurveyMoments",
    "VectorPermMatrix",
    "build_perm_matrix",
    "build_vector_perm_matrix",
    "comb_sum_batch",
    "comb_sum_eval",
    "comb_sum_moments",
    "double_center",
    "multivariate_moments",
    "named_matrix",
    "oscillation_batch",
    "oscillation_eval",
    "oscillation_moments",
    "survey_mean_moments",
]


def double_center(a: np.ndarray) -> np.ndarray:
    """Subtract row and column means, add back the grand mean (last two axes
    are the permutation axes, any trailing axes are carried along)."""
    return a - a.mean(axis=0, keepdims=True) - a.mean(axis=1, keepdims=True) + a.mean(axis=(0, 1))


@dataclass(frozen=True, eq=False)
class PermMatrix:
    """Score matrix with its centered version and summary features.

    ``mu`` and ``sigma2`` are the exact mean and variance of the
    combinatorial sum under a uniform permutation; ``b_max`` is
    ``max |d_ij|``; ``d3`` and ``d4`` are ``sum |d|^3`` and ``sum d^4``.
    """

    N: int
    a: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    mu: float
    sigma2: float
    b_max: float
    d3: float
    d4: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def _as_square(a, min_n=2) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DataError(f"score matrix must be square, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("score matrix has non-finite entries")
    if arr.shape[0] < min_n:
        raise InvalidSizeError(f"score matrix needs N >= {min_n}, got N={arr.shape[0]}")
    return arr


def build_perm_matrix(a) -> PermMatrix:
    a = _as_square(a)
    N = a.shape[0]
    d = double_center(a)
    scale = max(float(np.abs(a).max()), 1.0)
    tol = 1e-10 * scale * N
    if np.abs(d.sum(axis=0)).max() > tol or np.abs(d.sum(axis=1)).max() > tol:
        raise DataError("centering failed: row/column sums of d are not zero")
    ad = np.abs(d)
    a.setflags(write=False)
    d.setflags(write=False)
    return PermMatrix(
        N=N,
        a=a,
        d=d,
        mu=float(a.sum() / N),
        sigma2=float((d * d).sum() / (N - 1)),
        b_max=float(ad.max()),
        d3=float((ad**3).sum()),
        d4=float((d**4).sum()),
    )


def _check_perm(M, pi: Permutation):
    if pi.n != M.N:
        raise DataError(f"permutation size {pi.n} does not match N={M.N}")


def comb_sum_eval(M: PermMatrix, pi: Permutation, centered: bool = False) -> float:
    """``sum_i a[i, pi(i)]``; with ``centered=True`` the sum over ``d``
    instead, which equals ``Y - mu``."""
    _check_perm(M, pi)
    src = M.d if centered else M.a
    return float(src[np.arange(M.N), pi.zero_based()].sum())


def comb_sum_batch(M: PermMatrix, perms: np.ndarray, centered: bool = False) -> np.ndarray:
    """Vectorized :func:`comb_sum_eval` over 0-based permutation rows."""
    src = M.d if centered else M.a
    return src[np.arange(M.N), perms].sum(axis=1)


def comb_sum_moments(M: PermMatrix) -> tuple[float, float]:
    return M.mu, M.sigma2


def oscillation_eval(M: PermMatrix, pi: Permutation) -> float:
    """Cyclic oscillation sum ``sum_i a[pi(i), pi(i+1)]`` with ``pi(N+1) = pi(1)``."""
    _check_perm(M, pi)
    p = pi.zero_based()
    return float(M.a[p, np.roll(p, -1)].sum())


def oscillation_batch(M: PermMatrix, perms: np.ndarray) -> np.ndarray:
    return M.a[perms, np.roll(perms, -1, axis=1)].sum(axis=1)


def oscillation_moments(M: PermMatrix) -> tuple[float, float]:
    """Exact mean and variance of the cyclic oscillation sum."""
    N = M.N
    if N < 3:
        raise InvalidSizeError(f"oscillation moments need N >= 3, got N={N}")
    a, d = M.a, M.d
    mean = (a.sum() - np.trace(a)) / (N - 1)
    diag = np.diag(d)
    var = (
        (d * d).sum() / (N - 2)
        - (d * d.T).sum() / ((N - 1) * (N - 2))
        + diag.sum() ** 2 / ((N - 1) ** 2 * (N - 2))
        - N * (diag * diag).sum() / ((N - 1) * (N - 2))
    )
    # closed form can land a few ulps below zero for degenerate matrices
    return float(mean), float(max(var, 0.0))


@dataclass(frozen=True)
class SurveyMoments:
    """Mean and variance of a without-replacement sample mean (and the
    covariance with a paired series when one was supplied)."""

    mean: float
    variance: float
    covariance: float | None = None


def survey_mean_moments(a, n: int, b=None) -> SurveyMoments:
    a = np.asarray(a, dtype=np.float64).ravel()
    N = a.size
    if N < 1 or not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    if N == 1:
        return SurveyMoments(float(a[0]), 0.0, 0.0 if b is not None else None)
    fpc = (N - n) / (N * n)
    ca = a - a.mean()
    var = fpc * (ca @ ca) / (N - 1)
    cov = None
    if b is not None:
        b = np.asarray(b, dtype=np.float64).ravel()
        if b.size != N:
            raise InvalidSizeError(f"paired series has length {b.size}, expected {N}")
        cov = float(fpc * (ca @ (b - b.mean())) / (N - 1))
    return SurveyMoments(float(a.mean()), float(var), cov)


@dataclass(frozen=True, eq=False)
class VectorPermMatrix:
    """Score matrix with vector entries ``a[i, j]`` of length ``m``."""

    N: int
    m: int
    a: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    mu_vec: np.ndarray = field(repr=False)
    Sigma: np.ndarray = field(repr=False)


def build_vector_perm_matrix(a) -> VectorPermMatrix:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
        raise DataError(f"vector score matrix must have shape (N, N, m), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("vector score matrix has non-finite entries")
    N, _, m = arr.shape
    if N < 2:
        raise InvalidSizeError(f"need N >= 2, got N={N}")
    d = double_center(arr)
    flat = d.reshape(N * N, m)
    Sigma = flat.T @ flat / (N - 1)
    Sigma = (Sigma + Sigma.T) / 2
    return VectorPermMatrix(N, m, arr, d, arr.sum(axis=(0, 1)) / N, Sigma)


def multivariate_moments(V: VectorPermMatrix) -> tuple[np.ndarray, np.ndarray]:
    return V.mu_vec.copy(), V.Sigma.copy()


NAMED_MATRICES = ("footrule", "rho", "rank1", "random")


def rank_one_factors(name: str, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Factors ``(u, v)`` with ``a[i, j] = u[i] * v[j]`` for the rank-one
    named matrices."""
    i = np.arange(1, N + 1, dtype=np.float64)
    if name == "rho":
        return i, i.copy()
    if name == "rank1":
        return i, i**2
    raise ValueError(f"{name!r} is not a rank-one named matrix")


def named_matrix(name: str, N: int, seed: int | None = None) -> np.ndarray:
    """Built-in score matrices.

    ``footrule``: ``|i - j|``; ``rho``: ``i * j``; ``rank1``: ``i * j**2``;
    ``random``: integers in ``0..9`` drawn from PCG32 with the given seed.
    """
    if N < 1:
        raise InvalidSizeError(f"N must be >= 1, got {N}")
    i = np.arange(1, N + 1, dtype=np.float64)
    if name == "footrule":
        return np.abs(i[:, None] - i[None, :])
    if name in ("rho", "rank1"):
        u, v = rank_one_factors(name, N)
        return np.outer(u, v)
    if name == "random":
        if seed is None:
            raise ValueError("the random matrix needs a seed")
        gen = RngState(seed).generator()
        return np.array([[gen.bounded(10) for _ in range(N)] for _ in range(N)], dtype=np.float64)
    raise ValueError(f"unknown matrix {name!r}; choose from {', '.join(NAMED_MATRICES)}")
