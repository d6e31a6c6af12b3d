"""Normal-approximation diagnostics for combinatorial sums.

Includes the exchangeable-pair linearity check, Berry-Esseen style
certificates, Kolmogorov and Wasserstein-1 distances to N(0, 1), and the
partial-sum (Rosen) process of sequential sampling without replacement.

The normal CDF is ``0.5 * erfc(-x / sqrt(2))`` from :mod:`math`, which is
accurate to a few ulps (well inside 1e-12) over the whole real line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .comb_moments import PermMatrix, comb_sum_batch, survey_mean_moments
from .errors import DataError, DegenerateError, InvalidSizeError
from .perm_core import Permutation, enumerate_array

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
W1_TAIL = 8.0

__all__ = [
    "CLTCertificate",
    "RosenPath",
    "clt_certificate",
    "exchangeable_linearity_check",
    "ks_distance_to_normal",
    "normal_cdf",
    "normalize_population",
    "rosen_covariance",
    "rosen_path",
    "rosen_variance",
    "standardized_sum",
    "wasserstein1_to_normal",
]


def normal_cdf(x):
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    arr = np.asarray(x, dtype=np.float64)
    return np.array([0.5 * math.erfc(-v / _SQRT2) for v in arr.ravel()]).reshape(arr.shape)


def _require_spread(M: PermMatrix):
    if M.sigma2 <= 0:
        raise DegenerateError("sigma_A^2 = 0: the combinatorial sum is constant")


def standardized_sum(M: PermMatrix, pi: Permutation) -> float:
    _require_spread(M)
    if pi.n != M.N:
        raise DataError(f"permutation size {pi.n} does not match N={M.N}")
    return float((comb_sum_batch(M, pi.zero_based()[None, :])[0] - M.mu) / M.sigma)


def exchangeable_linearity_check(M: PermMatrix, cap: int = 8) -> float:
    """``max_pi |E[W' - W | pi] + (2/N) W(pi)|`` over all permutations.

    ``W = sum_i d[i, pi(i)]`` and ``W'`` is ``W`` after swapping ``pi`` at
    ``(I, J)``; the conditional mean averages all ``N^2`` ordered pairs,
    ``I = J`` included.
    """
    N = M.N
    perms = enumerate_array(N, cap=cap)
    d = M.d
    rows = np.arange(N)
    W = d[rows, perms].sum(axis=1)
    total = np.zeros_like(W)
    for I in range(N):
        for J in range(N):
            if I == J:
                continue
            # only the I-th and J-th summands change under the swap
            delta = (d[I, perms[:, J]] + d[J, perms[:, I]]
                     - d[I, perms[:, I]] - d[J, perms[:, J]])
            total += delta
    cond_mean = total / (N * N)
    return float(np.abs(cond_mean + (2.0 / N) * W).max())


@dataclass(frozen=True)
class CLTCertificate:
    """Rate quantities for the combinatorial CLT.

    ``r3 = sum|d|^3 / (N sigma^3)``, ``ratio = B_A / sigma_A`` and
    ``weak_rate = sqrt(ratio)``. Always ``r3 <= ratio``.
    """

    r3: float
    ratio: float
    weak_rate: float


def clt_certificate(M: PermMatrix) -> CLTCertificate:
    _require_spread(M)
    sigma = M.sigma
    ratio = M.b_max / sigma
    return CLTCertificate(M.d3 / (M.N * sigma**3), ratio, math.sqrt(ratio))


def _sorted_sample(samples) -> np.ndarray:
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if x.size == 0:
        raise DataError("need at least one sample")
    if not np.isfinite(x).all():
        raise DataError("samples must be finite")
    return x


def ks_distance_to_normal(samples) -> float:
    """``sup_t |F_B(t) - Phi(t)|`` for the empirical CDF of the samples."""
    x = _sorted_sample(samples)
    B = x.size
    phi = normal_cdf(x)
    # ties: the empirical CDF jumps once per distinct value
    upper = np.searchsorted(x, x, side="right") / B
    lower = np.searchsorted(x, x, side="left") / B
    return float(max(np.abs(upper - phi).max(), np.abs(lower - phi).max()))


def _normal_partial_expectation(x):
    """``int_{-inf}^x Phi(u) du = x Phi(x) + phi(x)``."""
    x = np.asarray(x, dtype=np.float64)
    return x * normal_cdf(x) + _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def wasserstein1_to_normal(samples) -> float:
    """``int |F_B(x) - Phi(x)| dx`` integrated exactly between order
    statistics, with both tails truncated at +-8.

    On each gap the empirical CDF is a constant level ``c`` and
    ``int (c - Phi) = c (b - a) - (G(b) - G(a))`` with ``G`` the
    antiderivative of ``Phi``; a gap where ``Phi`` crosses ``c`` is split at
    the normal quantile of ``c``.
    """
    from statistics import NormalDist

    x = _sorted_sample(samples)
    B = x.size
    knots = np.unique(np.clip(x, -W1_TAIL, W1_TAIL))
    edges = np.concatenate(([-W1_TAIL], knots, [W1_TAIL]))
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    level = np.searchsorted(x, lo, side="right") / B
    G_lo, G_hi = _normal_partial_expectation(lo), _normal_partial_expectation(hi)
    signed = level * (hi - lo) - (G_hi - G_lo)
    phi_lo, phi_hi = normal_cdf(lo), normal_cdf(hi)
    above = phi_hi <= level
    below = ~above & (phi_lo >= level)
    total = float(signed[above].sum() - signed[below].sum())
    quantile = NormalDist().inv_cdf
    for i in np.flatnonzero(~above & ~below):
        c = float(level[i])
        r = min(max(quantile(c), lo[i]), hi[i])
        G_r = float(_normal_partial_expectation(r))
        left = c * (r - lo[i]) - (G_r - G_lo[i])
        right = c * (hi[i] - r) - (G_hi[i] - G_r)
        total += float(left - right)
    return total


def normalize_population(z) -> np.ndarray:
    """Rescale to ``sum z = 0`` and ``sum z^2 = 1``."""
    z = np.asarray(z, dtype=np.float64).ravel()
    c = z - z.mean()
    ss = float(c @ c)
    if z.size < 2 or ss == 0.0:
        raise DegenerateError("population has no spread; cannot normalize")
    return c / math.sqrt(ss)


def _check_normalized(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size < 2:
        raise InvalidSizeError("Rosen process needs N >= 2")
    if abs(z.sum()) > 1e-9 or abs(float(z @ z) - 1.0) > 1e-9:
        raise DataError("z must satisfy sum z = 0 and sum z^2 = 1; call normalize_population")
    return z


@dataclass(frozen=True, eq=False)
class RosenPath:
    z: np.ndarray
    grid: np.ndarray
    values: np.ndarray


def rosen_path(z, pi: Permutation, grid) -> RosenPath:
    """``Z_N(t) = sum_{pi(i) <= ceil(N t)} z_i`` on a grid in [0, 1]."""
    z = _check_normalized(z)
    N = z.size
    if pi.n != N:
        raise DataError(f"permutation size {pi.n} does not match N={N}")
    g = np.asarray(grid, dtype=np.float64).ravel()
    if (g < 0).any() or (g > 1).any():
        raise DataError("grid times must lie in [0, 1]")
    inv = pi.inverse().zero_based()
    partial = np.concatenate(([0.0], np.cumsum(z[inv])))
    k = np.ceil(N * g - 1e-12).astype(int)
    return RosenPath(z, g, partial[np.clip(k, 0, N)])


def rosen_path_batch(z, perms: np.ndarray, ks) -> np.ndarray:
    """``Z_N(k/N)`` for 0-based permutation rows at integer steps ``ks``."""
    z = np.asarray(z, dtype=np.float64)
    ks = np.atleast_1d(ks)
    return np.stack([(z[None, :] * (perms < k)).sum(axis=1) for k in ks], axis=1)


def rosen_variance(z, k: int) -> float:
    """Exact ``Var Z_N(k/N)``, i.e. ``k^2`` times the variance of a size-k
    without-replacement sample mean of the normalized population."""
    z = _check_normalized(z)
    N = z.size
    if not 0 <= k <= N:
        raise InvalidSizeError(f"need 0 <= k <= N, got k={k}, N={N}")
    if k == 0:
        return 0.0
    return k * k * survey_mean_moments(z, k).variance


def rosen_covariance(N: int, k: int, l: int) -> float:
    """Exact ``Cov(Z_N(k/N), Z_N(l/N)) = min(k,l) (N - max(k,l)) / (N (N - 1))``."""
    if N < 2 or not (0 <= k <= N and 0 <= l <= N):
        raise InvalidSizeError(f"need N >= 2 and 0 <= k, l <= N, got N={N}, k={k}, l={l}")
    lo, hi = min(k, l), max(k, l)
    return lo * (N - hi) / (N * (N - 1))


def brownian_bridge_cov(s: float, t: float) -> float:
    return min(s, t) - s * t
