"""Rank statistics as permutation sums, with exact null moments.

Statistic ids (also used by the CLI): ``footrule``, ``spearman_rho``,
``kendall_tau``, ``chatterjee_xi``, ``wilcoxon`` (needs ``m``) and
``mann_whitney`` (needs ``m`` and ``n`` with ``m + n == N``).

Kendall's tau sums over *ordered* pairs ``i != j``, so ``tau(pi, pi)`` is
``N (N - 1)``, twice the unordered-pair convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comb_moments import build_perm_matrix, survey_mean_moments
from .errors import DataError, InvalidSizeError
from .perm_core import Permutation, RngState, enumerate_array, map_chunks

KINDS = ("footrule", "spearman_rho", "kendall_tau", "chatterjee_xi", "wilcoxon", "mann_whitney")

# the xi oracle materializes N! rows; 9! = 362880 is the largest we enumerate
XI_ENUM_CAP = 9


@dataclass(frozen=True)
class RankStat:
    kind: str
    m: int | None = None
    n: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rank statistic {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind in ("wilcoxon", "mann_whitney") and (self.m is None or self.m < 1):
            raise InvalidSizeError(f"{self.kind} needs a group size m >= 1")
        if self.kind == "mann_whitney" and (self.n is None or self.n < 1):
            raise InvalidSizeError("mann_whitney needs a second group size n >= 1")

    def check_size(self, N: int):
        if self.kind == "wilcoxon" and self.m > N:
            raise InvalidSizeError(f"wilcoxon group size m={self.m} exceeds N={N}")
        if self.kind == "mann_whitney" and self.m + self.n != N:
            raise InvalidSizeError(f"mann_whitney needs m + n = N, got {self.m} + {self.n} != {N}")


def _as_stat(kind) -> RankStat:
    return kind if isinstance(kind, RankStat) else RankStat(kind)


def rank_statistic_batch(kind, perms: np.ndarray, sigma: np.ndarray | None = None) -> np.ndarray:
    """Evaluate a statistic on 0-based permutation rows against a fixed
    0-based ``sigma`` (identity when omitted)."""
    stat = _as_stat(kind)
    perms = np.atleast_2d(np.asarray(perms, dtype=np.int64))
    N = perms.shape[1]
    stat.check_size(N)
    sig = np.arange(N) if sigma is None else np.asarray(sigma, dtype=np.int64)
    k = stat.kind
    if k == "footrule":
        return np.abs(perms - sig).sum(axis=1).astype(np.float64)
    if k == "spearman_rho":
        return ((perms - sig) ** 2).sum(axis=1).astype(np.float64)
    if k == "kendall_tau":
        sp = np.sign(perms[:, :, None] - perms[:, None, :])
        ss = np.sign(sig[:, None] - sig[None, :])
        return (sp * ss).sum(axis=(1, 2)).astype(np.float64)
    if k == "chatterjee_xi":
        ordered = perms[:, np.argsort(sig, kind="stable")]
        return np.abs(np.diff(ordered, axis=1)).sum(axis=1).astype(np.float64)
    if k == "wilcoxon":
        return (perms[:, : stat.m] + 1).sum(axis=1).astype(np.float64)
    # mann_whitney
    x = perms[:, : stat.m]
    y = perms[:, stat.m :]
    return (x[:, :, None] < y[:, None, :]).sum(axis=(1, 2)).astype(np.float64)


def rank_statistic(kind, pi: Permutation, sigma: Permutation | None = None) -> float:
    """Statistic value for ``pi`` against reference ``sigma`` (identity by
    default). For ``chatterjee_xi`` the ``sigma`` order defines the index
    sequence ``[1], ..., [N]``."""
    if sigma is not None and sigma.n != pi.n:
        raise DataError(f"size mismatch: pi has n={pi.n}, sigma has n={sigma.n}")
    sig = None if sigma is None else sigma.zero_based()
    return float(rank_statistic_batch(kind, pi.zero_based()[None, :], sig)[0])


def _xi_mean(N: int) -> float:
    # every adjacent pair (pi(i), pi(i+1)) is uniform over ordered distinct pairs
    i = np.arange(N)
    offdiag_sum = np.abs(i[:, None] - i[None, :]).sum()
    return float((N - 1) * offdiag_sum / (N * (N - 1)))


def rank_moments(kind, N: int, rng: RngState | None = None, B: int = 100_000, threads=None):
    """Exact mean and variance under a uniform ``pi`` and identity ``sigma``.

    Returns ``(mean, variance)``. The Chatterjee xi variance is enumerated
    for ``N <= XI_ENUM_CAP``; above that it is a Monte Carlo estimate and
    ``rng`` is required.
    """
    stat = _as_stat(kind)
    k = stat.kind
    if N < 2 or (k == "chatterjee_xi" and N < 3):
        raise InvalidSizeError(f"{k} moments need N >= {3 if k == 'chatterjee_xi' else 2}, got {N}")
    stat.check_size(N)
    i = np.arange(1, N + 1, dtype=np.float64)
    if k == "footrule":
        M = build_perm_matrix(np.abs(i[:, None] - i[None, :]))
        return M.mu, M.sigma2
    if k == "spearman_rho":
        M = build_perm_matrix((i[:, None] - i[None, :]) ** 2)
        return M.mu, M.sigma2
    if k == "kendall_tau":
        # ordered-pair tau is twice the classical S with Var(S) = N(N-1)(2N+5)/18
        return 0.0, 2.0 * N * (N - 1) * (2 * N + 5) / 9.0
    if k in ("wilcoxon", "mann_whitney"):
        m = stat.m
        sm = survey_mean_moments(i, m)
        w_mean, w_var = m * sm.mean, m * m * sm.variance
        if k == "wilcoxon":
            return w_mean, w_var
        # with distinct ranks U = m N - m (m - 1) / 2 - W
        return m * N - m * (m - 1) / 2 - w_mean, w_var
    # chatterjee_xi
    mean = _xi_mean(N)
    if N <= XI_ENUM_CAP:
        vals = rank_statistic_batch(stat, enumerate_array(N, cap=XI_ENUM_CAP))
        return mean, float(((vals - mean) ** 2).mean())
    if rng is None:
        raise InvalidSizeError(
            f"xi variance for N={N} > {XI_ENUM_CAP} is Monte Carlo; pass rng"
        )
    vals = map_chunks(lambda p: rank_statistic_batch(stat, p), N, B, rng, threads=threads)
    return mean, float(vals.var(ddof=1))


def enumerated_moments(kind, N: int) -> tuple[float, float]:
    """Brute-force mean and variance over all ``N!`` permutations."""
    vals = rank_statistic_batch(kind, enumerate_array(N))
    mean = vals.mean()
    return float(mean), float(((vals - mean) ** 2).mean())


def expected_footrule(N: int) -> float:
    """Closed form ``(N**2 - 1) / 3`` shared by the footrule and xi means."""
    return (N * N - 1) / 3
