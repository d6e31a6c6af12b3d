"""Two-sample permutation tests.

The pooled sample is ``z = (x_1..x_m, y_1..y_n)``. A relabeling puts unit
``i`` in the first group iff ``pi(i) <= m``. Statistics only see the two
groups, so exact mode enumerates the ``C(m+n, m)`` splits rather than all
``(m+n)!`` permutations.

p-value conventions: ties count as extreme (``>=``); two-sided compares
``|T - c|`` where ``c`` is the exact null mean of the statistic (0 for
``mean_diff`` and ``ks_two_sample``, so plain ``|T|`` there); Monte Carlo
uses ``(1 + #extreme) / (B + 1)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CapExceededError, DataError, InvalidSizeError
from .perm_core import RngState, map_chunks

EXACT_CAP = 1_000_000
SIDES = ("two", "greater", "less")
# relative slack when comparing a resampled statistic with the observed one
_TIE_RTOL = 1e-9


def _mean_diff(xs, ys):
    return xs.mean(axis=-1) - ys.mean(axis=-1)


def _ks_two_sample(xs, ys):
    m, n = xs.shape[-1], ys.shape[-1]
    pooled = np.concatenate([xs, ys], axis=-1)
    # evaluate both empirical CDFs at every pooled point
    fx = (xs[..., None, :] <= pooled[..., :, None]).mean(axis=-1)
    fy = (ys[..., None, :] <= pooled[..., :, None]).mean(axis=-1)
    return math.sqrt(m * n / (m + n)) * np.abs(fx - fy).max(axis=-1)


def _midranks(pooled):
    # average ranks along the last axis (ties share the mean rank)
    order = np.argsort(pooled, axis=-1, kind="stable")
    sorted_vals = np.take_along_axis(pooled, order, axis=-1)
    N = pooled.shape[-1]
    ranks_sorted = np.broadcast_to(np.arange(1, N + 1, dtype=np.float64), pooled.shape).copy()
    eq_prev = np.concatenate(
        [np.zeros(pooled.shape[:-1] + (1,), bool), sorted_vals[..., 1:] == sorted_vals[..., :-1]], axis=-1
    )
    if eq_prev.any():
        flat_vals = sorted_vals.reshape(-1, N)
        flat_ranks = ranks_sorted.reshape(-1, N)
        for r in np.flatnonzero(eq_prev.reshape(-1, N).any(axis=1)):
            _, inv, counts = np.unique(flat_vals[r], return_inverse=True, return_counts=True)
            sums = np.bincount(inv, weights=flat_ranks[r])
            flat_ranks[r] = (sums / counts)[inv]
        ranks_sorted = flat_ranks.reshape(pooled.shape)
    ranks = np.empty_like(ranks_sorted)
    np.put_along_axis(ranks, order, ranks_sorted, axis=-1)
    return ranks


def _wilcoxon(xs, ys):
    m = xs.shape[-1]
    ranks = _midranks(np.concatenate([xs, ys], axis=-1))
    return ranks[..., :m].sum(axis=-1)


def _mann_whitney(xs, ys):
    return (xs[..., :, None] < ys[..., None, :]).sum(axis=(-2, -1)).astype(np.float64)


def _zero_center(z, m):
    return 0.0


def _wilcoxon_center(z, m):
    return m * (z.size + 1) / 2.0


def _mann_whitney_center(z, m):
    # P(z_I < z_J) for a uniform ordered pair of distinct units
    N = z.size
    less = int((z[:, None] < z[None, :]).sum())
    return m * (N - m) * less / (N * (N - 1))


_CENTERS: dict[str, Callable] = {
    "mean_diff": _zero_center,
    "ks_two_sample": _zero_center,
    "wilcoxon": _wilcoxon_center,
    "mann_whitney": _mann_whitney_center,
}

_REGISTRY: dict[str, Callable] = {
    "mean_diff": _mean_diff,
    "ks_two_sample": _ks_two_sample,
    "wilcoxon": _wilcoxon,
    "mann_whitney": _mann_whitney,
}


def statistic_registry() -> dict[str, Callable]:
    """Named statistics ``T(x_group, y_group)``.

    Each evaluator takes arrays with the group members on the last axis and
    may carry leading batch axes. ``ks_two_sample`` is scaled by
    ``sqrt(mn / (m + n))``; ``mann_whitney`` counts pairs with ``x < y``.
    """
    return dict(_REGISTRY)


def register_statistic(name: str, fn: Callable, vectorized: bool = False, center: float = 0.0):
    """Add a user statistic. Non-vectorized ``fn(x, y) -> float`` is looped
    over batch rows. ``center`` is the null mean used by two-sided tests."""
    if name in _REGISTRY:
        raise ValueError(f"statistic {name!r} is already registered")
    _CENTERS[name] = lambda z, m, c=float(center): c
    if vectorized:
        _REGISTRY[name] = fn
        return

    def looped(xs, ys):
        xs2 = xs.reshape(-1, xs.shape[-1])
        ys2 = ys.reshape(-1, ys.shape[-1])
        out = np.array([float(fn(a, b)) for a, b in zip(xs2, ys2)])
        return out.reshape(xs.shape[:-1])

    _REGISTRY[name] = looped


def unregister_statistic(name: str):
    if name in ("mean_diff", "ks_two_sample", "wilcoxon", "mann_whitney"):
        raise ValueError("built-in statistics cannot be removed")
    _REGISTRY.pop(name, None)
    _CENTERS.pop(name, None)


def null_center(data: "TwoSampleData", statistic_id: str) -> float:
    get_statistic(statistic_id)
    return float(_CENTERS[statistic_id](data.pooled, data.m))


def get_statistic(statistic_id: str) -> Callable:
    try:
        return _REGISTRY[statistic_id]
    except KeyError:
        raise ValueError(
            f"unknown statistic {statistic_id!r}; choose from {', '.join(sorted(_REGISTRY))}"
        ) from None


@dataclass(frozen=True, eq=False)
class TwoSampleData:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).ravel()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.size < 1 or y.size < 1:
            raise InvalidSizeError("both samples need at least one value")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise DataError("samples must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.x.size

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def pooled(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    statistic_id: str
    observed: float
    p_value: float
    mode: str
    n_resamples: int
    side: str
    se: float = 0.0


def _check_side(side: str):
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def _extreme(values: np.ndarray, observed: float, side: str, center: float = 0.0) -> np.ndarray:
    if side == "two":
        values, observed = np.abs(values - center), abs(observed - center)
        tol = _TIE_RTOL * max(1.0, observed)
        return values >= observed - tol
    tol = _TIE_RTOL * max(1.0, abs(observed))
    if side == "greater":
        return values >= observed - tol
    return values <= observed + tol


def split_statistics(data: TwoSampleData, statistic_id: str, splits: np.ndarray) -> np.ndarray:
    """Statistic for each row of first-group index sets (0-based, length m)."""
    fn = get_statistic(statistic_id)
    z = data.pooled
    N = z.size
    in_x = np.zeros((splits.shape[0], N), dtype=bool)
    np.put_along_axis(in_x, splits, True, axis=1)
    # keep within-group order by original index
    xs = z[np.nonzero(in_x)[1].reshape(-1, data.m)]
    ys = z[np.nonzero(~in_x)[1].reshape(-1, data.n)]
    return np.asarray(fn(xs, ys), dtype=np.float64)


def exact_perm_test(data: TwoSampleData, statistic_id: str, side: str = "two",
                    cap: int = EXACT_CAP) -> TestResult:
    _check_side(side)
    m, N = data.m, data.m + data.n
    total = math.comb(N, m)
    if total > cap:
        raise CapExceededError(
            f"C({N},{m}) = {total} splits exceeds the exact cap {cap}; use mode='mc'"
        )
    fn = get_statistic(statistic_id)
    observed = float(fn(data.x[None, :], data.y[None, :])[0])
    center = null_center(data, statistic_id)
    count = 0
    block = 65536
    combos = itertools.combinations(range(N), m)
    while True:
        chunk = np.array(list(itertools.islice(combos, block)), dtype=np.int64)
        if chunk.size == 0:
            break
        count += int(_extreme(split_statistics(data, statistic_id, chunk.reshape(-1, m)),
                              observed, side, center).sum())
    return TestResult(statistic_id, observed, count / total, "exact", total, side)


def exact_null_distribution(data: TwoSampleData, statistic_id: str) -> np.ndarray:
    """Statistic over all ``C(m+n, m)`` splits, in lexicographic split order."""
    N = data.m + data.n
    splits = np.array(list(itertools.combinations(range(N), data.m)), dtype=np.int64)
    return split_statistics(data, statistic_id, splits.reshape(-1, data.m))


def mc_perm_test(data: TwoSampleData, statistic_id: str, side: str, B: int,
                 rng: RngState, threads=None) -> TestResult:
    _check_side(side)
    if B < 99:
        raise InvalidSizeError(f"need B >= 99 resamples, got {B}")
    fn = get_statistic(statistic_id)
    observed = float(fn(data.x[None, :], data.y[None, :])[0])
    center = null_center(data, statistic_id)
    z = data.pooled
    m = data.m

    def block(perms):
        inv = np.argsort(perms, axis=1)
        xs = z[np.sort(inv[:, :m], axis=1)]
        ys = z[np.sort(inv[:, m:], axis=1)]
        vals = np.asarray(fn(xs, ys), dtype=np.float64)
        return np.array([_extreme(vals, observed, side, center).sum()])

    count = int(map_chunks(block, z.size, B, rng, threads=threads).sum())
    p = (1 + count) / (B + 1)
    return TestResult(statistic_id, observed, p, "mc", B, side, math.sqrt(p * (1 - p) / B))


def two_sample_process_cov(data: TwoSampleData, m: int, f: Callable, g: Callable) -> float:
    """Limit covariance ``(1 - m/(m+n)) (H fg - H f H g)`` of the scaled
    first-group process, with ``H`` the pooled empirical law."""
    z = data.pooled
    N = z.size
    if not 1 <= m <= N:
        raise InvalidSizeError(f"need 1 <= m <= {N}, got {m}")
    fv = np.broadcast_to(np.asarray(f(z), dtype=np.float64), z.shape)
    gv = np.broadcast_to(np.asarray(g(z), dtype=np.float64), z.shape)
    return (1 - m / N) * float((fv * gv).mean() - fv.mean() * gv.mean())
