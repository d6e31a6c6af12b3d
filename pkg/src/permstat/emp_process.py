"""The permutation measure of a finite population and its sup-deviations.

A finite population ``z_1..z_N`` carries the uniform law ``P_N``; a sample
of ``n`` units drawn without replacement carries the permutation measure
``P_{pi,n}`` (uniform on the sampled units). Function classes are finite
lists of vectorized callables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .concentration import DOMINATION_ABS_TOL, TailBoundSpec, tail_bound
from .errors import DataError, InvalidSizeError
from .perm_core import RngState, SampleMask, map_chunks


@dataclass(frozen=True, eq=False)
class FinitePopulation:
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim not in (1, 2) or z.shape[0] < 1:
            raise DataError(f"population must be a non-empty array of points, got shape {z.shape}")
        if not np.isfinite(z).all():
            raise DataError("population has non-finite entries")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def N(self) -> int:
        return self.z.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.z.ndim == 1


@dataclass(frozen=True, eq=False)
class PermMeasure:
    population: FinitePopulation
    mask: SampleMask

    def __post_init__(self):
        if self.mask.n_total != self.population.N:
            raise DataError("mask size does not match the population")

    @property
    def n(self) -> int:
        return self.mask.n_sample


def _values(f: Callable, z: np.ndarray) -> np.ndarray:
    v = np.asarray(f(z), dtype=np.float64)
    if v.shape != (z.shape[0],):
        v = np.broadcast_to(v, (z.shape[0],)).astype(np.float64)
    return v


def population_apply(pop: FinitePopulation, f: Callable) -> float:
    """``P_N f``."""
    return float(_values(f, pop.z).mean())


def measure_apply(m: PermMeasure, f: Callable) -> float:
    """``P_{pi,n} f``: average of ``f`` over the sampled units."""
    return float(_values(f, m.population.z)[m.mask.as_array()].mean())


def _scalar(pop: FinitePopulation) -> np.ndarray:
    if not pop.is_scalar:
        raise DataError("indicator sup-deviation needs a scalar population")
    return pop.z


class IndicatorScanner:
    """Exact ``sup_t |F_{pi,n}(t) - F_N(t)|`` for many samples at once.

    Both CDFs are step functions with jumps at population atoms, so the sup
    is attained at one of the distinct atoms (at most N + 1 distinct
    outputs over all thresholds).
    """

    def __init__(self, z: np.ndarray):
        z = np.asarray(z, dtype=np.float64)
        self.order = np.argsort(z, kind="stable")
        zs = z[self.order]
        N = z.size
        # last sorted position of each distinct atom
        last = np.flatnonzero(np.append(zs[1:] != zs[:-1], True))
        self.atom_end = last
        self.pop_cdf = (last + 1) / N

    def sup_dev(self, masks: np.ndarray, n: int) -> np.ndarray:
        masks = np.atleast_2d(masks)
        cum = np.cumsum(masks[:, self.order], axis=1)
        sample_cdf = cum[:, self.atom_end] / n
        return np.abs(sample_cdf - self.pop_cdf).max(axis=1)


def sup_dev_indicator(m: PermMeasure) -> float:
    z = _scalar(m.population)
    return float(IndicatorScanner(z).sup_dev(m.mask.as_array()[None, :], m.n)[0])


def sup_dev_indicator_bruteforce(m: PermMeasure) -> float:
    """Direct evaluation at ``-inf`` and at every population point."""
    z = _scalar(m.population)
    mask = m.mask.as_array()
    best = 0.0
    for t in np.concatenate(([-np.inf], z)):
        gap = abs(float((z[mask] <= t).mean()) - float((z <= t).mean()))
        best = max(best, gap)
    return best


def sup_dev_class(m: PermMeasure, fs: Sequence[Callable]) -> tuple[float, int]:
    """``max_f |(P_{pi,n} - P_N) f|`` with the 0-based index of the first
    maximizer."""
    if len(fs) == 0:
        raise DataError("function class is empty")
    devs = np.array([abs(measure_apply(m, f) - population_apply(m.population, f)) for f in fs])
    idx = int(np.argmax(devs))
    return float(devs[idx]), idx


def donsker_cov(pop: FinitePopulation, n: int, f: Callable, g: Callable) -> float:
    """Exact ``Cov(G f, G g)`` for ``G = sqrt(n) (P_{pi,n} - P_N)``:
    ``(N - n) / (N - 1) * (P_N fg - P_N f P_N g)``."""
    N = pop.N
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    if N == 1:
        return 0.0
    fv, gv = _values(f, pop.z), _values(g, pop.z)
    return (N - n) / (N - 1) * float((fv * gv).mean() - fv.mean() * gv.mean())


def class_matrix(pop: FinitePopulation, fs: Sequence[Callable]) -> np.ndarray:
    """``(|F|, N)`` table of ``f(z_i)``."""
    return np.stack([_values(f, pop.z) for f in fs])


def sup_dev_class_batch(table: np.ndarray, perms: np.ndarray, n: int) -> np.ndarray:
    """Sup-deviation over a tabulated class for each 0-based permutation row."""
    masks = (perms < n).astype(np.float64)
    dev = masks @ table.T / n - table.mean(axis=1)
    return np.abs(dev).max(axis=1)


@dataclass(frozen=True)
class GCRow:
    n: int
    mean: float
    se: float


def gc_decay_experiment(pop: FinitePopulation, n_grid: Sequence[int], B: int, rng: RngState,
                        threads=None) -> list[GCRow]:
    """Monte Carlo ``E sup_t |F_{pi,n}(t) - F_N(t)|`` along a grid of sample sizes.

    The same permutations are reused across the grid (common random numbers).
    """
    if B < 100:
        raise InvalidSizeError(f"need B >= 100 draws, got {B}")
    z = _scalar(pop)
    N = z.size
    for n in n_grid:
        if not 1 <= n <= N:
            raise InvalidSizeError(f"sample size {n} outside 1..{N}")
    scan = IndicatorScanner(z)
    ns = list(n_grid)

    def block(perms):
        return np.stack([scan.sup_dev(perms < n, n) for n in ns], axis=1)

    vals = map_chunks(block, N, B, rng, threads=threads)
    rows = []
    for j, n in enumerate(ns):
        v = vals[:, j]
        rows.append(GCRow(n, float(v.mean()), float(v.std(ddof=1) / math.sqrt(B))))
    return rows


def class_sigma2(table: np.ndarray) -> float:
    """``Sigma_F^2 = max_f ||f - P_N f||^2_{L2(P_N)}``."""
    c = table - table.mean(axis=1, keepdims=True)
    return float((c * c).mean(axis=1).max())


@dataclass(frozen=True)
class TalagrandRow:
    t: float
    bound: float
    empirical: float
    se: float
    slack: float
    verdict: str


def talagrand_sup_bound_check(pop: FinitePopulation, fs, n: int, thresholds, B: int,
                              rng: RngState, threads=None, bound_scale: float = 1.0):
    """Compare the Tolstikhin-Talagrand bound with the Monte Carlo tail of
    ``sup-deviation - E sup-deviation`` (mean estimated from the same draws).

    ``fs`` is a list of callables or a precomputed ``(|F|, N)`` table.
    ``bound_scale`` multiplies the bound (used only to build failing fixtures).
    Returns ``(Sigma_F^2, mean_sup_dev, rows)``.
    """
    if B < 100:
        raise InvalidSizeError(f"need B >= 100 draws, got {B}")
    N = pop.N
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    table = np.asarray(fs, dtype=np.float64) if isinstance(fs, np.ndarray) else class_matrix(pop, fs)
    if table.ndim != 2 or table.shape[1] != N or table.shape[0] == 0:
        raise DataError("function class table must have shape (|F|, N) with |F| >= 1")
    sigma2_F = class_sigma2(table)
    spec = TailBoundSpec("tolstikhin_talagrand", {"Sigma2_F": sigma2_F, "n": n, "N": N})
    vals = map_chunks(lambda p: sup_dev_class_batch(table, p, n), N, B, rng, threads=threads)
    mean = float(vals.mean())
    centered = vals - mean
    rows = []
    for t in np.asarray(thresholds, dtype=np.float64).ravel():
        surv = float((centered >= t).mean())
        se = math.sqrt(surv * (1 - surv) / B)
        b = bound_scale * tail_bound(spec, float(t))
        slack = b - (surv - 3 * se)
        rows.append(TalagrandRow(float(t), b, surv, se, slack,
                                 "PASS" if slack >= -DOMINATION_ABS_TOL else "FAIL"))
    return sigma2_F, mean, rows


def indicator_class(z) -> list[Callable]:
    """Indicators ``1(x <= t)`` at every distinct population value."""
    return [(lambda x, t=t: (np.asarray(x) <= t).astype(np.float64)) for t in np.unique(z)]
