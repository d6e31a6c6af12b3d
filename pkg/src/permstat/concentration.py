"""Analytic tail and Orlicz bounds, and the harness that checks them.

Every bound is evaluated with its published constants, no sharpening:

==========================  ===============================================
kind                        bound on P(X >= t)
==========================  ===============================================
``comb_hoeffding_v1``       exp(-t^2 / (4 N B^2 + 4 sigma^2))
``comb_hoeffding_v2``       exp(-t^2 / (4 sigma_bar^2 + 4 sigma^2))
``comb_bernstein``          exp(-t^2 / (12 sigma^2 + 4 sqrt(2) B t))
``matrix_hoeffding``        2 d exp(-t^2 / (24 N M^2))
``matrix_bernstein``        2 d exp(-t^2 / (12 sigma^2 + 4 sqrt(2) M t))
``tolstikhin_talagrand``    exp(-n^2 t^2 / (8 N Sigma_F^2))
==========================  ===============================================

For the scalar combinatorial kinds ``X = Y - E[Y]``; for the matrix kinds
``X`` is the operator norm of the matrix sum; for the Talagrand kind ``X``
is the sup-deviation minus its mean.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .comb_moments import PermMatrix
from .errors import CapExceededError, DataError, InvalidSizeError
from .perm_core import RngState, map_chunks

SCALAR_KINDS = ("comb_hoeffding_v1", "comb_hoeffding_v2", "comb_bernstein")
MATRIX_KINDS = ("matrix_hoeffding", "matrix_bernstein")
KINDS = SCALAR_KINDS + MATRIX_KINDS + ("tolstikhin_talagrand",)

_REQUIRED = {
    "comb_hoeffding_v1": ("sigma2", "b_max", "N"),
    "comb_hoeffding_v2": ("sigma2_bar", "sigma2"),
    "comb_bernstein": ("sigma2", "b_max"),
    "matrix_hoeffding": ("d", "M", "N"),
    "matrix_bernstein": ("d", "sigma2", "M"),
    "tolstikhin_talagrand": ("Sigma2_F", "n", "N"),
}

SQRT2 = math.sqrt(2.0)
DOMINATION_ABS_TOL = 1e-12


@dataclass(frozen=True)
class TailBoundSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _REQUIRED:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        missing = [k for k in _REQUIRED[self.kind] if k not in self.params]
        if missing:
            raise DataError(f"{self.kind} is missing parameters: {', '.join(missing)}")
        for k in _REQUIRED[self.kind]:
            v = self.params[k]
            if not math.isfinite(v) or v < 0:
                raise DataError(f"{self.kind} parameter {k} must be finite and >= 0, got {v}")

    @property
    def prefactor(self) -> float:
        return 2.0 * self.params["d"] if self.kind in MATRIX_KINDS else 1.0

    @classmethod
    def for_matrix(cls, kind: str, M: PermMatrix) -> "TailBoundSpec":
        """Scalar combinatorial bound fed by a score matrix's features."""
        if kind == "comb_hoeffding_v1":
            return cls(kind, {"sigma2": M.sigma2, "b_max": M.b_max, "N": M.N})
        if kind == "comb_bernstein":
            return cls(kind, {"sigma2": M.sigma2, "b_max": M.b_max})
        raise ValueError(f"{kind} cannot be built from a PermMatrix alone")

    @classmethod
    def rank_one(cls, u, v) -> "TailBoundSpec":
        """Version II bound for ``a[i, j] = u[i] * v[j]``."""
        sigma2_bar, sigma2 = rank_one_features(u, v)
        return cls("comb_hoeffding_v2", {"sigma2_bar": sigma2_bar, "sigma2": sigma2})


def rank_one_features(u, v) -> tuple[float, float]:
    """``(sigma_bar^2, sigma^2)`` for a rank-one score matrix.

    ``sigma_bar^2`` is the relaxed form ``sqrt(sum cu^4) * sqrt(sum cv^4)``
    (an upper bound of the sup over permutations); ``sigma^2`` is the exact
    variance ``sum cu^2 * sum cv^2 / (N - 1)``.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.size != v.size or u.size < 2:
        raise DataError("rank-one factors need equal lengths N >= 2")
    cu, cv = u - u.mean(), v - v.mean()
    sigma2_bar = math.sqrt(float((cu**4).sum())) * math.sqrt(float((cv**4).sum()))
    sigma2 = float((cu @ cu) * (cv @ cv) / (u.size - 1))
    return sigma2_bar, sigma2


def _denominator(spec: TailBoundSpec, t: float) -> float:
    p = spec.params
    k = spec.kind
    if k == "comb_hoeffding_v1":
        return 4 * p["N"] * p["b_max"] ** 2 + 4 * p["sigma2"]
    if k == "comb_hoeffding_v2":
        return 4 * p["sigma2_bar"] + 4 * p["sigma2"]
    if k == "comb_bernstein":
        return 12 * p["sigma2"] + 4 * SQRT2 * p["b_max"] * t
    if k == "matrix_hoeffding":
        return 24 * p["N"] * p["M"] ** 2
    if k == "matrix_bernstein":
        return 12 * p["sigma2"] + 4 * SQRT2 * p["M"] * t
    return 8 * p["N"] * p["Sigma2_F"] / p["n"] ** 2


def tail_bound(spec: TailBoundSpec, t: float) -> float:
    if not t >= 0:
        raise InvalidSizeError(f"threshold must be >= 0, got {t}")
    denom = _denominator(spec, t)
    if t == 0:
        return spec.prefactor
    if denom == 0:
        # zero variance proxy: the deviation is identically 0
        return 0.0
    return spec.prefactor * math.exp(-t * t / denom)


@dataclass(frozen=True)
class OrliczBoundSpec:
    kind: str  # "bobkov_psi2" or "bernstein_serfling_psi1"
    n: int
    N: int
    l2_norm: float
    sup_norm: float | None = None

    def __post_init__(self):
        if self.kind not in ("bobkov_psi2", "bernstein_serfling_psi1"):
            raise ValueError(f"unknown Orlicz bound {self.kind!r}")
        if not 1 <= self.n <= self.N:
            raise InvalidSizeError(f"need 1 <= n <= N, got n={self.n}, N={self.N}")
        if self.l2_norm < 0 or (self.sup_norm is not None and self.sup_norm < 0):
            raise DataError("norms must be >= 0")
        if self.kind == "bernstein_serfling_psi1" and self.sup_norm is None:
            raise DataError("the psi_1 bound needs sup_norm")


def orlicz_bound(spec: OrliczBoundSpec) -> float:
    """Upper bound on the psi_2 (Bobkov) or psi_1 (Bernstein-Serfling) norm
    of ``(P_{pi,n} - P_N) f``."""
    n, N = spec.n, spec.N
    if spec.kind == "bobkov_psi2":
        return math.sqrt(12.0 / n * (1.0 + N / n)) * spec.l2_norm
    return 24.0 * SQRT2 / n * spec.sup_norm + math.sqrt(72.0 / (n * math.log(2.0))) * spec.l2_norm


def orlicz_norm_estimate(samples, p: int = 2, rtol: float = 1e-9) -> float:
    """Plug-in Orlicz norm ``inf{C > 0 : mean(psi_p(|x| / C)) <= 1}``.

    ``psi_p(x) = exp(x**p) - 1``. The bisection bracket is clipped to
    ``[max|x| / 50, 50 max|x|]``, which biases the estimate when a small
    sample has one dominant value.
    """
    x = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    if x.size == 0 or not np.isfinite(x).all():
        raise DataError("need at least one finite sample")
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    top = float(x.max())
    if top == 0.0:
        return 0.0

    def excess(C):
        with np.errstate(over="ignore"):
            return float(np.expm1((x / C) ** p).mean()) - 1.0

    lo, hi = top / 50.0, top * 50.0
    if excess(lo) <= 0:
        return lo
    if excess(hi) > 0:
        return hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True, eq=False)
class EmpiricalTail:
    """Survival estimates ``P(X >= t)`` on a threshold grid.

    ``se`` is the binomial standard error; it is identically zero when the
    tail came from exhaustive enumeration (``exact=True``).
    """

    thresholds: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    n_draws: int
    exact: bool = False


def _grid(thresholds) -> np.ndarray:
    t = np.asarray(thresholds, dtype=np.float64).ravel()
    if t.size == 0:
        raise DataError("threshold grid is empty")
    return t


def tail_from_values(values, thresholds, exact: bool = False) -> EmpiricalTail:
    """Survival function of a fixed sample (or of an enumerated law)."""
    t = _grid(thresholds)
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    B = v.size
    counts = B - np.searchsorted(v, t, side="left")
    surv = counts / B
    se = np.zeros_like(surv) if exact else np.sqrt(surv * (1 - surv) / B)
    return EmpiricalTail(t, surv, se, B, exact)


def empirical_tail(
    statistic: Callable[[np.ndarray], np.ndarray],
    n: int,
    thresholds,
    B: int,
    rng: RngState,
    threads: int | None = None,
) -> EmpiricalTail:
    """Monte Carlo tail of ``statistic`` under uniform permutations of size n.

    ``statistic`` maps a ``(count, n)`` block of 0-based permutations to
    ``count`` values. Exceedances are integer counts over fixed chunks, so
    the estimate does not depend on the number of worker threads.
    """
    t = _grid(thresholds)
    if B < 100:
        raise InvalidSizeError(f"need B >= 100 draws, got {B}")

    def count_block(perms):
        vals = statistic(perms)
        return (vals[:, None] >= t[None, :]).sum(axis=0, keepdims=True)

    counts = map_chunks(count_block, n, B, rng, threads=threads).sum(axis=0)
    surv = counts / B
    return EmpiricalTail(t, surv, np.sqrt(surv * (1 - surv) / B), B)


@dataclass(frozen=True)
class DominationRow:
    t: float
    bound: float
    empirical: float
    se: float
    slack: float
    verdict: str


def domination_check(spec, emp: EmpiricalTail, bound_fn=None) -> list[DominationRow]:
    """PASS at ``t`` iff ``bound(t) >= survival(t) - 3 se - 1e-12``.

    ``bound_fn`` overrides :func:`tail_bound` (used for test fixtures and for
    bounds outside :class:`TailBoundSpec`).
    """
    fn = bound_fn or (lambda t: tail_bound(spec, t))
    rows = []
    for t, s, se in zip(emp.thresholds, emp.survival, emp.se):
        b = fn(float(t))
        slack = b - (s - 3 * se)
        rows.append(
            DominationRow(float(t), b, float(s), float(se), float(slack),
                          "PASS" if slack >= -DOMINATION_ABS_TOL else "FAIL")
        )
    return rows


CONVEX_FUNCTIONS = {
    "square": lambda x: x * x,
    "abs": np.abs,
    "exp": np.exp,
}

CONVEX_CAP = 1_000_000


@dataclass(frozen=True)
class ConvexOrderResult:
    e_without: float
    e_with: float
    verdict: str
    se: float = 0.0


def convex_order_check(
    z, n: int, f: Callable, mode: str = "exhaustive", B: int = 100_000,
    rng: RngState | None = None, cap: int = CONVEX_CAP,
) -> ConvexOrderResult:
    """Compare ``E f(sum without replacement)`` to ``E f(sum with replacement)``.

    ``f`` must accept a NumPy array of sums. Exhaustive mode enumerates the
    ``C(N, n)`` subsets and the ``N**n`` ordered draws; mc mode samples B of
    each and allows 3 combined standard errors.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    N = z.size
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    if mode == "exhaustive":
        if math.comb(N, n) > cap or N**n > cap:
            raise CapExceededError(f"C({N},{n}) or {N}**{n} exceeds the cap {cap}; use mode='mc'")
        wo = np.array([z[list(c)].sum() for c in itertools.combinations(range(N), n)])
        idx = np.array(list(itertools.product(range(N), repeat=n)), dtype=np.int64)
        wi = z[idx].sum(axis=1)
        e_wo, e_wi = float(np.mean(f(wo))), float(np.mean(f(wi)))
        tol = 1e-12 * max(1.0, abs(e_wi))
        return ConvexOrderResult(e_wo, e_wi, "PASS" if e_wo <= e_wi + tol else "FAIL")
    if mode != "mc":
        raise ValueError(f"mode must be 'exhaustive' or 'mc', got {mode!r}")
    if rng is None:
        raise DataError("mc mode needs rng")
    fwo = np.asarray(f(map_chunks(lambda p: z[np.argsort(p, axis=1)[:, :n]].sum(axis=1), N, B, rng)))
    gen = rng.spawn(1).generator()
    idx = np.array([gen.bounded(N) for _ in range(B * n)], dtype=np.int64).reshape(B, n)
    fwi = np.asarray(f(z[idx].sum(axis=1)))
    se = math.sqrt(fwo.var(ddof=1) / B + fwi.var(ddof=1) / B)
    e_wo, e_wi = float(fwo.mean()), float(fwi.mean())
    return ConvexOrderResult(e_wo, e_wi, "PASS" if e_wo <= e_wi + 3 * se else "FAIL", se)
