"""Series (basis-expansion) least squares on a finite population.

The population fit projects ``y`` on ``K`` basis functions of ``x`` using
all ``N`` units; the sample fit does the same on a without-replacement
sample. Normal equations are solved with a Jacobi-based generalized
inverse, so rank-deficient samples still return a (minimum-norm) fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, InvalidSizeError
from .matrix_conc import jacobi_eigh
from .perm_core import RngState, SampleMask, map_chunks

PINV_RTOL = 1e-10


@dataclass(frozen=True)
class BasisSpec:
    """``polynomial``: ``(1, x, ..., x^(K-1))``; ``piecewise``: one-hot
    indicator of the knot cell containing x (``K = len(knots) - 1``)."""

    kind: str
    K: int
    knots: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("polynomial", "piecewise"):
            raise ValueError(f"basis kind must be 'polynomial' or 'piecewise', got {self.kind!r}")
        if self.K < 1:
            raise InvalidSizeError(f"K must be >= 1, got {self.K}")
        if self.kind == "piecewise":
            if self.knots is None or len(self.knots) != self.K + 1:
                raise DataError("piecewise basis needs K + 1 knots")
            if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
                raise DataError("knots must be strictly increasing")

    @classmethod
    def piecewise(cls, knots) -> "BasisSpec":
        knots = tuple(float(k) for k in knots)
        return cls("piecewise", len(knots) - 1, knots)


def basis_eval(spec: BasisSpec, x) -> np.ndarray:
    """Basis vector(s): shape ``(K,)`` for scalar x, ``(len(x), K)`` otherwise."""
    xa = np.asarray(x, dtype=np.float64)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if spec.kind == "polynomial":
        out = xa[:, None] ** np.arange(spec.K)
    else:
        knots = np.asarray(spec.knots)
        if (xa < knots[0]).any() or (xa > knots[-1]).any():
            raise DataError(f"x outside the knot range [{knots[0]}, {knots[-1]}]")
        # cells are [k_j, k_{j+1}); the last cell is closed on the right
        cell = np.clip(np.searchsorted(knots, xa, side="right") - 1, 0, spec.K - 1)
        out = np.zeros((xa.size, spec.K))
        out[np.arange(xa.size), cell] = 1.0
    return out[0] if scalar else out


def pinv_psd(S, rtol: float = PINV_RTOL) -> np.ndarray:
    """Generalized inverse of a symmetric PSD matrix; eigenvalues at most
    ``rtol * lambda_max`` are treated as zero."""
    w, v = jacobi_eigh(S)
    top = max(float(w[0]), 0.0)
    inv = np.zeros_like(w)
    keep = w > rtol * top
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T


@dataclass(frozen=True, eq=False)
class SeriesFit:
    beta: np.ndarray
    Q: np.ndarray
    lambda_min: float
    zeta: float
    rank_deficient: bool


def _check_xy(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0:
        raise DataError("empty data")
    if x.size != y.size:
        raise DataError(f"x and y lengths differ: {x.size} != {y.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("x and y must be finite")
    return x, y


def _fit(P: np.ndarray, y: np.ndarray, zeta: float) -> SeriesFit:
    n = P.shape[0]
    Q = P.T @ P / n
    Q = 0.5 * (Q + Q.T)
    w, _ = jacobi_eigh(Q)
    lam = float(w[-1])
    beta = pinv_psd(Q) @ (P.T @ y / n)
    deficient = lam <= PINV_RTOL * max(float(w[0]), 0.0)
    return SeriesFit(beta, Q, lam, zeta, bool(deficient))


def _zeta(P: np.ndarray) -> float:
    return float(np.sqrt((P * P).sum(axis=1)).max())


def population_fit(x, y, spec: BasisSpec) -> SeriesFit:
    """Projection of y on the basis over all N units. ``zeta`` is the largest
    basis-vector norm over the population."""
    x, y = _check_xy(x, y)
    P = basis_eval(spec, x)
    return _fit(P, y, _zeta(P))


def sample_fit(x, y, mask: SampleMask, spec: BasisSpec) -> SeriesFit:
    x, y = _check_xy(x, y)
    if mask.n_total != x.size:
        raise DataError(f"mask covers {mask.n_total} units, data has {x.size}")
    if mask.n_sample < 1:
        raise InvalidSizeError("sample is empty")
    P = basis_eval(spec, x)
    sel = mask.as_array()
    return _fit(P[sel], y[sel], _zeta(P))


def reg_loss(fit_hat: SeriesFit, fit_pop: SeriesFit) -> float:
    """``P_N (psi_hat - psi)^2 = (beta_hat - beta)' Q (beta_hat - beta)`` with
    the population ``Q``."""
    if fit_hat.beta.shape != fit_pop.beta.shape:
        raise DataError("fits use different K")
    diff = fit_hat.beta - fit_pop.beta
    return float(diff @ fit_pop.Q @ diff)


@dataclass(frozen=True)
class RegDiagnostics:
    """Rate ingredients for the sample series fit.

    ``gamma_N = 2 (B_N^2 + ||P_N' Y / N||^2)``; ``cross_moment_norm2`` is
    ``||P_N' Y / N||^2`` alone. ``envelope`` is
    ``(A_N^2 gamma_N + B_N^2) / lambda_K``.
    """

    A_N: float
    B_N2: float
    gamma_N: float
    cross_moment_norm2: float
    lambda_K: float
    zeta_K: float
    envelope: float
    loss: float | None = None


def reg_diagnostics(x, y, spec: BasisSpec, n: int, fit_hat: SeriesFit | None = None) -> RegDiagnostics:
    x, y = _check_xy(x, y)
    N = x.size
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    pop = population_fit(x, y, spec)
    P = basis_eval(spec, x)
    K = spec.K
    lam = pop.lambda_min
    A_N = (1.0 + pop.zeta / math.sqrt(lam)) * math.sqrt(math.log(K) / n) if lam > 0 else math.inf
    yp = y[:, None] * P
    c = yp - yp.mean(axis=0)
    B_N2 = float((c * c).mean(axis=0).sum() / n)
    cross = float(yp.mean(axis=0) @ yp.mean(axis=0))
    gamma = 2.0 * (B_N2 + cross)
    envelope = (A_N**2 * gamma + B_N2) / lam if lam > 0 else math.inf
    loss = reg_loss(fit_hat, pop) if fit_hat is not None else None
    return RegDiagnostics(A_N, B_N2, gamma, cross, lam, pop.zeta, envelope, loss)


def mc_losses(x, y, spec: BasisSpec, n: int, B: int, rng: RngState, threads=None) -> np.ndarray:
    """Losses of ``B`` sample fits on independent size-n samples."""
    x, y = _check_xy(x, y)
    N = x.size
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    pop = population_fit(x, y, spec)
    P = basis_eval(spec, x)

    def block(perms):
        out = np.empty(perms.shape[0])
        for r, p in enumerate(perms):
            sel = p < n
            fit = _fit(P[sel], y[sel], pop.zeta)
            diff = fit.beta - pop.beta
            out[r] = diff @ pop.Q @ diff
        return out

    return map_chunks(block, N, B, rng, threads=threads)


def cross_moment_error_exact(x, y, spec: BasisSpec, n: int) -> float:
    """Exact ``E||P_pi' Y / n - P_N' Y / N||^2``, equal to
    ``(N - n) / (N - 1) * B_N^2``; never above ``B_N^2``."""
    x, y = _check_xy(x, y)
    N = x.size
    if N == 1:
        return 0.0
    return (N - n) / (N - 1) * reg_diagnostics(x, y, spec, n).B_N2


def mc_cross_moment_error(x, y, spec: BasisSpec, n: int, B: int, rng: RngState, threads=None) -> np.ndarray:
    """Draws of ``||P_pi' Y / n - P_N' Y / N||^2`` over size-n samples."""
    x, y = _check_xy(x, y)
    N = x.size
    if not 1 <= n <= N:
        raise InvalidSizeError(f"need 1 <= n <= N, got n={n}, N={N}")
    yp = y[:, None] * basis_eval(spec, x)
    target = yp.mean(axis=0)

    def block(perms):
        diff = (perms < n).astype(np.float64) @ yp / n - target
        return (diff * diff).sum(axis=1)

    return map_chunks(block, N, B, rng, threads=threads)
