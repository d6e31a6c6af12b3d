"""The acceptance suite behind ``permstat verify-all``.

Each ``criterion_*`` function returns a list of :class:`~permstat.report.Check`
records. Stochastic checks draw from ``RngState(seed, 0).spawn(key)`` with a
fixed key per check, so a report depends only on ``(seed, reps)``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import _backend
from .comb_moments import (
    build_perm_matrix,
    comb_sum_batch,
    named_matrix,
    oscillation_batch,
    oscillation_moments,
    rank_one_factors,
    survey_mean_moments,
)
from .concentration import (
    CONVEX_FUNCTIONS,
    TailBoundSpec,
    convex_order_check,
    domination_check,
    empirical_tail,
)
from .emp_process import FinitePopulation, donsker_cov
from .matrix_conc import (
    matrix_bound_spec,
    matrix_comb_sum_batch,
    matrix_scale,
    op_norm_batch,
    random_centered_family,
)
from .perm_core import RngState, SampleMask, enumerate_array, map_chunks
from .perm_test import TwoSampleData, exact_perm_test, mc_perm_test, two_sample_process_cov
from .rank_stats import RankStat, enumerated_moments, expected_footrule
from .report import Check, verdict
from .series_reg import (
    BasisSpec,
    basis_eval,
    mc_losses,
    population_fit,
    reg_diagnostics,
    reg_loss,
    sample_fit,
)
from .stein_clt import (
    clt_certificate,
    exchangeable_linearity_check,
    ks_distance_to_normal,
    normalize_population,
    rosen_covariance,
    rosen_path_batch,
    rosen_variance,
    wasserstein1_to_normal,
)

SIGMA_GRID = (0.5, 1.0, 2.0, 3.0, 4.0)
RANDOM_SEEDS = (1, 2, 3)
CORPUS = ("footrule", "rho", "rank1") + tuple(f"random:{s}" for s in RANDOM_SEEDS)


def corpus_matrix(label: str, N: int) -> np.ndarray:
    if label.startswith("random:"):
        return named_matrix("random", N, seed=int(label.split(":")[1]))
    return named_matrix(label, N)


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(b))


def _rng(seed: int, key: int) -> RngState:
    return RngState(seed, 0).spawn(key)


def _cov_with_se(u: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    cu, cv = u - u.mean(), v - v.mean()
    prod = cu * cv
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(prod.size))


# 1. exact moment oracles ---------------------------------------------------

def criterion_exact_moments(rtol: float = 1e-10) -> list[Check]:
    checks = []
    for label in CORPUS:
        an, em, ok = [], [], True
        for N in range(3, 8):
            M = build_perm_matrix(corpus_matrix(label, N))
            Y = comb_sum_batch(M, enumerate_array(N))
            mean, var = float(Y.mean()), float(((Y - Y.mean()) ** 2).mean())
            an.append([M.mu, M.sigma2])
            em.append([mean, var])
            ok &= _close(mean, M.mu, rtol) and _close(var, M.sigma2, rtol)
        checks.append(Check(f"comb_sum_moments/{label}", {"N": list(range(3, 8)), "rtol": rtol},
                            an, em, None, verdict(ok)))
    for label in CORPUS:
        an, em, ok = [], [], True
        for N in range(3, 7):
            M = build_perm_matrix(corpus_matrix(label, N))
            W = oscillation_batch(M, enumerate_array(N))
            mean, var = float(W.mean()), float(((W - W.mean()) ** 2).mean())
            mu, s2 = oscillation_moments(M)
            an.append([mu, s2])
            em.append([mean, var])
            ok &= _close(mean, mu, rtol) and _close(var, s2, rtol)
        checks.append(Check(f"oscillation_moments/{label}", {"N": list(range(3, 7)), "rtol": rtol},
                            an, em, None, verdict(ok)))
    for label in ("ranks", "random:5"):
        an, em, ok = [], [], True
        for N in range(1, 8):
            a = (np.arange(1.0, N + 1) if label == "ranks"
                 else named_matrix("random", N, seed=5)[0] - 4.5)
            for n in range(1, N + 1):
                means = np.array([a[list(c)].mean() for c in itertools.combinations(range(N), n)])
                sm = survey_mean_moments(a, n)
                var = float(((means - means.mean()) ** 2).mean())
                an.append([sm.mean, sm.variance])
                em.append([float(means.mean()), var])
                ok &= _close(float(means.mean()), sm.mean, rtol) and _close(var, sm.variance, rtol)
        checks.append(Check(f"survey_mean_moments/{label}", {"N": "1..7", "n": "1..N", "rtol": rtol},
                            an, em, None, verdict(ok)))
    return checks


# 2. rank-statistic moments -------------------------------------------------

def criterion_rank_moments() -> list[Check]:
    checks = []
    Ns = list(range(3, 9))
    for kind in ("footrule", "chatterjee_xi"):
        an = [expected_footrule(N) for N in Ns]
        em = [enumerated_moments(kind, N)[0] for N in Ns]
        ok = all(_close(e, a, 1e-12) for a, e in zip(an, em))
        checks.append(Check(f"rank_mean/{kind}", {"N": Ns}, an, em, None, verdict(ok)))
    an, em = [], []
    for N in range(2, 9):
        for m in range(1, N + 1):
            an.append(m * (N + 1) / 2)
            em.append(enumerated_moments(RankStat("wilcoxon", m), N)[0])
    ok = all(_close(e, a, 1e-12) for a, e in zip(an, em))
    checks.append(Check("rank_mean/wilcoxon", {"N": "2..8", "m": "1..N"}, an, em, None, verdict(ok)))
    return checks


# 3. Stein linearity ------------------------------------------------------------

def criterion_stein_linearity(tol: float = 1e-12) -> list[Check]:
    checks = []
    for label in CORPUS:
        defects = [exchangeable_linearity_check(build_perm_matrix(corpus_matrix(label, N)))
                   for N in range(3, 7)]
        checks.append(Check(f"stein_linearity/{label}", {"N": list(range(3, 7)), "tol": tol},
                            0.0, defects, None, verdict(max(defects) <= tol)))
    return checks


# 4. tail domination ----------------------------------------------------------

def _domination_record(name, inputs, rows) -> Check:
    return Check(
        name,
        inputs | {"t": [r.t for r in rows]},
        [r.bound for r in rows],
        [r.empirical for r in rows],
        [r.se for r in rows],
        verdict(all(r.verdict == "PASS" for r in rows)),
    )


def criterion_tail_domination(seed: int, reps: int, threads=None) -> list[Check]:
    checks = []
    key = 400
    for N in (20, 50):
        for label in ("footrule", "rho", "rank1", "random:1"):
            key += 1
            M = build_perm_matrix(corpus_matrix(label, N))
            grid = [g * M.sigma for g in SIGMA_GRID]
            emp = empirical_tail(lambda p, M=M: comb_sum_batch(M, p, centered=True), N, grid,
                                 reps, _rng(seed, key), threads)
            specs = [("comb_hoeffding_v1", TailBoundSpec.for_matrix("comb_hoeffding_v1", M)),
                     ("comb_bernstein", TailBoundSpec.for_matrix("comb_bernstein", M))]
            if label in ("rho", "rank1"):
                specs.append(("comb_hoeffding_v2", TailBoundSpec.rank_one(*rank_one_factors(label, N))))
            for kind, spec in specs:
                rows = domination_check(spec, emp)
                checks.append(_domination_record(
                    f"tail_domination/{kind}/{label}/N{N}",
                    {"N": N, "B": reps, "sigma": M.sigma}, rows))
        for d in (2, 3):
            key += 1
            F = random_centered_family(N, d, _rng(seed, key))
            scale = matrix_scale(F)
            grid = [g * scale for g in SIGMA_GRID]
            key += 1
            emp = empirical_tail(lambda p, F=F: op_norm_batch(matrix_comb_sum_batch(F, p)), N, grid,
                                 reps, _rng(seed, key), threads)
            for kind in ("hoeffding", "bernstein"):
                rows = domination_check(matrix_bound_spec(kind, F), emp)
                checks.append(_domination_record(
                    f"tail_domination/matrix_{kind}/d{d}/N{N}",
                    {"N": N, "d": d, "B": reps, "scale": scale}, rows))
    return checks


# 5. CLT rate behavior ----------------------------------------------------------

def criterion_clt_rate(seed: int, reps: int, threads=None) -> list[Check]:
    Ns = [20, 50, 200]
    ks, w1, r3, ratio = [], [], [], []
    for k, N in enumerate(Ns):
        M = build_perm_matrix(named_matrix("footrule", N))
        vals = map_chunks(lambda p, M=M: comb_sum_batch(M, p, centered=True) / M.sigma, N, reps,
                          _rng(seed, 500 + k), threads=threads)
        ks.append(ks_distance_to_normal(vals))
        w1.append(wasserstein1_to_normal(vals))
        cert = clt_certificate(M)
        r3.append(cert.r3)
        ratio.append(cert.ratio)
    inputs = {"matrix": "footrule", "N": Ns, "B": reps}
    return [
        Check("clt/ks_decreasing", inputs, None, ks, None, verdict(ks[2] < ks[1] < ks[0])),
        Check("clt/ks_small_at_N200", inputs | {"threshold": 0.05}, 0.05, ks[2], None,
              verdict(ks[2] < 0.05)),
        Check("clt/w1_reported", inputs, None, w1, None, "PASS"),
        Check("clt/certificate_r3_decreasing", {"matrix": "footrule", "N": Ns}, r3, None, None,
              verdict(r3[2] < r3[1] < r3[0])),
        Check("clt/certificate_ratio_decreasing", {"matrix": "footrule", "N": Ns}, ratio, None, None,
              verdict(ratio[2] < ratio[1] < ratio[0])),
    ]


# 6. Donsker covariance ---------------------------------------------------------

def _class_values(z):
    return {"id": z, "id2": z * z}


def criterion_donsker(seed: int, reps: int, threads=None) -> list[Check]:
    checks = []
    N, n = 100, 50
    z = np.arange(1.0, N + 1) / N
    pop = FinitePopulation(z)
    fv = _class_values(z)
    table = np.stack([fv["id"], fv["id2"]])

    def scaled(perms):
        mask = (perms < n).astype(np.float64)
        return math.sqrt(n) * (mask @ table.T / n - table.mean(axis=1))

    G = map_chunks(scaled, N, reps, _rng(seed, 600), threads=threads)
    for i, j, label in ((0, 0, "id,id"), (0, 1, "id,id2"), (1, 1, "id2,id2")):
        f, g = table[i], table[j]
        exact = donsker_cov(pop, n, lambda _x, f=f: f, lambda _x, g=g: g)
        emp, se = _cov_with_se(G[:, i], G[:, j])
        checks.append(Check(f"donsker_cov/mc/{label}", {"N": N, "n": n, "B": reps, "z": "i/N"},
                            exact, emp, se, verdict(abs(emp - exact) <= 3 * se)))

    an, em, ok = [], [], True
    for Nn in range(2, 8):
        zz = np.arange(1.0, Nn + 1)
        perms = enumerate_array(Nn)
        t = np.stack([zz, zz * zz])
        for m in range(1, Nn + 1):
            mask = (perms < m).astype(np.float64)
            Gm = math.sqrt(m) * (mask @ t.T / m - t.mean(axis=1))
            emp = float(((Gm[:, 0] - Gm[:, 0].mean()) * (Gm[:, 1] - Gm[:, 1].mean())).mean())
            exact = donsker_cov(FinitePopulation(zz), m, lambda x: x, lambda x: x * x)
            an.append(exact)
            em.append(emp)
            ok &= _close(emp, exact, 1e-10)
    checks.append(Check("donsker_cov/enumerated", {"N": "2..7", "n": "1..N", "f": "id", "g": "id2"},
                        an, em, None, verdict(ok)))

    # pooled two-sample construction with m = n = 50
    gen = _rng(seed, 601).generator()
    pooled = np.array([gen.random() for _ in range(100)]) + np.repeat([0.0, 0.5], 50)
    data = TwoSampleData(pooled[:50], pooled[50:])
    m = 50
    tb = np.stack([pooled, pooled * pooled])
    Gp = map_chunks(lambda p: math.sqrt(m) * ((p < m).astype(np.float64) @ tb.T / m - tb.mean(axis=1)),
                    100, reps, _rng(seed, 602), threads=threads)
    for i, j, label in ((0, 0, "id,id"), (0, 1, "id,id2")):
        f, g = tb[i], tb[j]
        exact = donsker_cov(FinitePopulation(pooled), m, lambda _x, f=f: f, lambda _x, g=g: g)
        limit = two_sample_process_cov(data, m, lambda _x, f=f: f, lambda _x, g=g: g)
        emp, se = _cov_with_se(Gp[:, i], Gp[:, j])
        checks.append(Check(f"two_sample_cov/mc/{label}",
                            {"m": m, "n": 50, "B": reps, "limit_covariance": limit},
                            exact, emp, se, verdict(abs(emp - exact) <= 3 * se)))
    return checks


# 7. Rosen process --------------------------------------------------------------

def criterion_rosen(seed: int, reps: int, threads=None) -> list[Check]:
    worst = 0.0
    for N in range(2, 51):
        z = normalize_population(np.arange(1.0, N + 1))
        for k in range(N + 1):
            worst = max(worst, abs(rosen_variance(z, k) - k * (N - k) / (N * (N - 1))))
    checks = [Check("rosen/variance_exact", {"N": "2..50", "k": "0..N", "tol": 1e-12},
                    0.0, worst, None, verdict(worst <= 1e-12))]
    N, k, l = 400, 100, 200
    z = normalize_population(np.arange(1.0, N + 1))
    vals = map_chunks(lambda p: rosen_path_batch(z, p, [k, l]), N, reps, _rng(seed, 700), threads=threads)
    emp, se = _cov_with_se(vals[:, 0], vals[:, 1])
    exact = rosen_covariance(N, k, l)
    checks.append(Check("rosen/cov_mc", {"N": N, "s": 0.25, "t": 0.5, "B": reps}, exact, emp, se,
                        verdict(abs(emp - exact) <= 3 * se)))
    return checks


# 8. convex ordering ------------------------------------------------------------

def criterion_convex_order() -> list[Check]:
    checks = []
    for label in ("ranks", "random:9"):
        em, ok = [], True
        for N in range(1, 6):
            z = np.arange(1.0, N + 1) if label == "ranks" else named_matrix("random", N, seed=9)[0] - 4.5
            fs = {"square": CONVEX_FUNCTIONS["square"], "abs": CONVEX_FUNCTIONS["abs"],
                  "exp(x/N)": lambda x, N=N: np.exp(x / N)}
            for fname, f in fs.items():
                for n in range(1, N + 1):
                    r = convex_order_check(z, n, f)
                    em.append([r.e_without, r.e_with])
                    ok &= r.verdict == "PASS"
        checks.append(Check(f"convex_order/{label}", {"N": "1..5", "n": "1..N",
                                                      "f": ["square", "abs", "exp(x/N)"]},
                            None, em, None, verdict(ok)))
    r = convex_order_check([1, 2, 3, 4], 2, CONVEX_FUNCTIONS["square"])
    ok = _close(r.e_without, 80 / 3, 1e-12) and _close(r.e_with, 27.5, 1e-12) and r.verdict == "PASS"
    checks.append(Check("convex_order/example", {"z": [1, 2, 3, 4], "n": 2, "f": "square"},
                        [80 / 3, 27.5], [r.e_without, r.e_with], None, verdict(ok)))
    return checks


# 9. permutation test -----------------------------------------------------------

def criterion_perm_test(seed: int, threads=None, mc_B: int = 9999, null_reps: int = 2000) -> list[Check]:
    data = TwoSampleData([1, 2], [3, 4])
    ex = exact_perm_test(data, "mean_diff", "two")
    checks = [Check("perm_test/exact_example", {"x": [1, 2], "y": [3, 4], "stat": "mean_diff"},
                    1 / 3, ex.p_value, None, verdict(_close(ex.p_value, 1 / 3, 1e-12)))]
    mc = mc_perm_test(data, "mean_diff", "two", mc_B, _rng(seed, 900), threads)
    se = math.sqrt((1 / 3) * (2 / 3) / mc_B)
    checks.append(Check("perm_test/mc_example", {"x": [1, 2], "y": [3, 4], "B": mc_B}, 1 / 3,
                        mc.p_value, se, verdict(abs(mc.p_value - 1 / 3) <= 3 * se)))
    gen = _rng(seed, 901).generator()
    ps = []
    for _ in range(null_reps):
        z = [gen.random() for _ in range(8)]
        ps.append(exact_perm_test(TwoSampleData(z[:4], z[4:]), "mean_diff", "two").p_value)
    ps = np.array(ps)
    for alpha in (0.05, 0.1):
        rate = float((ps <= alpha + 1e-12).mean())
        cap = alpha + 1 / math.comb(8, 4)
        checks.append(Check(f"perm_test/null_super_uniform/alpha{alpha}",
                            {"m": 4, "n": 4, "replicates": null_reps, "stat": "mean_diff"},
                            cap, rate, math.sqrt(rate * (1 - rate) / null_reps), verdict(rate <= cap)))
    return checks


# 10. series regression ---------------------------------------------------------

def series_population(N: int = 40, seed: int = 0):
    """Quadratic truth with small bounded noise on an equispaced design."""
    gen = RngState(seed, 1000).generator()
    x = np.arange(1.0, N + 1) / N
    y = x * x + 0.1 * (np.array([gen.random() for _ in range(N)]) - 0.5)
    return x, y


def criterion_series(seed: int, threads=None, B: int = 2000) -> list[Check]:
    checks = []
    spec = BasisSpec("polynomial", 2)
    x = np.arange(1.0, 8)
    y = 2 * x + 1
    pop = population_fit(x, y, spec)
    worst = 0.0
    for n in range(2, 8):
        for c in itertools.combinations(range(7), n):
            mask = SampleMask(7, n, tuple(i in c for i in range(7)))
            worst = max(worst, abs(reg_loss(sample_fit(x, y, mask, spec), pop)))
    checks.append(Check("series/exact_fit_loss", {"N": 7, "n": "2..7", "truth": "2x+1"}, 0.0, worst,
                        None, verdict(worst <= 1e-12)))

    worst = 0.0
    for N in range(2, 8):
        xx = np.arange(1.0, N + 1)
        PP = basis_eval(spec, xx)
        Q = PP.T @ PP / N
        for n in range(1, N + 1):
            Qs = [PP[list(c)].T @ PP[list(c)] / n for c in itertools.combinations(range(N), n)]
            worst = max(worst, float(np.abs(np.mean(Qs, axis=0) - Q).max() / max(1.0, np.abs(Q).max())))
    checks.append(Check("series/mean_Qhat_equals_Q", {"N": "2..7", "n": "1..N", "K": 2}, 0.0, worst,
                        None, verdict(worst <= 1e-10)))

    xs, ys = series_population(40, seed)
    rows = {}
    for k, n in enumerate((10, 20)):
        losses = mc_losses(xs, ys, spec, n, B, _rng(seed, 1001 + k), threads)
        diag = reg_diagnostics(xs, ys, spec, n)
        rows[n] = (float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(B)), diag.envelope)
    (m10, s10, e10), (m20, s20, e20) = rows[10], rows[20]
    margin = 3 * math.sqrt(s10**2 + s20**2)
    checks.append(Check("series/loss_decreases", {"N": 40, "K": 2, "n": [10, 20], "B": B},
                        None, [m10, m20], [s10, s20], verdict(m10 - m20 > margin)))
    C = m10 / e10
    checks.append(Check("series/loss_within_envelope",
                        {"N": 40, "K": 2, "n": 20, "B": B, "fitted_constant": C, "fitted_at_n": 10},
                        C * e20, m20, s20, verdict(m20 <= C * e20 + 3 * s20)))
    return checks


# 11. reproducibility -----------------------------------------------------------

def criterion_reproducibility(seed: int, reps: int) -> list[Check]:
    M = build_perm_matrix(named_matrix("footrule", 20))
    grid = [g * M.sigma for g in SIGMA_GRID]
    stat = lambda p: comb_sum_batch(M, p, centered=True)  # noqa: E731
    a = empirical_tail(stat, 20, grid, reps, _rng(seed, 1100), threads=1).survival
    b = empirical_tail(stat, 20, grid, reps, _rng(seed, 1100), threads=4).survival
    checks = [Check("reproducibility/threads", {"threads": [1, 4], "B": reps}, a, b, None,
                    verdict(np.array_equal(a, b)))]
    kernels = sorted(_backend.BACKENDS)
    ref = _backend.BACKENDS["python"].permutation_batch(50, seed, 1101, 0, 2000)
    same = all(np.array_equal(ref, _backend.BACKENDS[k].permutation_batch(50, seed, 1101, 0, 2000))
               for k in kernels)
    checks.append(Check("reproducibility/backends", {"backends": kernels, "n": 50, "count": 2000},
                        None, None, None, verdict(same)))
    return checks


CRITERIA = {
    1: "exact_moments",
    2: "rank_moments",
    3: "stein_linearity",
    4: "tail_domination",
    5: "clt_rate",
    6: "donsker",
    7: "rosen",
    8: "convex_order",
    9: "perm_test",
    10: "series",
    11: "reproducibility",
}


def run_criterion(number: int, seed: int, reps: int, threads=None) -> list[Check]:
    if number == 1:
        return criterion_exact_moments()
    if number == 2:
        return criterion_rank_moments()
    if number == 3:
        return criterion_stein_linearity()
    if number == 4:
        return criterion_tail_domination(seed, reps, threads)
    if number == 5:
        return criterion_clt_rate(seed, reps, threads)
    if number == 6:
        return criterion_donsker(seed, reps, threads)
    if number == 7:
        return criterion_rosen(seed, reps, threads)
    if number == 8:
        return criterion_convex_order()
    if number == 9:
        return criterion_perm_test(seed, threads)
    if number == 10:
        return criterion_series(seed, threads)
    if number == 11:
        return criterion_reproducibility(seed, reps)
    raise ValueError(f"unknown criterion {number}")


def run_all(seed: int, reps: int, threads=None, only=None) -> list[Check]:
    checks = []
    for number, label in CRITERIA.items():
        if only is not None and number not in only:
            continue
        for c in run_criterion(number, seed, reps, threads):
            c.name = f"{number:02d}.{label}/{c.name}"
            checks.append(c)
    return checks
