"""Command-line interface: ``permstat <subcommand> [flags]``.

Every subcommand writes a JSON report (``--format text`` for a terse
rendering of the same records). Exit status: 0 when every check passes,
1 when any check fails, 2 on usage or data errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .comb_moments import (
    NAMED_MATRICES,
    build_perm_matrix,
    comb_sum_batch,
    named_matrix,
    oscillation_batch,
    oscillation_moments,
    rank_one_factors,
)
from .concentration import TailBoundSpec, domination_check, empirical_tail
from .emp_process import (
    FinitePopulation,
    PermMeasure,
    gc_decay_experiment,
    indicator_class,
    sup_dev_indicator,
    sup_dev_indicator_bruteforce,
    talagrand_sup_bound_check,
)
from .errors import PermstatError
from .matrix_conc import (
    center_family,
    make_family,
    matrix_bound_spec,
    matrix_empirical_tail,
    matrix_scale,
    random_centered_family,
)
from .perm_core import RngState, enumerate_array, map_chunks, resolve_threads, sample_without_replacement
from .perm_test import EXACT_CAP, SIDES, TwoSampleData, exact_perm_test, mc_perm_test, statistic_registry
from .report import Check, Report, verdict
from .series_reg import (
    BasisSpec,
    cross_moment_error_exact,
    mc_cross_moment_error,
    mc_losses,
    reg_diagnostics,
)
from .stein_clt import (
    clt_certificate,
    ks_distance_to_normal,
    normalize_population,
    rosen_covariance,
    rosen_path_batch,
    rosen_variance,
    wasserstein1_to_normal,
)
from .verify import CRITERIA, SIGMA_GRID, run_all

# flags that never enter the config echo (they must not change the report)
_NOT_ECHOED = {"func", "threads", "output", "format", "command"}


class UsageError(Exception):
    pass


# CSV input -------------------------------------------------------------------

def read_csv(path, columns: int | None = None) -> np.ndarray:
    """Dense numeric CSV without header; LF or CRLF line endings.

    Errors carry the 1-based line number. Trailing blank lines are ignored.
    """
    rows = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    with fh:
        lines = list(csv.reader(fh))
    while lines and not any(c.strip() for c in lines[-1]):
        lines.pop()
    for lineno, row in enumerate(lines, start=1):
        if not any(c.strip() for c in row):
            raise UsageError(f"{path}:{lineno}: blank line")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise UsageError(f"{path}:{lineno}: non-numeric field in {','.join(row)!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise UsageError(f"{path}:{lineno}: non-finite value")
        if columns is not None and len(vals) != columns:
            raise UsageError(f"{path}:{lineno}: expected {columns} column(s), got {len(vals)}")
        if rows and len(vals) != len(rows[0]):
            raise UsageError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise UsageError(f"{path}: no data")
    return np.array(rows, dtype=np.float64)


def read_column(path) -> np.ndarray:
    return read_csv(path, columns=1)[:, 0]


def _need_seed(args):
    if getattr(args, "seed", None) is None:
        raise UsageError(f"{args.command} is stochastic and needs --seed")


def _score_matrix(args) -> tuple[np.ndarray, str]:
    if args.matrix_csv is not None:
        a = read_csv(args.matrix_csv)
        if a.shape[0] != a.shape[1]:
            raise UsageError(f"{args.matrix_csv}: score matrix must be square, got {a.shape}")
        return a, str(args.matrix_csv)
    if args.N is None:
        raise UsageError("--N is required with a named --matrix")
    if args.matrix == "random":
        _need_seed(args)
    return named_matrix(args.matrix, args.N, seed=args.seed), args.matrix


# subcommands -----------------------------------------------------------------

def cmd_moments(args) -> Report:
    a, label = _score_matrix(args)
    M = build_perm_matrix(a)
    N = M.N
    checks = []
    result = {"N": N, "mean": M.mu, "variance": M.sigma2, "b_max": M.b_max}
    if N >= 3:
        om, ov = oscillation_moments(M)
        result["oscillation"] = {"mean": om, "variance": ov}
    if label == "footrule":
        checks.append(Check("footrule_mean_closed_form", {"N": N}, (N * N - 1) / 3, M.mu, None,
                            verdict(abs(M.mu - (N * N - 1) / 3) <= 1e-10 * max(1.0, M.mu))))
    if N <= args.enum_cap:
        perms = enumerate_array(N, cap=args.enum_cap)
        Y = comb_sum_batch(M, perms)
        tol = 1e-10
        for name, an, em in (("mean", M.mu, float(Y.mean())),
                             ("variance", M.sigma2, float(((Y - Y.mean()) ** 2).mean()))):
            checks.append(Check(f"enumerated_{name}", {"N": N}, an, em, None,
                                verdict(abs(an - em) <= tol * max(1.0, abs(an)))))
        if N >= 3:
            W = oscillation_batch(M, perms)
            for name, an, em in (("oscillation_mean", om, float(W.mean())),
                                 ("oscillation_variance", ov, float(((W - W.mean()) ** 2).mean()))):
                checks.append(Check(f"enumerated_{name}", {"N": N}, an, em, None,
                                    verdict(abs(an - em) <= tol * max(1.0, abs(an)))))
    return Report("moments", {}, checks, result)


def _tail_rows(kind, rows) -> list[Check]:
    return [Check(f"{kind}@t={r.t:.6g}", {"kind": kind, "t": r.t}, r.bound, r.empirical, r.se,
                  r.verdict) for r in rows]


def cmd_tail_check(args) -> Report:
    _need_seed(args)
    a, label = _score_matrix(args)
    M = build_perm_matrix(a)
    grid = [g * M.sigma for g in args.grid]
    emp = empirical_tail(lambda p: comb_sum_batch(M, p, centered=True), M.N, grid, args.reps,
                         RngState(args.seed, 0), args.threads)
    kinds = args.kinds or ["comb_hoeffding_v1", "comb_bernstein"] + (
        ["comb_hoeffding_v2"] if label in ("rho", "rank1") else [])
    checks, table = [], []
    for kind in kinds:
        if kind == "comb_hoeffding_v2":
            if label not in ("rho", "rank1"):
                raise UsageError("comb_hoeffding_v2 needs a rank-one named matrix (rho, rank1)")
            spec = TailBoundSpec.rank_one(*rank_one_factors(label, M.N))
        else:
            spec = TailBoundSpec.for_matrix(kind, M)
        rows = domination_check(spec, emp)
        checks += _tail_rows(kind, rows)
        table += [{"kind": kind, "t": r.t, "bound": r.bound, "empirical": r.empirical, "se": r.se,
                   "verdict": r.verdict} for r in rows]
    return Report("tail-check", {}, checks, {"sigma": M.sigma, "table": table})


def cmd_clt_check(args) -> Report:
    _need_seed(args)
    rows, checks = [], []
    for k, N in enumerate(args.N):
        a = named_matrix(args.matrix, N, seed=args.seed)
        M = build_perm_matrix(a)
        vals = map_chunks(lambda p, M=M: comb_sum_batch(M, p, centered=True) / M.sigma, N, args.reps,
                          RngState(args.seed, 0).spawn(k), threads=args.threads)
        cert = clt_certificate(M)
        row = {"N": N, "B": args.reps,
               "certificate": {"r3": cert.r3, "ratio": cert.ratio, "weak_rate": cert.weak_rate},
               "ks": ks_distance_to_normal(vals), "w1": wasserstein1_to_normal(vals)}
        rows.append(row)
        checks.append(Check(f"r3_le_ratio/N{N}", {"N": N}, cert.ratio, cert.r3, None,
                            verdict(cert.r3 <= cert.ratio + 1e-12)))
    if len(rows) > 1:
        ks = [r["ks"] for r in rows]
        ratio = [r["certificate"]["ratio"] for r in rows]
        order = np.argsort(args.N)
        checks.append(Check("ratio_decreasing_in_N", {"N": args.N}, [ratio[i] for i in order], None, None,
                            verdict(all(ratio[i] > ratio[j] for i, j in zip(order, order[1:])))))
        checks.append(Check("ks_decreasing_in_N", {"N": args.N}, None, [ks[i] for i in order], None,
                            verdict(all(ks[i] > ks[j] for i, j in zip(order, order[1:])))))
    return Report("clt-check", {}, checks, {"rows": rows})


def read_family(args):
    if args.family_json is not None:
        try:
            data = json.loads(Path(args.family_json).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"{args.family_json}: {exc}") from None
        return np.asarray(data, dtype=np.float64)
    d = Path(args.family_dir)
    if not d.is_dir():
        raise UsageError(f"{d}: not a directory")
    blocks = {}
    for p in sorted(d.glob("A_*_*.csv")):
        parts = p.stem.split("_")
        try:
            i, j = int(parts[1]), int(parts[2])
        except (ValueError, IndexError):
            raise UsageError(f"{p}: block files must be named A_<i>_<j>.csv (1-based)") from None
        blocks[(i, j)] = read_csv(p)
    if not blocks:
        raise UsageError(f"{d}: no A_<i>_<j>.csv blocks")
    N = max(max(k) for k in blocks)
    if len(blocks) != N * N or set(blocks) != {(i, j) for i in range(1, N + 1) for j in range(1, N + 1)}:
        raise UsageError(f"{d}: expected all {N * N} blocks A_1_1 .. A_{N}_{N}")
    shapes = {b.shape for b in blocks.values()}
    if len(shapes) != 1:
        raise UsageError(f"{d}: blocks have differing shapes {sorted(shapes)}")
    return np.array([[blocks[(i, j)] for j in range(1, N + 1)] for i in range(1, N + 1)])


def cmd_matrix_check(args) -> Report:
    _need_seed(args)
    rng = RngState(args.seed, 0)
    if args.random is not None:
        N, d = args.random
        F = random_centered_family(N, d, rng.spawn(1))
    else:
        A = read_family(args)
        F = center_family(A) if args.center else make_family(A)
    scale = matrix_scale(F)
    grid = [g * scale for g in args.grid]
    emp = matrix_empirical_tail(F, grid, args.reps, rng.spawn(2), args.threads)
    checks = []
    for kind in ("hoeffding", "bernstein"):
        checks += _tail_rows(f"matrix_{kind}", domination_check(matrix_bound_spec(kind, F), emp))
    return Report("matrix-check", {}, checks,
                  {"N": F.N, "d": F.d, "M": F.M_bound, "sigma2": F.sigma2, "scale": scale})


def _population(args) -> np.ndarray:
    if args.population is not None:
        return read_column(args.population)
    if args.equispaced is None:
        raise UsageError("give --population CSV or --equispaced N")
    return np.arange(1.0, args.equispaced + 1) / args.equispaced


def cmd_gc_check(args) -> Report:
    _need_seed(args)
    pop = FinitePopulation(_population(args))
    ns = args.n or sorted({max(1, pop.N // 16), max(1, pop.N // 4), pop.N})
    rows = gc_decay_experiment(pop, ns, args.reps, RngState(args.seed, 0), args.threads)
    checks = [Check(f"bounded/n{r.n}", {"n": r.n}, 1.0, r.mean, r.se, verdict(0.0 <= r.mean <= 1.0))
              for r in rows]
    for r in rows:
        if r.n == pop.N:
            checks.append(Check("full_sample_zero", {"n": r.n}, 0.0, r.mean, r.se, verdict(r.mean == 0.0)))
    by_n = sorted(rows, key=lambda r: r.n)
    if len(by_n) > 1 and by_n[0].n < by_n[-1].n:
        lo, hi = by_n[0], by_n[-1]
        checks.append(Check("decay", {"n": [lo.n, hi.n]}, None, [lo.mean, hi.mean], [lo.se, hi.se],
                            verdict(hi.mean < lo.mean - 3 * math.hypot(lo.se, hi.se))))
    return Report("gc-check", {}, checks,
                  {"N": pop.N, "curve": [{"n": r.n, "mean": r.mean, "se": r.se} for r in rows]})


def cmd_sup_dev(args) -> Report:
    _need_seed(args)
    z = _population(args)
    pop = FinitePopulation(z)
    if not 1 <= args.n <= pop.N:
        raise UsageError(f"--n must lie in 1..{pop.N}")
    mask = sample_without_replacement(pop.N, args.n, RngState(args.seed, 0).spawn(1))
    m = PermMeasure(pop, mask)
    fast, brute = sup_dev_indicator(m), sup_dev_indicator_bruteforce(m)
    checks = [Check("scan_equals_bruteforce", {"n": args.n}, brute, fast, None, verdict(fast == brute))]
    result = {"N": pop.N, "n": args.n, "sample": mask.selected(), "sup_dev": fast}
    if args.talagrand:
        ts = args.t or [0.05, 0.1, 0.2]
        sigma2, mean, rows = talagrand_sup_bound_check(pop, indicator_class(z), args.n, ts, args.reps,
                                                       RngState(args.seed, 0).spawn(2), args.threads)
        result["talagrand"] = {"Sigma2_F": sigma2, "mean_sup_dev": mean}
        checks += [Check(f"talagrand@t={r.t:.6g}", {"t": r.t, "B": args.reps}, r.bound, r.empirical, r.se,
                         r.verdict) for r in rows]
    return Report("sup-dev", {}, checks, result)


def cmd_rosen(args) -> Report:
    z = normalize_population(read_column(args.population) if args.population is not None
                             else np.arange(1.0, args.N + 1))
    N = z.size
    ks = args.k or [N // 4, N // 2]
    if any(not 0 <= k <= N for k in ks):
        raise UsageError(f"every --k must lie in 0..{N}")
    checks = []
    for k in ks:
        exact = k * (N - k) / (N * (N - 1))
        v = rosen_variance(z, k)
        checks.append(Check(f"variance_exact/k{k}", {"N": N, "k": k}, exact, v, None,
                            verdict(abs(v - exact) <= 1e-12)))
    if args.reps:
        _need_seed(args)
        vals = map_chunks(lambda p: rosen_path_batch(z, p, ks), N, args.reps, RngState(args.seed, 0),
                          threads=args.threads)
        c = vals - vals.mean(axis=0)
        for a in range(len(ks)):
            for b in range(a, len(ks)):
                prod = c[:, a] * c[:, b]
                emp, se = float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(args.reps))
                exact = rosen_covariance(N, ks[a], ks[b])
                checks.append(Check(f"cov_mc/k{ks[a]},k{ks[b]}", {"N": N, "B": args.reps}, exact, emp, se,
                                    verdict(abs(emp - exact) <= 3 * se)))
    return Report("rosen", {}, checks, {"N": N, "k": ks})


def cmd_series_reg(args) -> Report:
    _need_seed(args)
    data = read_csv(args.data, columns=2)
    x, y = data[:, 0], data[:, 1]
    if args.basis == "piecewise":
        if not args.knots:
            raise UsageError("--basis piecewise needs --knots")
        spec = BasisSpec.piecewise(args.knots)
    else:
        spec = BasisSpec("polynomial", args.K)
    N = x.size
    if not 1 <= args.n <= N:
        raise UsageError(f"--n must lie in 1..{N}")
    rng = RngState(args.seed, 0)
    diag = reg_diagnostics(x, y, spec, args.n)
    losses = mc_losses(x, y, spec, args.n, args.reps, rng.spawn(1), args.threads)
    err = mc_cross_moment_error(x, y, spec, args.n, args.reps, rng.spawn(2), args.threads)
    exact = cross_moment_error_exact(x, y, spec, args.n)
    se = float(err.std(ddof=1) / math.sqrt(args.reps))
    checks = [
        Check("cross_moment_error_mc", {"n": args.n, "B": args.reps}, exact, float(err.mean()), se,
              verdict(abs(float(err.mean()) - exact) <= 3 * se)),
        Check("cross_moment_error_le_B_N2", {"n": args.n}, diag.B_N2, exact, None,
              verdict(exact <= diag.B_N2 * (1 + 1e-12))),
    ]
    result = {
        "N": N, "K": spec.K, "n": args.n, "basis": spec.kind,
        "A_N": diag.A_N, "B_N2": diag.B_N2, "gamma_N": diag.gamma_N, "lambda_K": diag.lambda_K,
        "zeta_K": diag.zeta_K, "envelope": diag.envelope,
        "mean_loss": float(losses.mean()), "mean_loss_se": float(losses.std(ddof=1) / math.sqrt(args.reps)),
    }
    return Report("series-reg", {}, checks, result)


def cmd_perm_test(args) -> Report:
    data = TwoSampleData(read_column(args.x), read_column(args.y))
    if args.mode == "exact":
        res = exact_perm_test(data, args.stat, args.side, cap=args.cap)
    else:
        _need_seed(args)
        res = mc_perm_test(data, args.stat, args.side, args.B, RngState(args.seed, 0), args.threads)
    checks = [Check("p_value_in_unit_interval", {}, None, res.p_value, res.se or None,
                    verdict(0.0 < res.p_value <= 1.0))]
    result = {"statistic_id": res.statistic_id, "observed": res.observed, "p_value": res.p_value,
              "mode": res.mode, "n_resamples": res.n_resamples, "side": res.side}
    if res.mode == "mc":
        result["se"] = res.se
    return Report("perm-test", {}, checks, result)


def cmd_verify_all(args) -> Report:
    _need_seed(args)
    only = set(args.only) if args.only else None
    if only and not only <= set(CRITERIA):
        raise UsageError(f"--only takes criterion numbers from 1..{len(CRITERIA)}")
    return Report("verify-all", {}, run_all(args.seed, args.reps, args.threads, only))


# parser ----------------------------------------------------------------------

def _positive(v):
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return i


def _seed(v):
    i = int(v, 0)
    if not 0 <= i < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return i


def _reps(v):
    i = int(v)
    if i < 100:
        raise argparse.ArgumentTypeError(f"--reps must be >= 100, got {v}")
    return i


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--threads", type=_positive, default=None,
                        help="worker threads (default: PERMSTAT_THREADS or 1)")
    common.add_argument("--seed", type=_seed, default=None)

    p = argparse.ArgumentParser(prog="permstat", description="Finite-population permutation statistics.")
    p.add_argument("--version", action="version", version=f"permstat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def matrix_flags(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--matrix", choices=NAMED_MATRICES, default="footrule")
        g.add_argument("--matrix-csv", help="square score matrix, no header")
        sp.add_argument("--N", type=_positive)

    s = sub.add_parser("moments", parents=[common], help="exact moments of a combinatorial sum")
    matrix_flags(s)
    s.add_argument("--enum-cap", type=_positive, default=8,
                   help="cross-check against enumeration when N is at most this")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("tail-check", parents=[common], help="scalar tail bounds vs Monte Carlo")
    matrix_flags(s)
    s.add_argument("--kinds", nargs="+", choices=("comb_hoeffding_v1", "comb_hoeffding_v2", "comb_bernstein"))
    s.add_argument("--grid", nargs="+", type=float, default=list(SIGMA_GRID),
                   help="thresholds as multiples of sigma_A")
    s.add_argument("--reps", type=_reps, default=100_000)
    s.set_defaults(func=cmd_tail_check)

    s = sub.add_parser("clt-check", parents=[common], help="normal approximation diagnostics")
    s.add_argument("--matrix", choices=NAMED_MATRICES, default="footrule")
    s.add_argument("--N", type=_positive, nargs="+", default=[20, 50, 200])
    s.add_argument("--reps", type=_reps, default=100_000)
    s.set_defaults(func=cmd_clt_check)

    s = sub.add_parser("matrix-check", parents=[common], help="matrix tail bounds vs Monte Carlo")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--family-json", help="JSON tensor of shape (N, N, d, d)")
    g.add_argument("--family-dir", help="directory of A_<i>_<j>.csv blocks (1-based)")
    g.add_argument("--random", type=_positive, nargs=2, metavar=("N", "D"),
                   help="random centered family with entries in [-1, 1]")
    s.add_argument("--center", action="store_true", help="subtract the grand mean first")
    s.add_argument("--grid", nargs="+", type=float, default=list(SIGMA_GRID),
                   help="thresholds as multiples of sqrt(N sigma^2 / (N - 1))")
    s.add_argument("--reps", type=_reps, default=100_000)
    s.set_defaults(func=cmd_matrix_check)

    def pop_flags(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--population", help="single-column CSV")
        g.add_argument("--equispaced", type=_positive, metavar="N", help="population i/N, i = 1..N")

    s = sub.add_parser("gc-check", parents=[common], help="Glivenko-Cantelli decay curve")
    pop_flags(s)
    s.add_argument("--n", type=_positive, nargs="+")
    s.add_argument("--reps", type=_reps, default=10_000)
    s.set_defaults(func=cmd_gc_check)

    s = sub.add_parser("sup-dev", parents=[common], help="indicator-class sup-deviation of one sample")
    pop_flags(s)
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--talagrand", action="store_true", help="also check the Talagrand tail bound")
    s.add_argument("--t", type=float, nargs="+")
    s.add_argument("--reps", type=_reps, default=10_000)
    s.set_defaults(func=cmd_sup_dev)

    s = sub.add_parser("rosen", parents=[common], help="partial-sum process moments")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--population", help="single-column CSV (normalized internally)")
    g.add_argument("--N", type=_positive, default=400)
    s.add_argument("--k", type=int, nargs="+")
    s.add_argument("--reps", type=int, default=0, help="Monte Carlo draws for covariances (0 skips)")
    s.set_defaults(func=cmd_rosen)

    s = sub.add_parser("series-reg", parents=[common], help="series regression diagnostics")
    s.add_argument("--data", required=True, help="two-column CSV: x, y")
    s.add_argument("--basis", choices=("polynomial", "piecewise"), default="polynomial")
    s.add_argument("--K", type=_positive, default=2)
    s.add_argument("--knots", type=float, nargs="+")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--reps", type=_reps, default=2000)
    s.set_defaults(func=cmd_series_reg)

    s = sub.add_parser("perm-test", parents=[common], help="two-sample permutation test")
    s.add_argument("--x", required=True, help="single-column CSV")
    s.add_argument("--y", required=True, help="single-column CSV")
    s.add_argument("--stat", choices=sorted(statistic_registry()), default="mean_diff")
    s.add_argument("--side", choices=SIDES, default="two")
    s.add_argument("--mode", choices=("exact", "mc"), default="exact")
    s.add_argument("--B", type=int, default=9999)
    s.add_argument("--cap", type=_positive, default=EXACT_CAP)
    s.set_defaults(func=cmd_perm_test)

    s = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    s.add_argument("--reps", type=_reps, default=100_000)
    s.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    s.set_defaults(func=cmd_verify_all)
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads is None:
            args.threads = resolve_threads(None)
        report = args.func(args)
    except (UsageError, PermstatError, ValueError) as exc:
        print(f"permstat {args.command}: error: {exc}", file=sys.stderr)
        return 2
    report.config = _config(args)
    text = report.to_text() if args.format == "text" else report.to_json()
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"permstat: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return 0 if report.failed == 0 else 1


def main() -> None:
    sys.exit(run())
