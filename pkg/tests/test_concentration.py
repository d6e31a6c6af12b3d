import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permstat.comb_moments import build_perm_matrix, comb_sum_batch, named_matrix, rank_one_factors
from permstat.concentration import (
    CONVEX_FUNCTIONS,
    OrliczBoundSpec,
    TailBoundSpec,
    convex_order_check,
    domination_check,
    empirical_tail,
    orlicz_bound,
    orlicz_norm_estimate,
    rank_one_features,
    tail_bound,
    tail_from_values,
)
from permstat.errors import CapExceededError, DataError, InvalidSizeError
from permstat.perm_core import RngState, enumerate_array

FOOT3 = build_perm_matrix(named_matrix("footrule", 3))


def test_hoeffding_v1_example():
    spec = TailBoundSpec.for_matrix("comb_hoeffding_v1", FOOT3)
    expected = math.exp(-4 / (4 * 3 * (10 / 9) ** 2 + 4 * (20 / 9)))
    assert tail_bound(spec, 2.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(math.exp(-0.16875), rel=1e-12)


def test_bernstein_example():
    spec = TailBoundSpec.for_matrix("comb_bernstein", FOOT3)
    expected = math.exp(-4 / (12 * 20 / 9 + 4 * math.sqrt(2) * (10 / 9) * 2))
    assert tail_bound(spec, 2.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.9031, abs=1e-4)


def test_hoeffding_v2_rank_one():
    u, v = rank_one_factors("rank1", 5)
    sb, s2 = rank_one_features(u, v)
    cu, cv = u - u.mean(), v - v.mean()
    assert sb == pytest.approx(math.sqrt((cu**4).sum() * (cv**4).sum()))
    assert s2 == pytest.approx(build_perm_matrix(named_matrix("rank1", 5)).sigma2)
    spec = TailBoundSpec.rank_one(u, v)
    assert tail_bound(spec, 3.0) == pytest.approx(math.exp(-9 / (4 * sb + 4 * s2)))


@pytest.mark.parametrize("spec", [
    TailBoundSpec("comb_hoeffding_v1", {"sigma2": 1, "b_max": 1, "N": 3}),
    TailBoundSpec("comb_hoeffding_v2", {"sigma2_bar": 1, "sigma2": 1}),
    TailBoundSpec("comb_bernstein", {"sigma2": 1, "b_max": 1}),
    TailBoundSpec("matrix_hoeffding", {"d": 3, "M": 1, "N": 4}),
    TailBoundSpec("matrix_bernstein", {"d": 2, "sigma2": 1, "M": 1}),
    TailBoundSpec("tolstikhin_talagrand", {"Sigma2_F": 1, "n": 5, "N": 10}),
])
def test_prefactor_and_monotone(spec):
    assert tail_bound(spec, 0.0) == spec.prefactor
    ts = np.linspace(0, 10, 41)
    vals = [tail_bound(spec, t) for t in ts]
    assert all(0 < v <= spec.prefactor for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@settings(max_examples=50)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.1, 20))
def test_increasing_in_scale_parameters(s2, b, t):
    for kind in ("comb_hoeffding_v1", "comb_bernstein"):
        p = {"sigma2": s2, "b_max": b, "N": 5}
        lo = tail_bound(TailBoundSpec(kind, p), t)
        assert tail_bound(TailBoundSpec(kind, p | {"sigma2": 2 * s2}), t) >= lo
        assert tail_bound(TailBoundSpec(kind, p | {"b_max": 2 * b}), t) >= lo


def test_spec_errors():
    with pytest.raises(ValueError):
        TailBoundSpec("nope", {})
    with pytest.raises(DataError):
        TailBoundSpec("comb_bernstein", {"sigma2": 1})
    with pytest.raises(DataError):
        TailBoundSpec("comb_bernstein", {"sigma2": -1, "b_max": 1})
    with pytest.raises(InvalidSizeError):
        tail_bound(TailBoundSpec("comb_bernstein", {"sigma2": 1, "b_max": 1}), -0.5)
    with pytest.raises(ValueError):
        TailBoundSpec.for_matrix("comb_hoeffding_v2", FOOT3)


def test_orlicz_bounds():
    assert orlicz_bound(OrliczBoundSpec("bobkov_psi2", 5, 10, 1.0)) == pytest.approx(math.sqrt(7.2))
    assert orlicz_bound(OrliczBoundSpec("bobkov_psi2", 5, 10, 0.0)) == 0.0
    v = orlicz_bound(OrliczBoundSpec("bernstein_serfling_psi1", 8, 16, 1.0, 1.0))
    assert v == pytest.approx(24 * math.sqrt(2) / 8 + math.sqrt(72 / (8 * math.log(2))))
    assert v == pytest.approx(7.8460, abs=1e-4)
    with pytest.raises(DataError):
        OrliczBoundSpec("bernstein_serfling_psi1", 8, 16, 1.0)
    with pytest.raises(InvalidSizeError):
        OrliczBoundSpec("bobkov_psi2", 11, 10, 1.0)


def test_orlicz_estimate():
    c = 2.5
    assert orlicz_norm_estimate(np.full(10, c)) == pytest.approx(c / math.sqrt(math.log(2)), rel=1e-8)
    assert orlicz_norm_estimate(np.full(10, c), p=1) == pytest.approx(c / math.log(2), rel=1e-8)
    assert orlicz_norm_estimate(np.zeros(5)) == 0.0
    x = np.array([0.3, -1.2, 0.7, 2.0, -0.1])
    assert orlicz_norm_estimate(2 * x) == pytest.approx(2 * orlicz_norm_estimate(x), rel=1e-8)
    with pytest.raises(DataError):
        orlicz_norm_estimate([])


def test_bobkov_dominates_estimated_norm():
    for N in (10, 20):
        n = N // 2
        z = np.arange(1.0, N + 1)
        from permstat.perm_core import map_chunks

        devs = map_chunks(lambda p: ((p < n) @ z) / n - z.mean(), N, 20000, RngState(N))
        est = orlicz_norm_estimate(devs, p=2)
        bound = orlicz_bound(OrliczBoundSpec("bobkov_psi2", n, N, float(z.std())))
        assert est <= bound


def test_empirical_tail_footrule_n3():
    stat = lambda p: comb_sum_batch(FOOT3, p, centered=True)  # noqa: E731
    # D takes 0, 2, 2, 4, 4, 4 so the centred top value is 4/3
    exact = tail_from_values(stat(enumerate_array(3)), [4 / 3, 2.0], exact=True)
    assert exact.survival == pytest.approx([0.5, 0.0]) and not exact.se.any()
    emp = empirical_tail(stat, 3, [4 / 3, -10.0], 20000, RngState(1))
    assert abs(emp.survival[0] - 0.5) <= 3 * emp.se[0]
    assert emp.survival[1] == 1.0


def test_empirical_tail_thread_independent():
    M = build_perm_matrix(named_matrix("rho", 12))
    stat = lambda p: comb_sum_batch(M, p, centered=True)  # noqa: E731
    grid = [0.0, M.sigma, 2 * M.sigma]
    a = empirical_tail(stat, 12, grid, 9000, RngState(5), threads=1)
    b = empirical_tail(stat, 12, grid, 9000, RngState(5), threads=3)
    assert np.array_equal(a.survival, b.survival)
    assert np.all(np.diff(a.survival) <= 0)


def test_empirical_tail_errors():
    with pytest.raises(InvalidSizeError):
        empirical_tail(lambda p: p[:, 0], 3, [1.0], 50, RngState(1))
    with pytest.raises(DataError):
        empirical_tail(lambda p: p[:, 0], 3, [], 500, RngState(1))


def test_domination_examples():
    stat = comb_sum_batch(FOOT3, enumerate_array(3), centered=True)
    emp = tail_from_values(stat, [2.0], exact=True)
    spec = TailBoundSpec.for_matrix("comb_hoeffding_v1", FOOT3)
    (row,) = domination_check(spec, emp)
    assert row.verdict == "PASS" and row.bound == pytest.approx(0.8447, abs=1e-4)
    # halved bound fixture on a point mass at 2: survival 1 > 0.42
    point = tail_from_values(np.full(10, 2.0), [2.0], exact=True)
    (row,) = domination_check(spec, point, bound_fn=lambda t: 0.5 * tail_bound(spec, t))
    assert row.verdict == "FAIL" and row.slack < 0


def test_degenerate_domination():
    M = build_perm_matrix(np.ones((4, 4)))
    stat = comb_sum_batch(M, enumerate_array(4), centered=True)
    emp = tail_from_values(stat, [0.5, 1.0], exact=True)
    for kind in ("comb_hoeffding_v1", "comb_bernstein"):
        rows = domination_check(TailBoundSpec.for_matrix(kind, M), emp)
        assert [r.verdict for r in rows] == ["PASS", "PASS"]
        assert all(r.bound == 0.0 for r in rows)


def test_convex_order_examples():
    r = convex_order_check([1, 2, 3, 4], 2, CONVEX_FUNCTIONS["square"])
    assert (r.e_without, r.e_with) == pytest.approx((160 / 6, 27.5))
    assert r.verdict == "PASS"
    lin = convex_order_check([1, 5, 2, 8], 3, lambda x: 2 * x + 1)
    assert lin.e_without == pytest.approx(lin.e_with)
    z = np.array([-1.0, 0.0, 1.0])
    r = convex_order_check(z, 2, lambda x: np.abs(x - 2 * z.mean()))
    assert r.verdict == "PASS"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=5), st.data())
def test_convex_order_property(z, data):
    n = data.draw(st.integers(1, len(z)))
    for f in (CONVEX_FUNCTIONS["square"], CONVEX_FUNCTIONS["abs"], lambda x: np.exp(x / len(z))):
        assert convex_order_check(z, n, f).verdict == "PASS"


def test_convex_order_mc_and_caps():
    r = convex_order_check(np.arange(30.0), 10, CONVEX_FUNCTIONS["square"], mode="mc", B=5000,
                           rng=RngState(2))
    assert r.verdict == "PASS" and r.se > 0
    with pytest.raises(CapExceededError):
        convex_order_check(np.arange(30.0), 10, CONVEX_FUNCTIONS["square"])
    with pytest.raises(DataError):
        convex_order_check([1, 2], 1, CONVEX_FUNCTIONS["abs"], mode="mc")
