import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permstat.comb_moments import build_perm_matrix, comb_sum_batch, named_matrix
from permstat.concentration import TailBoundSpec, tail_bound
from permstat.errors import DataError
from permstat.matrix_conc import (
    center_family,
    make_family,
    matrix_comb_sum,
    matrix_comb_sum_batch,
    matrix_empirical_tail,
    matrix_tail_bound,
    op_norm,
    random_centered_family,
    sym_eigen,
)
from permstat.perm_core import Permutation, Pcg32, RngState, enumerate_array, enumerate_permutations


def _random_sym(d, seed):
    g = Pcg32(seed)
    a = np.array([g.random() - 0.5 for _ in range(d * d)]).reshape(d, d)
    return a + a.T


def test_eigen_examples():
    assert np.array_equal(sym_eigen(np.diag([2.0, -3.0])), [2.0, -3.0])
    assert op_norm(np.diag([2.0, -3.0])) == 3.0
    assert sym_eigen([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx([1.0, -1.0], abs=1e-14)


@pytest.mark.parametrize("d", [1, 3, 5, 12])
def test_trace_identities(d):
    S = _random_sym(d, d)
    w = sym_eigen(S)
    assert np.all(np.diff(w) <= 0)
    assert w.sum() == pytest.approx(np.trace(S), abs=1e-10)
    assert (w**2).sum() == pytest.approx((S**2).sum(), abs=1e-10)


@settings(max_examples=100)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_two_by_two_characteristic_roots(a, b, c):
    w = sym_eigen([[a, b], [b, c]])
    disc = math.sqrt(((a - c) / 2) ** 2 + b * b)
    mid = (a + c) / 2
    assert w == pytest.approx([mid + disc, mid - disc], abs=1e-10 * max(1.0, abs(a), abs(b), abs(c)))


def test_asymmetric_rejected():
    with pytest.raises(DataError):
        sym_eigen([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DataError):
        make_family(np.array([[[[1.0, 1.0], [0.0, 1.0]]]]))


def test_center_family_examples():
    F = center_family(named_matrix("footrule", 3))
    D = build_perm_matrix(named_matrix("footrule", 3)).d
    # D is already centered, so centering the family built from D is idempotent
    Fd = center_family(D)
    assert np.allclose(Fd.A[:, :, 0, 0], D, atol=1e-14)
    assert Fd.sigma2 == pytest.approx(40 / 27, rel=1e-12)
    assert F.centered and Fd.centered
    Z = center_family(np.full((4, 4, 2, 2), 3.0))
    assert np.allclose(Z.A, 0) and Z.sigma2 == 0 and Z.M_bound == 0
    assert not make_family(np.ones((3, 3))).centered


def test_d1_reduces_to_scalar_sum():
    M = build_perm_matrix(named_matrix("random", 5, seed=9))
    F = make_family(M.d)
    perms = enumerate_array(5)
    got = matrix_comb_sum_batch(F, perms)[:, 0, 0]
    assert np.allclose(got, comb_sum_batch(M, perms, centered=True), atol=1e-12)


def test_diagonal_decoupling():
    a, b = named_matrix("footrule", 3), named_matrix("rho", 3)
    A = np.zeros((3, 3, 2, 2))
    A[..., 0, 0], A[..., 1, 1] = a, b
    F = make_family(A)
    for p in enumerate_permutations(3):
        S = matrix_comb_sum(F, p)
        ma, mb = build_perm_matrix(a), build_perm_matrix(b)
        from permstat.comb_moments import comb_sum_eval

        assert np.allclose(S, np.diag([comb_sum_eval(ma, p), comb_sum_eval(mb, p)]))


def test_centered_mean_zero_over_s4():
    F = random_centered_family(4, 3, RngState(11))
    sums = matrix_comb_sum_batch(F, enumerate_array(4))
    assert np.abs(sums.mean(axis=0)).max() <= 1e-12


def test_size_mismatch():
    F = random_centered_family(3, 2, RngState(1))
    with pytest.raises(DataError):
        matrix_comb_sum(F, Permutation.identity(4))


def test_bound_examples():
    F = random_centered_family(6, 3, RngState(2))
    for kind in ("hoeffding", "bernstein"):
        assert matrix_tail_bound(kind, F, 0.0) == 6
    D = make_family(build_perm_matrix(named_matrix("footrule", 3)).d)
    scalar = TailBoundSpec("comb_bernstein", {"sigma2": D.sigma2, "b_max": D.M_bound})
    for t in (0.5, 2.0, 7.0):
        assert matrix_tail_bound("bernstein", D, t) == pytest.approx(2 * tail_bound(scalar, t), rel=1e-12)
    expected = 2 * math.exp(-4 / (12 * 40 / 27 + 4 * math.sqrt(2) * (10 / 9) * 2))
    assert matrix_tail_bound("bernstein", D, 2.0) == pytest.approx(expected, rel=1e-12)
    assert D.M_bound == pytest.approx(10 / 9)
    with pytest.raises(DataError):
        matrix_tail_bound("hoeffding", make_family(np.ones((3, 3))), 1.0)
    with pytest.raises(ValueError):
        matrix_tail_bound("chernoff", F, 1.0)


def test_footrule_bound_dominates_exact_tail():
    D = make_family(build_perm_matrix(named_matrix("footrule", 3)).d)
    norms = np.abs(matrix_comb_sum_batch(D, enumerate_array(3))[:, 0, 0])
    assert (norms >= 2.0 - 1e-12).mean() <= matrix_tail_bound("bernstein", D, 2.0)


def test_random_family_domination_small():
    F = random_centered_family(20, 2, RngState(4))
    sigma = math.sqrt(F.sigma2 * F.N / (F.N - 1))
    grid = [0.5 * sigma, sigma, 2 * sigma, 3 * sigma]
    emp = matrix_empirical_tail(F, grid, 4000, RngState(5))
    for t, s, se in zip(grid, emp.survival, emp.se):
        for kind in ("hoeffding", "bernstein"):
            assert matrix_tail_bound(kind, F, t) >= s - 3 * se
