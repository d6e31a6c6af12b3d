import numpy as np
import pytest

from permstat.comb_moments import build_perm_matrix, named_matrix
from permstat.errors import InvalidSizeError
from permstat.perm_core import Permutation, RngState
from permstat.rank_stats import (
    RankStat,
    enumerated_moments,
    expected_footrule,
    rank_moments,
    rank_statistic,
)


@pytest.mark.parametrize("N", range(3, 9))
@pytest.mark.parametrize("kind", ["footrule", "chatterjee_xi"])
def test_mean_is_n2_minus_1_over_3(kind, N):
    assert enumerated_moments(kind, N)[0] == pytest.approx(expected_footrule(N), rel=1e-12)


@pytest.mark.parametrize("N", range(2, 8))
@pytest.mark.parametrize("kind", ["footrule", "spearman_rho", "kendall_tau"])
def test_moments_match_enumeration(kind, N):
    assert rank_moments(kind, N) == pytest.approx(enumerated_moments(kind, N), rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("N", range(3, 8))
def test_xi_moments_enumerated(N):
    assert rank_moments("chatterjee_xi", N) == pytest.approx(enumerated_moments("chatterjee_xi", N), rel=1e-10)


def test_xi_mc_variance_above_cap():
    N = 12
    mean, var = rank_moments("chatterjee_xi", N, rng=RngState(3), B=20000)
    assert mean == pytest.approx(expected_footrule(N))
    assert var > 0
    with pytest.raises(InvalidSizeError):
        rank_moments("chatterjee_xi", N)


@pytest.mark.parametrize("N", range(2, 8))
def test_wilcoxon_and_mann_whitney(N):
    for m in range(1, N):
        w = RankStat("wilcoxon", m)
        assert rank_moments(w, N) == pytest.approx(enumerated_moments(w, N), rel=1e-12)
        assert rank_moments(w, N)[0] == pytest.approx(m * (N + 1) / 2)
        u = RankStat("mann_whitney", m, N - m)
        mean, var = rank_moments(u, N)
        assert (mean, var) == pytest.approx(enumerated_moments(u, N), rel=1e-12)
        assert mean == pytest.approx(m * (N - m) / 2)


def test_spearman_mean_closed_form():
    # the rho-type sum sum_i i * pi(i) has mean N (N + 1)^2 / 4
    for N in range(2, 9):
        assert build_perm_matrix(named_matrix("rho", N)).mu == pytest.approx(N * (N + 1) ** 2 / 4)


def test_kendall_conventions():
    pi = Permutation.identity(5)
    assert rank_statistic("kendall_tau", pi) == 5 * 4
    assert rank_statistic("kendall_tau", Permutation((5, 4, 3, 2, 1))) == -20
    # ordered-pair variance is 4 times the classical S variance
    assert rank_moments("kendall_tau", 6)[1] == pytest.approx(4 * 6 * 5 * 17 / 18)


def test_statistic_values():
    pi = Permutation((2, 1, 3))
    assert rank_statistic("footrule", pi) == 2
    assert rank_statistic("spearman_rho", pi) == 2
    assert rank_statistic(RankStat("wilcoxon", 2), pi) == 3
    assert rank_statistic(RankStat("mann_whitney", 1, 2), pi) == 1
    sigma = Permutation((3, 1, 2))
    # xi reads pi along the order of sigma: indices 2, 3, 1 give values 1, 3, 2
    assert rank_statistic("chatterjee_xi", pi, sigma) == 3


def test_validation():
    with pytest.raises(ValueError):
        RankStat("nope")
    with pytest.raises(InvalidSizeError):
        RankStat("wilcoxon")
    with pytest.raises(InvalidSizeError):
        rank_moments(RankStat("mann_whitney", 2, 2), 5)
    with pytest.raises(InvalidSizeError):
        rank_moments("footrule", 1)


def test_footrule_variance_large_n_band():
    # leading term of the variance is 2 N^3 / 45
    N = 400
    var = rank_moments("footrule", N)[1]
    assert var / (2 * N**3 / 45) == pytest.approx(1.0, abs=0.02)
    assert np.isfinite(var)
