import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permstat.emp_process import (
    FinitePopulation,
    PermMeasure,
    donsker_cov,
    gc_decay_experiment,
    indicator_class,
    measure_apply,
    population_apply,
    sup_dev_class,
    sup_dev_indicator,
    sup_dev_indicator_bruteforce,
    talagrand_sup_bound_check,
)
from permstat.errors import DataError, InvalidSizeError
from permstat.perm_core import RngState, SampleMask, enumerate_array

ident = lambda x: np.asarray(x, dtype=float)  # noqa: E731
square = lambda x: np.asarray(x, dtype=float) ** 2  # noqa: E731
one = lambda x: np.ones(len(x))  # noqa: E731

POP = FinitePopulation(np.array([1.0, 2.0, 3.0, 4.0]))


def mask(N, chosen):
    return SampleMask(N, len(chosen), tuple(i in chosen for i in range(N)))


def test_measure_examples():
    m = PermMeasure(POP, mask(4, {0, 1}))
    assert measure_apply(m, ident) == 1.5
    assert measure_apply(m, one) == 1.0
    full = PermMeasure(POP, mask(4, {0, 1, 2, 3}))
    assert measure_apply(full, square) == population_apply(POP, square) == 7.5


def test_population_validation():
    with pytest.raises(DataError):
        FinitePopulation(np.array([1.0, np.inf]))
    with pytest.raises(DataError):
        PermMeasure(POP, mask(3, {0}))


def test_sup_dev_indicator_examples():
    assert sup_dev_indicator(PermMeasure(POP, mask(4, {0, 1}))) == 0.5
    assert sup_dev_indicator(PermMeasure(POP, mask(4, {0, 1, 2, 3}))) == 0.0
    flat = FinitePopulation(np.full(5, 2.0))
    assert sup_dev_indicator(PermMeasure(flat, mask(5, {1, 3}))) == 0.0
    with pytest.raises(DataError):
        sup_dev_indicator(PermMeasure(FinitePopulation(np.ones((4, 2))), mask(4, {0})))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=9), st.data())
def test_scanner_equals_bruteforce(z, data):
    N = len(z)
    n = data.draw(st.integers(1, N))
    chosen = set(data.draw(st.permutations(range(N)))[:n])
    m = PermMeasure(FinitePopulation(np.array(z, dtype=float)), mask(N, chosen))
    assert sup_dev_indicator(m) == sup_dev_indicator_bruteforce(m)


def test_sup_dev_class_examples():
    m = PermMeasure(POP, mask(4, {0, 1}))
    assert sup_dev_class(m, [one]) == (0.0, 0)
    assert sup_dev_class(m, [ident, square]) == (5.0, 1)
    assert sup_dev_class(m, [square, ident, square]) == (5.0, 0)
    with pytest.raises(DataError):
        sup_dev_class(m, [])


def test_donsker_examples():
    assert donsker_cov(POP, 2, ident, ident) == pytest.approx(5 / 6)
    assert donsker_cov(POP, 4, ident, square) == 0
    assert donsker_cov(POP, 2, ident, lambda x: np.full(len(x), 7.0)) == pytest.approx(0, abs=1e-14)
    with pytest.raises(InvalidSizeError):
        donsker_cov(POP, 5, ident, ident)


@pytest.mark.parametrize("N", [2, 4, 7])
def test_donsker_matches_enumeration(N):
    z = np.sin(np.arange(N) * 1.3) * 3
    pop = FinitePopulation(z)
    f, g = ident(z), np.cos(z)
    perms = enumerate_array(N)
    for n in range(1, N + 1):
        sel = (perms < n).astype(float)
        Gf = np.sqrt(n) * (sel @ f / n - f.mean())
        Gg = np.sqrt(n) * (sel @ g / n - g.mean())
        assert (Gf * Gg).mean() == pytest.approx(donsker_cov(pop, n, ident, np.cos), abs=1e-10)
        assert donsker_cov(pop, n, ident, ident) >= 0


def test_gc_decay():
    pop = FinitePopulation(np.arange(1, 101) / 100)
    rows = gc_decay_experiment(pop, [16, 64, 100], 2000, RngState(3))
    assert rows[2].mean == 0 and rows[2].se == 0
    assert rows[1].mean + 3 * rows[1].se < rows[0].mean - 3 * rows[0].se
    assert all(0 <= r.mean <= 1 for r in rows)
    with pytest.raises(InvalidSizeError):
        gc_decay_experiment(pop, [10], 50, RngState(3))


def test_gc_thread_invariance():
    pop = FinitePopulation(np.arange(30.0))
    a = gc_decay_experiment(pop, [5, 10], 5000, RngState(8), threads=1)
    b = gc_decay_experiment(pop, [5, 10], 5000, RngState(8), threads=4)
    assert a == b


def test_talagrand_constant_class():
    pop = FinitePopulation(np.arange(10.0))
    s2, mean, rows = talagrand_sup_bound_check(pop, [one], 5, [0.1, 1.0], 200, RngState(1))
    assert s2 == 0 and mean == 0
    assert all(r.verdict == "PASS" and r.empirical == 0 for r in rows)


def test_talagrand_indicator_class():
    z = np.arange(1, 51) / 50
    pop = FinitePopulation(z)
    grid = [0.0, 0.05, 0.1, 0.2]
    _, _, rows = talagrand_sup_bound_check(pop, indicator_class(z), 25, grid, 20000, RngState(2))
    assert all(r.verdict == "PASS" for r in rows)
    _, _, bad = talagrand_sup_bound_check(pop, indicator_class(z), 25, [0.0], 2000, RngState(2),
                                          bound_scale=0.1)
    assert bad[0].verdict == "FAIL"


def test_indicator_class_matches_scanner():
    z = np.array([3.0, 1.0, 1.0, 2.0, 5.0])
    pop = FinitePopulation(z)
    for chosen in itertools.combinations(range(5), 2):
        m = PermMeasure(pop, mask(5, set(chosen)))
        assert sup_dev_class(m, indicator_class(z))[0] == pytest.approx(sup_dev_indicator(m))
