import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paralab.arithmetic import (
    ScalingSeries,
    box_count,
    count_energy_check,
    fit_exponent,
    sumset_cover,
    vinogradov_bruteforce,
    vinogradov_count,
)
from paralab.dyadic import SquareFamily
from paralab.measures import cantor_parabola_measure, lattice_parabola_measure


def test_sumset_of_single_point():
    for n in (1, 2, 5):
        assert len(sumset_cover([[0.1, 0.2]], n, 2.0**-6)) == 1


def test_sumset_order_one_is_the_cover():
    K = lattice_parabola_measure(2.0**-6, 0.5)
    cover = sumset_cover(K, 1, 2.0**-6)
    assert cover.squares == SquareFamily.covering(K.points, 6)


def test_sumset_exact_and_recursive_routes():
    K = cantor_parabola_measure(4.0**-3, [0, 3], 4)
    exact = sumset_cover(K, 3, 2.0**-6, route="exact")
    rec = sumset_cover(K, 3, 2.0**-6, route="recursive")
    assert exact.route == "exact" and rec.route == "recursive"
    # every recursive square meets the sumset, and it misses at most a neighbourhood
    assert set(rec.squares) <= set(exact.squares)
    grown = set()
    for q in rec.squares:
        for dx in (-2, -1, 0, 1, 2):
            for dy in (-2, -1, 0, 1, 2):
                grown.add((q.ix + dx, q.iy + dy))
    assert all((q.ix, q.iy) in grown for q in exact.squares)


def test_sumset_budget():
    K = lattice_parabola_measure(2.0**-8, 0.5)
    with pytest.raises(ValueError, match="budget exceeded"):
        sumset_cover(K, 4, 2.0**-8, budget=1000, allow_doubling=False)
    assert sumset_cover(K, 4, 2.0**-8, budget=20000).route == "recursive"
    with pytest.raises(ValueError):
        sumset_cover(K, 0, 2.0**-8)


def test_sumset_monotone_in_order_when_containing_origin():
    K = cantor_parabola_measure(4.0**-3, [0, 3], 4)
    sizes = [len(sumset_cover(K, n, 2.0**-6)) for n in (1, 2, 3)]
    assert sizes == sorted(sizes)


def test_box_count_monotone_in_scale():
    K = lattice_parabola_measure(2.0**-8, 0.5)
    cover = sumset_cover(K, 2, 2.0**-8)
    counts = [box_count(cover, 2.0**-k) for k in range(0, 9)]
    assert counts == sorted(counts)
    assert counts[-1] == len(cover)
    with pytest.raises(ValueError):
        box_count(cover, 2.0**-9)


def test_vinogradov_small_examples():
    P = [[0.0, 0.0], [1.0, 1.0]]
    assert vinogradov_count(P, 1, 0.1) == 2
    assert vinogradov_count(P, 2, 0.1) == 6
    assert vinogradov_bruteforce(P, 2, 0.1) == 6


def test_vinogradov_rejects_unseparated():
    with pytest.raises(ValueError, match="separation violated"):
        vinogradov_count([[0, 0], [0.01, 0]], 2, 0.1)


def test_vinogradov_translation_invariant():
    K = lattice_parabola_measure(2.0**-6, 0.5).points
    shifted = K + np.array([0.375, -0.25])
    assert vinogradov_count(K, 2, 2.0**-6) == vinogradov_count(shifted, 2, 2.0**-6)


def test_count_energy_two_points():
    rep = count_energy_check([[0.0, 0.0], [0.5, 0.25]], 2, 2.0**-5)
    assert 1e-3 <= rep.ratio <= 1e3
    assert rep.ok


def test_scaling_series_validation_and_csv():
    with pytest.raises(ValueError, match="at least 3"):
        ScalingSeries([0.5, 0.25], [1.0, 2.0])
    with pytest.raises(ValueError):
        ScalingSeries([0.25, 0.5, 0.125], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        fit_exponent([(0.5, 1.0), (0.25, 2.0)])
    s = ScalingSeries([0.5, 0.25, 0.125], [2.0, 4.0, 8.0])
    assert s.to_csv().splitlines()[0] == "delta,value,log2_inv_delta,log2_value"
    slope, resid = s.fit()
    assert slope == pytest.approx(1.0) and resid < 1e-12


def test_fit_with_logarithmic_correction_frozen():
    deltas = 2.0 ** -np.arange(4, 11)
    slope, _ = fit_exponent(list(zip(deltas, np.log(1 / deltas) / deltas)))
    assert slope == pytest.approx(1.217, abs=0.005)


small_sets = st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=4, unique=True)


@given(small_sets, st.integers(1, 2))
@settings(max_examples=40, deadline=None)
def test_vinogradov_matches_bruteforce(rows, n):
    P = np.asarray(rows, dtype=float) / 16.0
    delta = 1 / 40
    assert vinogradov_count(P, n, delta) == vinogradov_bruteforce(P, n, delta)


@given(small_sets, st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_vinogradov_symmetric_under_reflection(rows, n):
    P = np.asarray(rows, dtype=float) / 16.0
    assert vinogradov_count(P, n, 1 / 40) == vinogradov_count(-P, n, 1 / 40)


@given(small_sets, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_sumset_nondecreasing_in_order_with_origin(rows, n):
    P = np.asarray([(0, 0)] + rows, dtype=float) / 16.0
    a = len(sumset_cover(P, n, 2.0**-5))
    b = len(sumset_cover(P, n + 1, 2.0**-5))
    assert b >= a
