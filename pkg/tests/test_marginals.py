"""Empirical marginals and their inverse."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinelearn.errors import DegenerateDataError
from vinelearn.marginals import MarginalModel, fit_ecdf, fit_marginals, from_uniform, to_uniform


def test_sorted_copy():
    m = fit_ecdf([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(m.sorted_values, [1.0, 2.0, 3.0])


def test_constant_column_rejected():
    with pytest.raises(DegenerateDataError):
        fit_ecdf([2.0, 2.0, 2.0])


def test_single_value_rejected():
    with pytest.raises(DegenerateDataError):
        fit_ecdf([1.0])


def test_duplicates_become_strictly_increasing():
    m = fit_ecdf([1.0, 1.0, 2.0])
    assert np.all(np.diff(m.sorted_values) > 0)
    assert np.allclose(m.sorted_values, [1.0, 1.0, 2.0], atol=1e-8)


def test_minimum_maps_to_one_over_n_plus_one():
    m = fit_ecdf(np.arange(99.0))
    assert m.transform(0.0) == pytest.approx(0.01, abs=1e-15)


def test_median_maps_near_half():
    x = np.random.default_rng(0).normal(size=101)
    m = fit_ecdf(x)
    assert m.transform(np.median(x)) == pytest.approx(0.5, abs=1 / 102)


def test_clamps_outside_range():
    m = fit_ecdf([1.0, 2.0, 3.0, 4.0])
    assert m.transform(-100.0) == pytest.approx(1 / 5)
    assert m.transform(100.0) == pytest.approx(4 / 5)


def test_inverse_two_points():
    m = fit_ecdf([0.0, 1.0])
    # u = 0.5 sits halfway between the ranks 1 and 2 on the (n+1) scale
    assert m.inverse(0.5) == pytest.approx(0.5)


def test_inverse_boundary():
    m = fit_ecdf([3.0, 5.0, 9.0])
    assert m.inverse(1e-12) == 3.0
    assert m.inverse(1 - 1e-12) == 9.0


def test_round_trip_on_stored_values():
    x = np.random.default_rng(1).gamma(2.0, size=300)
    m = fit_ecdf(x)
    np.testing.assert_allclose(m.inverse(m.transform(m.sorted_values)), m.sorted_values, atol=1e-9)


def test_fitted_sample_mean_half():
    x = np.random.default_rng(2).lognormal(size=500)
    assert np.mean(fit_ecdf(x).transform(x)) == pytest.approx(0.5, abs=0.02)


def test_matrix_helpers():
    x = np.random.default_rng(3).normal(size=(50, 3))
    ms = fit_marginals(x)
    u = to_uniform(ms, x)
    assert u.shape == (50, 3) and np.all((u > 0) & (u < 1))
    np.testing.assert_allclose(from_uniform(ms, u), x, atol=1e-9)


def test_unsorted_model_rejected():
    with pytest.raises(ValueError):
        MarginalModel(np.array([2.0, 1.0]))


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.floats(-2e3, 2e3),
       st.floats(0, 50))
@settings(max_examples=100, deadline=None)
def test_transform_monotone_and_inside(values, x, dx):
    if np.ptp(values) == 0:
        return
    m = fit_ecdf(values)
    a, b = m.transform(x), m.transform(x + dx)
    assert 0.0 < a <= b < 1.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.floats(0.001, 0.998),
       st.floats(0, 0.001))
@settings(max_examples=100, deadline=None)
def test_inverse_monotone(values, u, du):
    if np.ptp(values) == 0:
        return
    m = fit_ecdf(values)
    assert m.inverse(u) <= m.inverse(u + du)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40), st.floats(-1e3, 1e3))
@settings(max_examples=100, deadline=None)
def test_inverse_of_transform_within_gap(values, x):
    if np.ptp(values) == 0:
        return
    m = fit_ecdf(values)
    s = m.sorted_values
    x = float(np.clip(x, s[0], s[-1]))
    assert abs(m.inverse(m.transform(x)) - x) <= np.max(np.diff(s)) + 1e-9
