"""
Tests for count time-series validation and aggregation.
"""

import numpy as np
import pytest

from ee_models.data import aggregate_counts, validate_counts


def test_single_zero_cell():
    series = validate_counts(np.zeros((1, 1)), (2001, 1), 52, np.ones((1, 1)), None)
    assert series.n_time == 1
    assert series.n_units == 1
    assert series.unit_ids == ("1",)


def test_negative_count():
    counts = np.array([[1, 2], [-1, 0]])
    with pytest.raises(ValueError, match="invalid count -1.0 at time 2, unit 1"):
        validate_counts(counts, (2001, 1), 52, None, None)


def test_non_integer_count():
    with pytest.raises(ValueError, match="non-integer count"):
        validate_counts(np.array([[1.5]]), (2001, 1), 52, None, None)


def test_pop_frac_rows_must_sum_to_one():
    pop = np.array([0.5, 0.6])
    with pytest.raises(ValueError, match="popFrac row 1"):
        validate_counts(np.zeros((3, 2)), (2001, 1), 52, pop, None)


def test_pop_frac_vector_is_recycled():
    series = validate_counts(np.zeros((3, 2)), (2001, 1), 52, np.array([0.25, 0.75]), None)
    assert series.pop_frac.shape == (3, 2)
    np.testing.assert_allclose(series.pop_frac[:, 1], 0.75)


def test_default_pop_frac_is_equal():
    series = validate_counts(np.zeros((2, 4)), (2001, 1), 52, None, None)
    np.testing.assert_allclose(series.pop_frac, 0.25)


def test_adjacency_becomes_orders(path_adjacency):
    series = validate_counts(np.zeros((2, 4)), (2001, 1), 52, None, path_adjacency,
                             unit_ids=["u1", "u2", "u3", "u4"])
    assert series.nb_order[0, 3] == 3
    assert series.nb_order.max() == 3


def test_order_matrix_is_kept():
    order = np.array([[0, 2], [2, 0]])
    series = validate_counts(np.zeros((2, 2)), (2001, 1), 52, None, order)
    assert series.nb_order[0, 1] == 2


def test_neighbourhood_shape_mismatch():
    with pytest.raises(ValueError, match="neighbourhood matrix has shape"):
        validate_counts(np.zeros((2, 3)), (2001, 1), 52, None, np.zeros((2, 2), dtype=bool))


def test_map_must_cover_units(tiles):
    with pytest.raises(ValueError, match="no polygon for unit 'C'"):
        validate_counts(np.zeros((2, 3)), (2001, 1), 52, None, None,
                        unit_ids=["A", "B", "C"], map=tiles)


def test_covariate_shape():
    with pytest.raises(ValueError, match="Sprop has shape"):
        validate_counts(np.zeros((4, 2)), (2001, 1), 52, None, None,
                        covariates={"Sprop": np.zeros((3, 2))})


def test_epoch_labels_wrap_years():
    series = validate_counts(np.zeros((4, 1)), (2001, 51), 52, None, None)
    assert series.epoch_labels() == ["2001/51", "2001/52", "2002/1", "2002/2"]


def test_aggregate_to_biweekly(count_series):
    coarse = aggregate_counts(count_series, 26)
    assert coarse.n_time == count_series.n_time // 2
    assert coarse.freq == 26
    assert coarse.counts.sum() == count_series.counts.sum()
    np.testing.assert_array_equal(coarse.counts[0], count_series.counts[:2].sum(axis=0))


def test_aggregate_needs_divisor(count_series):
    with pytest.raises(ValueError, match="must divide freq"):
        aggregate_counts(count_series, 5)
