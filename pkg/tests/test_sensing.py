import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specperturb.affinity import DataMatrix, pairwise_sqdist
from specperturb.numkernel import SeededRng, gaussian_matrix
from specperturb.sensing import (MeasurementOperator, empirical_rip_delta, measure,
                                 measurement_estimate, required_measurements)


def brute_force_delta(X, M):
    """Oracle: loop over every pair with the dense operator."""
    best, pair = -1.0, None
    for i in range(len(X)):
        for j in range(i + 1, len(X)):
            d = X[i] - X[j]
            nd = d @ d
            if nd == 0:
                continue
            dev = abs((M @ d) @ (M @ d) / nd - 1.0)
            if dev > best:
                best, pair = dev, (i, j)
    return best, pair


def test_identity_operator_preserves_distances():
    X = gaussian_matrix(10, 5, SeededRng(1))
    Y = measure(X, MeasurementOperator.identity(5))
    assert np.array_equal(Y.X, X)
    assert empirical_rip_delta(X, MeasurementOperator.identity(5)).delta_emp == 0.0


def test_zero_row_measures_to_zero():
    op = MeasurementOperator.from_seed(4, 6, 3)
    assert np.array_equal(measure(np.zeros((2, 6)), op).X, np.zeros((2, 4)))


def test_operator_is_scaled_gaussian():
    op = MeasurementOperator.from_seed(8, 5, 11)
    assert op.scale == pytest.approx(1 / math.sqrt(8))
    assert np.array_equal(op.phi, gaussian_matrix(8, 5, SeededRng(11)))
    assert np.allclose(op.matrix, op.phi / math.sqrt(8))
    assert op.describe() == {"m": 8, "n": 5, "seed": 11, "kind": "gaussian"}


def test_nested_operators_share_rows():
    small = MeasurementOperator.from_seed(3, 4, 7)
    large = MeasurementOperator.from_seed(6, 4, 7)
    assert np.array_equal(small.phi, large.phi[:3])


def test_measure_carries_labels_and_checks_dimension():
    X = DataMatrix(gaussian_matrix(4, 3, SeededRng(2)), labels=[0, 0, 1, 1])
    Y = measure(X, MeasurementOperator.from_seed(2, 3, 0))
    assert np.array_equal(Y.labels, X.labels)
    with pytest.raises(ValueError):
        measure(X, MeasurementOperator.from_seed(2, 4, 0))


def test_measurement_is_unbiased_in_energy():
    # a zero second row keeps the input a valid data matrix without adding energy
    x = np.vstack([gaussian_matrix(1, 20, SeededRng(3)), np.zeros((1, 20))])
    energy = [np.sum(measure(x, MeasurementOperator.from_seed(10, 20, s)).X ** 2)
              for s in range(500)]
    assert abs(np.mean(energy) / np.sum(x ** 2) - 1.0) <= 0.1


def test_single_pair_delta():
    X = gaussian_matrix(2, 6, SeededRng(4))
    op = MeasurementOperator.from_seed(3, 6, 5)
    d = X[0] - X[1]
    expected = abs(np.sum((op.matrix @ d) ** 2) / (d @ d) - 1.0)
    r = empirical_rip_delta(X, op)
    assert r.delta_emp == pytest.approx(expected, rel=1e-12)
    assert r.worst_pair == (0, 1) and r.pairs_checked == 1


def test_delta_shrinks_with_more_measurements():
    X = gaussian_matrix(20, 64, SeededRng(6))
    means = []
    for m in (16, 64, 256, 1024):
        means.append(np.mean([empirical_rip_delta(X, MeasurementOperator.from_seed(m, 64, s)).delta_emp
                              for s in range(20)]))
    assert np.all(np.diff(means) < 0)


def test_identical_rows_are_skipped_with_warning():
    X = np.array([[0.0, 1.0], [0.0, 1.0], [2.0, 0.0]])
    with pytest.warns(RuntimeWarning, match="1 identical"):
        r = empirical_rip_delta(X, MeasurementOperator.from_seed(2, 2, 1))
    assert r.pairs_checked == 2 and r.pairs_skipped == 1
    with pytest.raises(ValueError):
        empirical_rip_delta(np.ones((3, 2)), MeasurementOperator.identity(2))


def test_required_measurements_examples():
    assert measurement_estimate(3, 100, 0.5) == pytest.approx(24 * math.log(100 / 1.5))
    assert math.ceil(measurement_estimate(3, 100, 0.5)) == 101
    assert required_measurements(3, 100, 0.5) == 100
    m = required_measurements(1, 10, 0.999)
    assert 1 <= m <= 10
    assert measurement_estimate(2, 50, 0.3, c=2.0) == pytest.approx(2 * measurement_estimate(2, 50, 0.3))


def test_required_measurements_rejects_bad_ranges():
    for args in ((3, 100, 0.0), (3, 100, 1.0), (0, 100, 0.5), (5, 5, 0.5)):
        with pytest.raises(ValueError):
            required_measurements(*args)
    with pytest.raises(ValueError):
        required_measurements(3, 100, 0.5, c=0.0)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 12), n=st.integers(1, 8), m=st.integers(1, 10), seed=st.integers(0, 2**32))
def test_property_delta_is_tightest_constant(N, n, m, seed):
    X = gaussian_matrix(N, n, SeededRng(seed))
    op = MeasurementOperator.from_seed(m, n, seed + 1)
    r = empirical_rip_delta(X, op)
    delta, pair = brute_force_delta(X, op.matrix)
    assert r.delta_emp == pytest.approx(delta, rel=1e-9, abs=1e-12)
    d0, d1 = pairwise_sqdist(X), pairwise_sqdist(measure(X, op))
    iu = np.triu_indices(N, 1)
    a, b = d0[iu], d1[iu]
    slack = 1e-12 * a
    assert np.all(b <= (1 + r.delta_emp) * a + slack)
    assert np.all(b >= (1 - r.delta_emp) * a - slack)
    i, j = r.worst_pair
    assert abs(d1[i, j] / d0[i, j] - 1.0) == r.delta_emp
