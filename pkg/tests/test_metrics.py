import numpy as np
import pytest

from gmrf_ctigo import sparse as sps
from gmrf_ctigo.cholesky import cholesky
from gmrf_ctigo.ctigo import Threshold, ctigo_factorize
from gmrf_ctigo.errors import DimensionError, ParameterError
from gmrf_ctigo.gmrf import build_example_q1, build_poisson, build_rw1, stack_factor
from gmrf_ctigo.metrics import (
    CSV_HEADER,
    TAU_GRID_DEFAULT,
    format_table,
    pattern_image,
    report,
    tolerance_sweep,
)


@pytest.fixture(scope="module")
def example9():
    Q1 = build_example_q1()
    A = stack_factor(cholesky(Q1), sps.identity(9))
    Q = sps.add(Q1, sps.identity(9))
    return Q, A, cholesky(Q)


def test_exact_factor_report(example9):
    Q, A, L = example9
    r = report(Q, L, ctigo_factorize(A, Threshold(0.0)), 0.0)
    assert r.error_precision_norm1 <= 1e-12 * sps.norm1(Q)
    assert r.nnz_R == r.nnz_L
    assert r.fill_in == L.nnz - sps.lower_triangle(Q).nnz >= 0
    assert r.dropped_count == 0


def test_example9_covariance_error_small(example9):
    Q, A, L = example9
    r = report(Q, L, ctigo_factorize(A, Threshold(1e-4)), 1e-4)
    assert r.error_covariance_norm1 < 1e-3
    assert r.nnz_R < r.nnz_L
    assert r.error_precision_norm1 > 0


def test_report_dense_limit_and_dimension(example9):
    Q, A, L = example9
    r = report(Q, L, ctigo_factorize(A), 0.0, dense_limit=5)
    assert r.error_covariance_norm1 is None
    with pytest.raises(DimensionError):
        report(build_rw1(5), L, ctigo_factorize(A), 0.0)


def test_row_matches_header(example9):
    Q, A, L = example9
    r = report(Q, L, ctigo_factorize(A), 0.0, wall_time_ms=1.5)
    assert len(r.row()) == len(CSV_HEADER)
    assert r.row()[-1] == 1.5
    assert r.as_dict()["nnz_Q"] == Q.nnz


@pytest.mark.parametrize("Q1", [build_rw1(100), build_poisson(10)], ids=["rw1", "poisson"])
def test_sweep_error_decreases(Q1):
    reports = tolerance_sweep(Q1, TAU_GRID_DEFAULT)
    errors = [r.error_precision_norm1 for r in reports]
    assert all(a > b for a, b in zip(errors, errors[1:])), errors
    Q = sps.add(Q1, sps.identity(Q1.nrows))
    assert errors[-1] <= 1e-12 * sps.norm1(Q)
    assert all(r.nnz_Q == Q.nnz for r in reports)
    assert all(r.error_precision_norm1 >= 0 and r.fill_in >= 0 for r in reports)


def test_sweep_single_zero_and_errors():
    reports = tolerance_sweep(build_rw1(20), [0.0])
    assert len(reports) == 1
    assert reports[0].error_precision_norm1 < 1e-12
    with pytest.raises(ParameterError):
        tolerance_sweep(build_rw1(20), [])
    with pytest.raises(ParameterError):
        tolerance_sweep(build_rw1(20), [1e-3, -1.0])


def test_sweep_with_custom_root():
    Q1 = build_rw1(10)
    W = sps.from_triplets(2, 10, [(0, 0, 1.0), (1, 9, 3.0)])
    r = tolerance_sweep(Q1, [0.0], root=W)[0]
    assert r.nnz_Q == sps.add(Q1, sps.gram(W)).nnz
    assert r.error_precision_norm1 < 1e-12


def test_pattern_image():
    M = sps.from_triplets(3, 4, [(0, 0, 1.0), (2, 3, -2.0), (1, 1, 0.5)])
    img = pattern_image(M)
    assert img.dtype == bool and img.shape == (3, 4)
    expected = np.zeros((3, 4), dtype=bool)
    expected[0, 0] = expected[2, 3] = expected[1, 1] = True
    np.testing.assert_array_equal(img, expected)
    assert pattern_image(build_example_q1()).sum() == 27


def test_format_table_layout():
    text = format_table(tolerance_sweep(build_rw1(20), [1e-2, 0.0]), title="RW1")
    lines = text.splitlines()
    assert lines[0] == "RW1"
    assert "tolerance" in lines[1] and "error" in lines[1]
    assert lines[3].split("|")[0].strip() == "0.01"
    assert lines[4].split("|")[0].strip() == "0"
    assert "E-" in lines[3]
