import numpy as np
import pytest

from gmrf_ctigo import sparse as sps
from gmrf_ctigo.cholesky import as_lower_factor, cholesky
from gmrf_ctigo.ctigo import Threshold, ctigo_factorize
from gmrf_ctigo.errors import DimensionError, RankError
from gmrf_ctigo.gmrf import CanonicalGmrf, Provenance, build_poisson, build_rw1, stack_factor
from gmrf_ctigo.sampling import (
    GENERATOR_NAME,
    RandomSource,
    canonical_mean,
    sample_least_squares,
    sample_with_factor,
)

from conftest import random_spd

N_DRAWS = 200_000


def rel_maxabs(C, ref):
    return np.abs(C - ref).max() / np.abs(ref).max()


def test_identity_factor_returns_noise():
    z = RandomSource(5).standard_normal(6)
    x = sample_with_factor(cholesky(sps.identity(6)), RandomSource(5))
    np.testing.assert_array_equal(x, z)


def test_diagonal_factor_scales_noise():
    sigma = np.array([0.5, 2.0, 3.0])
    z = RandomSource(9).standard_normal(3)
    x = sample_with_factor(as_lower_factor(sps.diag(1.0 / sigma)), RandomSource(9))
    np.testing.assert_allclose(x, sigma * z, rtol=1e-15)


def test_mean_shift_and_shape(rng):
    L = cholesky(build_rw1(5))
    x = sample_with_factor(L, RandomSource(1), mu=np.arange(5.0), size=7)
    assert x.shape == (7, 5)
    y = sample_with_factor(L, RandomSource(1), size=7)
    np.testing.assert_allclose(x - y, np.tile(np.arange(5.0), (7, 1)))
    with pytest.raises(DimensionError):
        sample_with_factor(L, RandomSource(1), mu=np.zeros(4))


def test_same_seed_same_draws():
    A = stack_factor(cholesky(build_rw1(8)), sps.identity(8))
    a = sample_least_squares(A, RandomSource(77))
    b = sample_least_squares(A, RandomSource(77))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_least_squares(A, RandomSource(78)))
    assert RandomSource(1).algorithm == GENERATOR_NAME


def test_least_squares_on_two_identities():
    A = sps.vstack([sps.identity(3), sps.identity(3)])
    z = RandomSource(4).standard_normal(6)
    x = sample_least_squares(A, RandomSource(4))
    np.testing.assert_allclose(x, (z[:3] + z[3:]) / 2, atol=1e-15)
    with pytest.raises(RankError):
        sample_least_squares(sps.zeros(2, 3), RandomSource(1))


def test_rw1_factor_route_covariance():
    Q = sps.add(build_rw1(5), sps.identity(5))
    x = sample_with_factor(cholesky(Q), RandomSource(2024), size=N_DRAWS)
    assert rel_maxabs(np.cov(x, rowvar=False), sps.dense_inverse(Q)) < 0.03


def test_least_squares_matches_factor_route():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((7, 4))
    A = sps.from_dense(M)
    Q = sps.gram(A)
    x_ls = sample_least_squares(A, RandomSource(11), size=N_DRAWS)
    x_f = sample_with_factor(cholesky(Q), RandomSource(12), size=N_DRAWS)
    C_ls, C_f = np.cov(x_ls, rowvar=False), np.cov(x_f, rowvar=False)
    assert rel_maxabs(C_ls, C_f) < 0.03
    assert rel_maxabs(C_ls, sps.dense_inverse(Q)) < 0.03


def test_empirical_mean_within_four_sigma():
    Q = sps.add(build_rw1(6), sps.identity(6))
    mu = np.linspace(-1, 1, 6)
    x = sample_with_factor(cholesky(Q), RandomSource(8), mu=mu, size=N_DRAWS)
    sd = np.sqrt(np.diag(sps.dense_inverse(Q)))
    assert np.all(np.abs(x.mean(axis=0) - mu) < 4 * sd / np.sqrt(N_DRAWS))


def test_incomplete_factor_targets_its_own_precision():
    Q1 = build_poisson(3)
    A = stack_factor(cholesky(Q1), sps.identity(9))
    R = ctigo_factorize(A, Threshold(0.3))
    Qt = sps.gram(R.matrix)
    x = sample_with_factor(R, RandomSource(31), size=N_DRAWS)
    C = np.cov(x, rowvar=False)
    target = sps.dense_inverse(Qt)
    exact = sps.dense_inverse(sps.gram(A))
    assert rel_maxabs(target, exact) > 0.1
    assert rel_maxabs(C, target) < 0.03
    assert rel_maxabs(C, exact) > 0.1


def test_tau_zero_upper_and_lower_routes_agree():
    Q1 = build_rw1(10)
    A = stack_factor(cholesky(Q1), sps.identity(10))
    L = cholesky(sps.gram(A))
    R = ctigo_factorize(A, Threshold(0.0))
    x_l = sample_with_factor(L, RandomSource(3))
    x_r = sample_with_factor(R, RandomSource(3))
    np.testing.assert_allclose(x_l, x_r, atol=1e-10)


def test_canonical_mean(rng):
    g = CanonicalGmrf(np.zeros(4), build_rw1(4), Provenance.PRIOR)
    np.testing.assert_array_equal(canonical_mean(g), np.zeros(4))
    g = CanonicalGmrf(np.ones(3), sps.scale(sps.identity(3), 2.0), Provenance.PRIOR)
    np.testing.assert_allclose(canonical_mean(g), np.full(3, 0.5))
    Q = random_spd(rng, 12)
    b = rng.standard_normal(12)
    mu = canonical_mean(CanonicalGmrf(b, sps.from_dense(Q), Provenance.PRIOR))
    np.testing.assert_allclose(mu, np.linalg.solve(Q, b), rtol=1e-10)
    assert np.linalg.norm(Q @ mu - b) <= 1e-10 * np.linalg.norm(b)
