"""Drawing GMRF samples from triangular factors and by least squares."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from . import sparse as sps
from .cholesky import LowerFactor, cholesky, solve
from .ctigo import Threshold, UpperFactor, ctigo_factorize
from .errors import DimensionError, RankError
from .gmrf import CanonicalGmrf

GENERATOR_NAME = "numpy-philox4x64/ziggurat-normal"


class RandomSource:
    """Seeded standard-normal stream (counter-based Philox, ziggurat normals).

    Not thread safe; give each worker its own source.
    """

    algorithm = GENERATOR_NAME

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def standard_normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def __repr__(self):
        return f"RandomSource(seed={self.seed})"


def _draw(rng: RandomSource, n: int, size: Optional[int]) -> np.ndarray:
    if size is None:
        return rng.standard_normal(n)
    return rng.standard_normal((size, n)).T


def sample_with_factor(
    factor: Union[LowerFactor, UpperFactor],
    rng: RandomSource,
    mu=None,
    size: Optional[int] = None,
) -> np.ndarray:
    """Sample ``x = mu + U^{-1} z`` where ``U`` is ``L^T`` or ``R``.

    The draw has covariance ``(L L^T)^{-1}`` or ``(R^T R)^{-1}``. With ``size``
    the result has one draw per row.
    """
    n = factor.n
    z = _draw(rng, n, size)
    if isinstance(factor, LowerFactor):
        x = sps.solve_triangular(factor.matrix, z, lower=True, transpose=True)
    else:
        x = sps.solve_triangular(factor.matrix, z, lower=False)
    if size is not None:
        x = x.T
    if mu is not None:
        mu = np.asarray(mu, dtype=np.float64)
        if mu.shape != (n,):
            raise DimensionError(f"mean has length {mu.shape}, expected {n}")
        x = x + mu
    return x


def sample_least_squares(
    A: sps.SparseMatrix,
    rng: RandomSource,
    size: Optional[int] = None,
    factor: Optional[UpperFactor] = None,
) -> np.ndarray:
    """Sample ``argmin_y ||A y - z||`` with ``z ~ N(0, I)``.

    The minimizer solves ``R^T R x = A^T z`` with ``R`` from an exact Givens QR
    of ``A``, so ``x ~ N(0, (A^T A)^{-1})``. Pass ``factor`` to reuse ``R``.
    """
    m, n = A.shape
    if m < n:
        raise RankError(m)
    if factor is None:
        factor = ctigo_factorize(A, Threshold(0.0))
    z = _draw(rng, m, size)
    rhs = sps.matvec(sps.transpose(A), z)
    y = sps.solve_triangular(factor.matrix, rhs, lower=False, transpose=True)
    x = sps.solve_triangular(factor.matrix, y, lower=False)
    return x.T if size is not None else x


def canonical_mean(g: CanonicalGmrf) -> np.ndarray:
    """Mean ``Q^{-1} b`` of a canonical GMRF."""
    return solve(cholesky(g.Q), g.b)
