"""Precision-matrix families and conditioned GMRFs in canonical form.

Canonical convention used throughout: ``N_c(b, Q)`` has density proportional
to ``exp(-x^T Q x / 2 + b^T x)``, hence mean ``Q^{-1} b``.

Every conditioning operation splits its precision as ``Q = Q1 + Q2`` and also
records a "root" ``W`` of the update, a sparse ``k x n`` matrix with
``W^T W = Q2``. Stacking ``L1^T`` over ``W`` gives a tall matrix whose Gram
matrix is ``Q``; that is the input of the incomplete Givens factorization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sparse as sps
from .cholesky import LowerFactor, cholesky
from .errors import DimensionError, ParameterError
from .sparse import SparseMatrix


class Provenance(enum.Enum):
    PRIOR = "prior"
    SOFT_CONSTRAINT = "soft_constraint"
    DATA_CONDITIONED = "data_conditioned"
    GMRF_APPROX = "gmrf_approx"
    AUX_PROBIT = "aux_probit"
    AUX_LOGIT = "aux_logit"


@dataclass(frozen=True)
class CanonicalGmrf:
    b: np.ndarray
    Q: SparseMatrix
    provenance: Provenance
    q1: Optional[SparseMatrix] = field(default=None, repr=False)
    q2: Optional[SparseMatrix] = field(default=None, repr=False)
    q2_root: Optional[SparseMatrix] = field(default=None, repr=False)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if self.Q.nrows != self.Q.ncols or b.shape != (self.Q.nrows,):
            raise DimensionError("precision must be square and match the length of b")
        if not np.all(np.isfinite(b)):
            raise ValueError("b has non-finite entries")
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.Q.nrows


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    h: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ParameterError("grid needs at least 3 nodes per axis")
        if not self.h > 0:
            raise ParameterError("grid spacing must be positive")

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def index(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix


@dataclass(frozen=True)
class AnisotropyTensor:
    h11: float
    h12: float
    h22: float

    def __post_init__(self):
        if not (self.h11 > 0 and self.h11 * self.h22 - self.h12 ** 2 > 0):
            raise ParameterError("anisotropy tensor must be symmetric positive definite")

    @classmethod
    def from_matrix(cls, H) -> AnisotropyTensor:
        H = np.asarray(H, dtype=np.float64)
        if H.shape != (2, 2) or H[0, 1] != H[1, 0]:
            raise ParameterError("anisotropy tensor must be a symmetric 2x2 matrix")
        return cls(float(H[0, 0]), float(H[0, 1]), float(H[1, 1]))


REFERENCE_ANISOTROPY = AnisotropyTensor(0.1, 0.05, 0.1)


# ---------------------------------------------------------------- builders


def build_example_q1() -> SparseMatrix:
    """The 9x9 cyclic tridiagonal example: diagonal 5, neighbours and corners -1."""
    n = 9
    entries = [(i, i, 5.0) for i in range(n)]
    for i in range(n):
        j = (i + 1) % n
        entries += [(i, j, -1.0), (j, i, -1.0)]
    return sps.from_triplets(n, n, entries)


def build_rw1(n: int, jitter: float = 1e-3) -> SparseMatrix:
    if n < 3:
        raise ParameterError("RW1 needs n >= 3")
    if jitter < 0:
        raise ParameterError("jitter must be non-negative")
    D = sps.from_triplets(n - 1, n, [(i, i, -1.0) for i in range(n - 1)] + [(i, i + 1, 1.0) for i in range(n - 1)])
    return _add_jitter(sps.gram(D), jitter)


def build_rw2(n: int, jitter: float = 1e-3) -> SparseMatrix:
    if n < 5:
        raise ParameterError("RW2 needs n >= 5")
    if jitter < 0:
        raise ParameterError("jitter must be non-negative")
    entries = []
    for i in range(n - 2):
        entries += [(i, i, 1.0), (i, i + 1, -2.0), (i, i + 2, 1.0)]
    return _add_jitter(sps.gram(sps.from_triplets(n - 2, n, entries)), jitter)


def _add_jitter(Q: SparseMatrix, jitter: float) -> SparseMatrix:
    if jitter == 0:
        return Q
    return sps.add(Q, sps.scale(sps.identity(Q.nrows), jitter))


def build_poisson(n: int) -> SparseMatrix:
    """5-point Laplacian on an ``n x n`` mesh with Dirichlet closure (order ``n^2``)."""
    if n < 2:
        raise ParameterError("Poisson matrix needs n >= 2")
    entries = []
    for iy in range(n):
        for ix in range(n):
            k = iy * n + ix
            entries.append((k, k, 4.0))
            if ix + 1 < n:
                entries += [(k, k + 1, -1.0), (k + 1, k, -1.0)]
            if iy + 1 < n:
                entries += [(k, k + n, -1.0), (k + n, k, -1.0)]
    return sps.from_triplets(n * n, n * n, entries)


def build_toeplitz_corner(n: int, band=(5.0, -1.0)) -> SparseMatrix:
    """Symmetric banded Toeplitz matrix with ``+1`` in the two far corners.

    ``band[d]`` is the value on the ``d``-th off-diagonal (``band[0]`` is the
    diagonal). The result is checked to be positive definite.
    """
    band = [float(v) for v in band]
    if not band or len(band) >= n:
        raise ParameterError("band must be non-empty and narrower than the matrix")
    entries = []
    for d, v in enumerate(band):
        for i in range(n - d):
            entries.append((i + d, i, v))
            if d:
                entries.append((i, i + d, v))
    entries += [(0, n - 1, 1.0), (n - 1, 0, 1.0)]
    Q = sps.from_triplets(n, n, entries)
    cholesky(Q)
    return Q


def _grid_laplacian(grid: GridSpec, periodic: bool) -> SparseMatrix:
    """Graph Laplacian of the 4-neighbour grid (Neumann closure when not periodic)."""
    entries = []
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            k = grid.index(ix, iy)
            for dx, dy in ((1, 0), (0, 1)):
                jx, jy = ix + dx, iy + dy
                if periodic:
                    jx, jy = jx % grid.nx, jy % grid.ny
                elif jx >= grid.nx or jy >= grid.ny:
                    continue
                j = grid.index(jx, jy)
                entries += [(k, k, 1.0), (j, j, 1.0), (k, j, -1.0), (j, k, -1.0)]
    return sps.from_triplets(grid.size, grid.size, entries)


def _spde_precision(grid: GridSpec, kappa: float, K: SparseMatrix) -> SparseMatrix:
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    h2 = grid.h ** 2
    B = sps.add(sps.scale(sps.identity(grid.size), kappa ** 2), sps.scale(K, 1.0 / h2))
    return sps.scale(sps.gram(B), h2)


def build_spde_matern(grid: GridSpec, kappa: float = 0.3) -> SparseMatrix:
    """``alpha = 2`` Matern SPDE precision, Neumann boundary, 13-point stencil."""
    return _spde_precision(grid, kappa, _grid_laplacian(grid, periodic=False))


def anisotropic_operator(grid: GridSpec, H: AnisotropyTensor) -> SparseMatrix:
    """Periodic finite-difference discretization of ``-div(H grad x)`` (times ``h^2``)."""
    c = {
        (1, 0): -H.h11, (-1, 0): -H.h11,
        (0, 1): -H.h22, (0, -1): -H.h22,
        (1, 1): -H.h12 / 2, (-1, -1): -H.h12 / 2,
        (1, -1): H.h12 / 2, (-1, 1): H.h12 / 2,
    }
    entries = []
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            k = grid.index(ix, iy)
            entries.append((k, k, 2 * (H.h11 + H.h22)))
            for (dx, dy), v in c.items():
                if v != 0.0:
                    entries.append((k, grid.index((ix + dx) % grid.nx, (iy + dy) % grid.ny), v))
    return sps.from_triplets(grid.size, grid.size, entries)


def build_spde_aniso(grid: GridSpec, kappa: float = 0.1, H: AnisotropyTensor = REFERENCE_ANISOTROPY) -> SparseMatrix:
    """Anisotropic SPDE precision on a periodic grid (corner entries from wraparound)."""
    if not isinstance(H, AnisotropyTensor):
        H = AnisotropyTensor.from_matrix(H)
    return _spde_precision(grid, kappa, anisotropic_operator(grid, H))


# ------------------------------------------------------------ conditioning


def _check_square(Q1: SparseMatrix):
    if Q1.nrows != Q1.ncols:
        raise DimensionError(f"prior precision must be square, got {Q1.shape}")


def condition_on_gaussian_data(
    Q1: SparseMatrix, Aobs: SparseMatrix, Qeps: SparseMatrix, y, provenance=Provenance.DATA_CONDITIONED
) -> CanonicalGmrf:
    """Posterior of ``x`` given ``y | x ~ N(Aobs x, Qeps^{-1})``.

    Returns ``N_c(Aobs^T Qeps y, Q1 + Aobs^T Qeps Aobs)``. The same formula is
    the soft-constraint model with ``y`` the observed ``e``.
    """
    _check_square(Q1)
    y = np.asarray(y, dtype=np.float64)
    k, n = Aobs.shape
    if n != Q1.nrows or Qeps.shape != (k, k) or y.shape != (k,):
        raise DimensionError("observation matrix, noise precision and data disagree in size")
    if k > n:
        raise DimensionError("more observations than latent variables")
    Leps = cholesky(Qeps)
    root = sps.matmul(sps.transpose(Leps.matrix), Aobs)
    Q2 = sps.gram(root)
    b = sps.matvec(sps.transpose(Aobs), sps.matvec(Qeps, y))
    return CanonicalGmrf(b, sps.add(Q1, Q2), provenance, Q1, Q2, root)


def soft_constraint(Q1: SparseMatrix, A: SparseMatrix, Qeps: SparseMatrix, e) -> CanonicalGmrf:
    return condition_on_gaussian_data(Q1, A, Qeps, e, provenance=Provenance.SOFT_CONSTRAINT)


def condition_aux_probit(Q1: SparseMatrix, Z: SparseMatrix, omega) -> CanonicalGmrf:
    """``N_c(Z^T omega, Q1 + Z^T Z)`` for probit auxiliary variables."""
    _check_square(Q1)
    omega = np.asarray(omega, dtype=np.float64)
    if Z.ncols != Q1.nrows or omega.shape != (Z.nrows,):
        raise DimensionError("covariate matrix and auxiliary vector disagree in size")
    Q2 = sps.gram(Z)
    b = sps.matvec(sps.transpose(Z), omega)
    return CanonicalGmrf(b, sps.add(Q1, Q2), Provenance.AUX_PROBIT, Q1, Q2, Z)


def condition_aux_logit(Q1: SparseMatrix, Z: SparseMatrix, omega, lam) -> CanonicalGmrf:
    """``N_c(Z^T diag(lam) omega, Q1 + Z^T diag(lam) Z)`` for logit auxiliary variables."""
    _check_square(Q1)
    omega = np.asarray(omega, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if Z.ncols != Q1.nrows or omega.shape != (Z.nrows,) or lam.shape != (Z.nrows,):
        raise DimensionError("covariate matrix, auxiliary vector and weights disagree in size")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ParameterError("logit weights must be positive")
    root = sps.matmul(sps.diag(np.sqrt(lam)), Z)
    Q2 = sps.gram(root)
    b = sps.matvec(sps.transpose(Z), lam * omega)
    return CanonicalGmrf(b, sps.add(Q1, Q2), Provenance.AUX_LOGIT, Q1, Q2, root)


def gmrf_approximation(Q1: SparseMatrix, b, c) -> CanonicalGmrf:
    """Gaussian approximation ``N_c(b, Q1 + diag(max(c, 0)))``.

    Negative curvature terms are clamped to zero so the precision stays SPD.
    """
    _check_square(Q1)
    b = np.asarray(b, dtype=np.float64)
    c = np.maximum(np.asarray(c, dtype=np.float64), 0.0)
    n = Q1.nrows
    if b.shape != (n,) or c.shape != (n,):
        raise DimensionError("b and c must match the prior dimension")
    Q2 = sps.diag(c)
    pos = np.flatnonzero(c > 0)
    root = sps.from_triplets(len(pos), n, [(r, int(i), float(np.sqrt(c[i]))) for r, i in enumerate(pos)])
    return CanonicalGmrf(b, sps.add(Q1, Q2), Provenance.GMRF_APPROX, Q1, Q2, root)


def shift_mean(g: CanonicalGmrf, mu) -> CanonicalGmrf:
    """Account for a non-zero prior mean: ``b <- Q mu + b``; ``Q`` is unchanged."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (g.n,):
        raise DimensionError("mean has the wrong length")
    return CanonicalGmrf(sps.matvec(g.Q, mu) + g.b, g.Q, g.provenance, g.q1, g.q2, g.q2_root)


def prior(Q1: SparseMatrix) -> CanonicalGmrf:
    return CanonicalGmrf(np.zeros(Q1.nrows), Q1, Provenance.PRIOR, Q1)


# ----------------------------------------------------------------- stacking


def stack_factor(L1: LowerFactor, L2) -> SparseMatrix:
    """Tall matrix ``[L1^T; L2^T]`` whose Gram matrix is ``Q1 + Q2``.

    ``L2`` is either a :class:`LowerFactor` of ``Q2`` or directly a ``k x n``
    root ``W`` with ``W^T W = Q2``, which is stacked as given.
    """
    top = sps.transpose(L1.matrix)
    if isinstance(L2, LowerFactor):
        if L2.n != L1.n:
            raise DimensionError(f"factors have different orders {L1.n} and {L2.n}")
        bottom = sps.transpose(L2.matrix)
    else:
        if L2.ncols != L1.n:
            raise DimensionError(f"root has {L2.ncols} columns, factor order is {L1.n}")
        bottom = L2
    return sps.vstack([top, bottom])


def stacked_matrix(g: CanonicalGmrf) -> SparseMatrix:
    """Stacked factor matrix for a conditioned GMRF."""
    if g.q1 is None:
        raise ParameterError("GMRF does not carry its prior precision")
    L1 = cholesky(g.q1)
    root = g.q2_root if g.q2_root is not None else sps.zeros(0, g.n)
    return stack_factor(L1, root)


def log_posterior_theta(logdet_Q1: float, logdet_Qc: float, mu_c, Qc: SparseMatrix, log_prior: float = 0.0) -> float:
    """Log posterior of the hyperparameters up to an additive constant."""
    mu_c = np.asarray(mu_c, dtype=np.float64)
    if mu_c.shape != (Qc.nrows,):
        raise DimensionError("mean and precision disagree in size")
    quad = float(mu_c @ sps.matvec(Qc, mu_c))
    return log_prior + 0.5 * logdet_Q1 - 0.5 * logdet_Qc + 0.5 * quad
