"""Givens rotations and column-wise threshold incomplete Givens orthogonalization.

``ctigo_factorize`` reduces a tall sparse matrix ``A`` to an upper triangular
``R`` by zeroing subdiagonal entries one at a time with plane rotations.
Columns are processed left to right; in column ``j`` the nonzeros below the
diagonal are annihilated bottom-up, each against pivot row ``j``. After every
rotation the two touched rows are filtered by the drop rule, so the nonzero
pattern of ``R`` is decided while the sweep runs. With nothing dropped,
``R^T R = A^T A`` and ``R`` is the Cholesky factor of ``A^T A`` (transposed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, ParameterError, RankError, ShapeError
from .sparse import SparseMatrix, add, from_triplets, gram, matmul, norm1, scale

PIVOT_UNDERFLOW = 1e-300
TRACK_Q_LIMIT = 512


@dataclass(frozen=True)
class GivensRotation:
    """Rotation in the plane of rows ``i`` (kept) and ``j`` (annihilated)."""

    i: int
    j: int
    c: float
    s: float

    def __post_init__(self):
        if self.i == self.j:
            raise ParameterError("rotation rows must differ")


@dataclass(frozen=True)
class Threshold:
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ParameterError(f"dropping tolerance must be finite and >= 0, got {self.tau!r}")


@dataclass(frozen=True)
class FixedPattern:
    pattern: frozenset

    def __init__(self, pattern):
        object.__setattr__(self, "pattern", frozenset((int(i), int(j)) for i, j in pattern))


DropRule = Union[Threshold, FixedPattern]


@dataclass(frozen=True)
class UpperFactor:
    matrix: SparseMatrix
    dropped_count: int
    rotations_applied: int
    orthogonal: Optional[np.ndarray] = None
    rotations: Optional[tuple] = None

    @property
    def n(self) -> int:
        return self.matrix.nrows

    @property
    def nnz(self) -> int:
        return self.matrix.nnz


def compute_givens(x_i: float, x_j: float) -> tuple[float, float]:
    """``(c, s)`` with ``c x_i + s x_j = hypot(x_i, x_j)`` and ``-s x_i + c x_j = 0``."""
    if x_j == 0.0:
        return 1.0, 0.0
    # rescale first so subnormal inputs keep full relative precision
    m = max(abs(x_i), abs(x_j))
    a, b = x_i / m, x_j / m
    r = math.hypot(a, b)
    return a / r, b / r


def apply_rotation(A: SparseMatrix, g: GivensRotation) -> SparseMatrix:
    """Replace rows ``g.i`` and ``g.j`` of ``A`` by their rotation."""
    m = A.nrows
    if not (0 <= g.i < m and 0 <= g.j < m):
        raise DimensionError(f"rotation rows ({g.i}, {g.j}) out of range for {m} rows")
    entries = [(k, k, 1.0) for k in range(m) if k not in (g.i, g.j)]
    entries += [(g.i, g.i, g.c), (g.i, g.j, g.s), (g.j, g.i, -g.s), (g.j, g.j, g.c)]
    return matmul(from_triplets(m, m, entries), A)


def _column_scales(A: SparseMatrix) -> np.ndarray:
    scales = np.zeros(A.ncols)
    for j in range(A.ncols):
        _, vals = A.column(j)
        if len(vals):
            scales[j] = np.abs(vals).max()
    return scales


def ctigo_factorize(
    A: SparseMatrix,
    rule: DropRule = Threshold(0.0),
    track_q: bool = False,
    keep_rotations: bool = False,
) -> UpperFactor:
    """Incomplete Givens QR of ``A`` returning the upper factor ``R``.

    Under ``Threshold(tau)`` an entry in column ``k`` of a freshly rotated row
    is dropped when its magnitude is below ``tau`` times the largest magnitude
    in column ``k`` of the input ``A``; entries of the column being reduced are
    never dropped. Under ``FixedPattern`` an entry of the pivot row outside the
    given pattern is dropped. ``track_q`` accumulates ``S`` with
    ``A = S [R; 0] + E`` (desk scale only).
    """
    m, n = A.shape
    if m < n:
        raise ShapeError(f"need nrows >= ncols, got {A.shape}")
    if track_q and m > TRACK_Q_LIMIT:
        raise ShapeError(f"orthogonal factor tracking limited to {TRACK_Q_LIMIT} rows")
    colscale = _column_scales(A)
    for j in np.flatnonzero(colscale == 0.0):
        raise RankError(int(j))

    if isinstance(rule, Threshold):
        cutoff = rule.tau * colscale
        allowed = None
    elif isinstance(rule, FixedPattern):
        missing = [j for j in range(n) if (j, j) not in rule.pattern]
        if missing:
            raise ParameterError(f"fixed pattern lacks diagonal entry ({missing[0]}, {missing[0]})")
        cutoff = np.zeros(n)
        allowed = rule.pattern
    else:
        raise ParameterError(f"unknown drop rule {rule!r}")

    rows: list[dict[int, float]] = [{} for _ in range(m)]
    col_rows: list[set[int]] = [set() for _ in range(n)]
    for i, j, v in A.triplets():
        rows[i][j] = v
        col_rows[j].add(i)

    P = np.eye(m) if track_q else None
    log = [] if keep_rotations else None
    dropped = 0
    applied = 0

    def _discard(row_id, row, k):
        del row[k]
        col_rows[k].discard(row_id)

    for j in range(n):
        piv = rows[j]
        below = sorted((i for i in col_rows[j] if i > j), reverse=True)
        for i in below:
            other = rows[i]
            c, s = compute_givens(piv.get(j, 0.0), other[j])
            for k in set(piv).union(other):
                a = piv.get(k, 0.0)
                b = other.get(k, 0.0)
                piv[k] = c * a + s * b
                other[k] = -s * a + c * b
                col_rows[k].add(j)
                col_rows[k].add(i)
            _discard(i, other, j)
            applied += 1
            if P is not None:
                pj, pi = P[j].copy(), P[i].copy()
                P[j] = c * pj + s * pi
                P[i] = -s * pj + c * pi
            if log is not None:
                log.append(GivensRotation(j, i, c, s))

            for row_id, row in ((j, piv), (i, other)):
                for k in [k for k in row if k > j]:
                    v = row[k]
                    if v == 0.0:
                        _discard(row_id, row, k)
                    elif abs(v) < cutoff[k] or (
                        allowed is not None and row_id == j and (j, k) not in allowed
                    ):
                        _discard(row_id, row, k)
                        dropped += 1

        d = piv.get(j, 0.0)
        if d < 0.0:
            for k in piv:
                piv[k] = -piv[k]
            if P is not None:
                P[j] = -P[j]
            d = -d
        if not d >= PIVOT_UNDERFLOW:
            raise RankError(j, d)
        # entries left of the pivot cannot survive; the pivot row is final now
        col_rows[j].clear()

    entries = [(j, k, v) for j in range(n) for k, v in rows[j].items() if k >= j]
    R = from_triplets(n, n, entries)
    return UpperFactor(
        matrix=R,
        dropped_count=dropped,
        rotations_applied=applied,
        orthogonal=P.T if P is not None else None,
        rotations=tuple(log) if log is not None else None,
    )


def factorization_error(A: SparseMatrix, R: UpperFactor) -> float:
    """``||A^T A - R^T R||_1``."""
    RtR = gram(R.matrix)
    return norm1(add(gram(A), scale(RtR, -1.0)))


def residual_norm(A: SparseMatrix, R: UpperFactor) -> float:
    """``||A - S [R; 0]||_1``; needs a factor computed with ``track_q``."""
    if R.orthogonal is None:
        raise ParameterError("factor was computed without track_q")
    m, n = A.shape
    Rfull = np.zeros((m, n))
    Rfull[:n] = R.matrix.to_dense()
    return norm1(A.to_dense() - R.orthogonal @ Rfull)
