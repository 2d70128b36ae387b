"""Exact sparse Cholesky factorization ``Q = L L^T`` and triangular solves.

The factorization is the classic up-looking algorithm: row ``k`` of ``L`` is
obtained from a sparse triangular solve whose nonzero pattern is the reach of
column ``k`` of ``Q`` in the elimination tree. No fill-reducing ordering is
applied, so the factor pattern reflects the node order of ``Q`` as given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefiniteError, ShapeError
from .sparse import SparseMatrix, compress, is_symmetric, lower_triangle, solve_triangular


@dataclass(frozen=True)
class LowerFactor:
    matrix: SparseMatrix
    logdet_half: float

    @property
    def n(self) -> int:
        return self.matrix.nrows

    @property
    def nnz(self) -> int:
        return self.matrix.nnz


def etree(Q: SparseMatrix) -> np.ndarray:
    """Elimination tree of a symmetric matrix, using its upper triangle."""
    n = Q.ncols
    parent = np.full(n, -1, np.int64)
    ancestor = np.full(n, -1, np.int64)
    for k in range(n):
        rows, _ = Q.column(k)
        for i in rows:
            i = int(i)
            # path compression towards k
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                    break
                i = nxt
    return parent


def _ereach(Q: SparseMatrix, k: int, parent: np.ndarray, mark: np.ndarray) -> list[int]:
    """Nonzero pattern of row ``k`` of L, in topological order."""
    mark[k] = k
    out: list[int] = []
    rows, _ = Q.column(k)
    for i in rows:
        i = int(i)
        if i >= k:
            continue
        path = []
        while mark[i] != k:
            path.append(i)
            mark[i] = k
            i = int(parent[i])
        out[0:0] = path
    return out


def cholesky(Q: SparseMatrix) -> LowerFactor:
    """Lower-triangular ``L`` with positive diagonal such that ``L L^T = Q``.

    Raises :class:`ShapeError` when ``Q`` is not square and symmetric to a
    relative tolerance of 1e-12, and :class:`NotPositiveDefiniteError` naming
    the first column whose pivot is not positive.
    """
    if Q.nrows != Q.ncols:
        raise ShapeError(f"cholesky needs a square matrix, got {Q.shape}")
    if not is_symmetric(Q, rtol=1e-12):
        raise ShapeError("cholesky needs a symmetric matrix")
    n = Q.ncols
    parent = etree(Q)
    mark = np.full(n, -1, np.int64)
    x = np.zeros(n)
    diag = np.zeros(n)
    cols_rows: list[list[int]] = [[] for _ in range(n)]
    cols_vals: list[list[float]] = [[] for _ in range(n)]

    for k in range(n):
        pattern = _ereach(Q, k, parent, mark)
        rows, vals = Q.column(k)
        d = 0.0
        for i, v in zip(rows, vals):
            if i < k:
                x[i] = v
            elif i == k:
                d = float(v)
        for i in pattern:
            lki = x[i] / diag[i]
            x[i] = 0.0
            for j, lji in zip(cols_rows[i], cols_vals[i]):
                x[j] -= lji * lki
            d -= lki * lki
            cols_rows[i].append(k)
            cols_vals[i].append(lki)
        if not d > 0.0:
            raise NotPositiveDefiniteError(k, d)
        diag[k] = math.sqrt(d)

    col_ptr = np.zeros(n + 1, np.int64)
    row_idx, values = [], []
    for j in range(n):
        row_idx.append(j)
        values.append(diag[j])
        row_idx.extend(cols_rows[j])
        values.extend(cols_vals[j])
        col_ptr[j + 1] = len(values)
    L = SparseMatrix(n, n, col_ptr, row_idx, values)
    # exact cancellation can leave stored zeros off the diagonal
    L = compress(L)
    return LowerFactor(L, float(np.log(diag).sum()))


def as_lower_factor(L: SparseMatrix) -> LowerFactor:
    """Wrap an existing lower-triangular matrix with positive diagonal."""
    if L.nrows != L.ncols:
        raise ShapeError("lower factor must be square")
    if lower_triangle(L).nnz != L.nnz:
        raise ShapeError("matrix has entries above the diagonal")
    d = L.diagonal()
    if np.any(d <= 0):
        raise ShapeError("lower factor needs a positive diagonal")
    return LowerFactor(L, float(np.log(d).sum()))


def solve_lower(L: LowerFactor, b) -> np.ndarray:
    """Forward substitution ``L x = b``."""
    return solve_triangular(L.matrix, b, lower=True)


def solve_upper_transpose(L: LowerFactor, z) -> np.ndarray:
    """Back substitution ``L^T x = z``."""
    return solve_triangular(L.matrix, z, lower=True, transpose=True)


def solve(L: LowerFactor, b) -> np.ndarray:
    """Solve ``L L^T x = b``."""
    return solve_upper_transpose(L, solve_lower(L, b))


def log_det(L: LowerFactor) -> float:
    """``log det Q`` for ``Q = L L^T``."""
    return 2.0 * L.logdet_half


def fill_in(Q: SparseMatrix, L: LowerFactor) -> int:
    return L.nnz - lower_triangle(Q).nnz
