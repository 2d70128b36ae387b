"""Compressed sparse column matrices and the kernels built on them.

``SparseMatrix`` is an immutable CSC container. Arithmetic (sum, product,
transpose) is delegated to :mod:`scipy.sparse` and the result is brought back
into canonical form: sorted row indices, no duplicates, no stored zeros.
Dense vectors and matrices are plain :class:`numpy.ndarray` objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ShapeError, SingularError, SizeError

DENSE_LIMIT = 4096


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    nrows: int
    ncols: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col_ptr", _frozen(self.col_ptr, np.int64))
        object.__setattr__(self, "row_idx", _frozen(self.row_idx, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.nrows < 0 or self.ncols < 0:
            raise DimensionError("negative dimension")
        if len(self.col_ptr) != self.ncols + 1 or self.col_ptr[0] != 0:
            raise DimensionError("col_ptr must have length ncols+1 and start at 0")
        if self.col_ptr[-1] != len(self.values) or len(self.values) != len(self.row_idx):
            raise DimensionError("col_ptr[-1], len(values) and len(row_idx) disagree")
        if np.any(np.diff(self.col_ptr) < 0):
            raise DimensionError("col_ptr must be non-decreasing")
        if len(self.row_idx) and (self.row_idx.min() < 0 or self.row_idx.max() >= self.nrows):
            raise DimensionError("row index out of range")
        for j in range(self.ncols):
            rows = self.row_idx[self.col_ptr[j]:self.col_ptr[j + 1]]
            if len(rows) > 1 and np.any(np.diff(rows) <= 0):
                raise DimensionError(f"row indices of column {j} not strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite stored value")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.values)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values stored in column ``j``."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def get(self, i: int, j: int) -> float:
        rows, vals = self.column(j)
        k = np.searchsorted(rows, i)
        if k < len(rows) and rows[k] == i:
            return float(vals[k])
        return 0.0

    def diagonal(self) -> np.ndarray:
        return np.array([self.get(i, i) for i in range(min(self.shape))])

    def triplets(self) -> Iterable[tuple[int, int, float]]:
        for j in range(self.ncols):
            rows, vals = self.column(j)
            for i, v in zip(rows, vals):
                yield int(i), j, float(v)

    def pattern(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.triplets()}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for j in range(self.ncols):
            rows, vals = self.column(j)
            out[rows, j] = vals
        return out

    def to_scipy(self) -> sp.csc_matrix:
        return sp.csc_matrix(
            (np.array(self.values), np.array(self.row_idx), np.array(self.col_ptr)),
            shape=self.shape,
        )

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return matmul(self, other)
        return matvec(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    @property
    def T(self) -> SparseMatrix:
        return transpose(self)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def from_scipy(m) -> SparseMatrix:
    """Canonical ``SparseMatrix`` from any scipy sparse matrix or array."""
    csc = sp.csc_matrix(m, dtype=np.float64, copy=True)
    csc.sum_duplicates()
    csc.eliminate_zeros()
    csc.sort_indices()
    return SparseMatrix(csc.shape[0], csc.shape[1], csc.indptr, csc.indices, csc.data)


def compress(A: SparseMatrix) -> SparseMatrix:
    """Remove stored exact zeros."""
    keep = A.values != 0.0
    if keep.all():
        return A
    col_ptr = np.concatenate([[0], np.cumsum(keep)])[A.col_ptr]
    return SparseMatrix(A.nrows, A.ncols, col_ptr, A.row_idx[keep], A.values[keep])


def from_triplets(nrows: int, ncols: int, entries) -> SparseMatrix:
    """Build from ``(row, col, value)`` triplets; duplicates are summed."""
    entries = list(entries)
    if entries:
        rows, cols, vals = (np.asarray(x) for x in zip(*entries))
    else:
        rows = cols = np.zeros(0, np.int64)
        vals = np.zeros(0)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    if len(rows) and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
        raise DimensionError(f"triplet index out of range for {nrows}x{ncols} matrix")
    return from_scipy(sp.coo_matrix((vals.astype(np.float64), (rows, cols)), shape=(nrows, ncols)))


def from_dense(M) -> SparseMatrix:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    return from_scipy(sp.csc_matrix(M))


def zeros(nrows: int, ncols: int) -> SparseMatrix:
    return SparseMatrix(nrows, ncols, np.zeros(ncols + 1, np.int64), [], [])


def identity(n: int) -> SparseMatrix:
    return SparseMatrix(n, n, np.arange(n + 1), np.arange(n), np.ones(n))


def diag(d) -> SparseMatrix:
    d = np.asarray(d, dtype=np.float64)
    return from_scipy(sp.diags(d, format="csc"))


def transpose(A: SparseMatrix) -> SparseMatrix:
    return from_scipy(A.to_scipy().T)


def scale(A: SparseMatrix, alpha: float) -> SparseMatrix:
    return compress(SparseMatrix(A.nrows, A.ncols, A.col_ptr, A.row_idx, A.values * alpha))


def add(A: SparseMatrix, B: SparseMatrix) -> SparseMatrix:
    if A.shape != B.shape:
        raise DimensionError(f"cannot add {A.shape} and {B.shape}")
    return from_scipy(A.to_scipy() + B.to_scipy())


def matmul(A: SparseMatrix, B: SparseMatrix) -> SparseMatrix:
    if A.ncols != B.nrows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return from_scipy(A.to_scipy() @ B.to_scipy())


def matvec(A: SparseMatrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.ncols:
        raise DimensionError(f"cannot multiply {A.shape} by vector of length {x.shape[0]}")
    return A.to_scipy() @ x


def vstack(blocks) -> SparseMatrix:
    blocks = list(blocks)
    if len({b.ncols for b in blocks}) != 1:
        raise DimensionError("vstack blocks must have equal column counts")
    return from_scipy(sp.vstack([b.to_scipy() for b in blocks]))


def lower_triangle(A: SparseMatrix, k: int = 0) -> SparseMatrix:
    return from_scipy(sp.tril(A.to_scipy(), k=k))


def upper_triangle(A: SparseMatrix, k: int = 0) -> SparseMatrix:
    return from_scipy(sp.triu(A.to_scipy(), k=k))


def lower_bandwidth(A: SparseMatrix) -> int:
    """Largest ``i - j`` over stored entries (0 for diagonal matrices)."""
    best = 0
    for j in range(A.ncols):
        rows, _ = A.column(j)
        if len(rows):
            best = max(best, int(rows[-1]) - j)
    return best


def upper_bandwidth(A: SparseMatrix) -> int:
    return lower_bandwidth(transpose(A))


def is_symmetric(A: SparseMatrix, rtol: float = 1e-12) -> bool:
    if A.nrows != A.ncols:
        return False
    if A.nnz == 0:
        return True
    diff = add(A, scale(transpose(A), -1.0))
    return diff.nnz == 0 or np.abs(diff.values).max() <= rtol * np.abs(A.values).max()


def norm1(A) -> float:
    """Maximum absolute column sum of a sparse or dense matrix."""
    if isinstance(A, SparseMatrix):
        if A.ncols == 0 or A.nnz == 0:
            return 0.0
        sums = np.zeros(A.ncols)
        cols = np.repeat(np.arange(A.ncols), np.diff(A.col_ptr))
        np.add.at(sums, cols, np.abs(A.values))
        return float(sums.max())
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.size == 0:
        return 0.0
    return float(np.abs(A).sum(axis=0).max())


def norm_inf(A) -> float:
    """Maximum absolute row sum."""
    if isinstance(A, SparseMatrix):
        return norm1(transpose(A))
    return norm1(np.atleast_2d(np.asarray(A)).T)


def dense_inverse(A: SparseMatrix, limit: int = DENSE_LIMIT) -> np.ndarray:
    if A.nrows != A.ncols:
        raise ShapeError(f"cannot invert non-square {A.shape} matrix")
    if A.nrows > limit:
        raise SizeError(f"dense inverse of order {A.nrows} exceeds limit {limit}")
    try:
        inv = np.linalg.inv(A.to_dense())
    except np.linalg.LinAlgError as exc:
        raise SingularError(str(exc)) from exc
    if not np.all(np.isfinite(inv)):
        raise SingularError("inverse has non-finite entries")
    return inv


def _diag_positions(M: SparseMatrix, lower: bool) -> np.ndarray:
    n = M.ncols
    pos = np.empty(n, np.int64)
    for j in range(n):
        lo, hi = M.col_ptr[j], M.col_ptr[j + 1]
        k = lo if lower else hi - 1
        if hi == lo or M.row_idx[k] != j or M.values[k] == 0.0:
            raise SingularError(f"zero diagonal at column {j}")
        pos[j] = k
    return pos


def solve_triangular(M: SparseMatrix, b, lower: bool, transpose: bool = False) -> np.ndarray:
    """Solve ``M x = b`` (or ``M^T x = b``) for triangular ``M`` stored in CSC.

    ``b`` may be a vector or an ``n x k`` block of right-hand sides. Entries on
    the wrong side of the diagonal are assumed absent.
    """
    if M.nrows != M.ncols:
        raise ShapeError("triangular solve needs a square matrix")
    x = np.array(b, dtype=np.float64, copy=True)
    if x.shape[0] != M.nrows:
        raise DimensionError(f"rhs length {x.shape[0]} does not match order {M.nrows}")
    n = M.ncols
    dpos = _diag_positions(M, lower)
    ptr, idx, val = M.col_ptr, M.row_idx, M.values

    if lower and not transpose:
        for j in range(n):
            x[j] /= val[dpos[j]]
            lo, hi = dpos[j] + 1, ptr[j + 1]
            if hi > lo:
                x[idx[lo:hi]] -= np.multiply.outer(val[lo:hi], x[j]) if x.ndim > 1 else val[lo:hi] * x[j]
    elif lower and transpose:
        for j in range(n - 1, -1, -1):
            lo, hi = dpos[j] + 1, ptr[j + 1]
            if hi > lo:
                x[j] -= val[lo:hi] @ x[idx[lo:hi]]
            x[j] /= val[dpos[j]]
    elif not transpose:
        for j in range(n - 1, -1, -1):
            x[j] /= val[dpos[j]]
            lo, hi = ptr[j], dpos[j]
            if hi > lo:
                x[idx[lo:hi]] -= np.multiply.outer(val[lo:hi], x[j]) if x.ndim > 1 else val[lo:hi] * x[j]
    else:
        for j in range(n):
            lo, hi = ptr[j], dpos[j]
            if hi > lo:
                x[j] -= val[lo:hi] @ x[idx[lo:hi]]
            x[j] /= val[dpos[j]]
    return x


def gram(A: SparseMatrix) -> SparseMatrix:
    """``A^T A``."""
    return matmul(transpose(A), A)
