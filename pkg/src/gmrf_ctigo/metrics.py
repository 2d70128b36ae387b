"""Error and sparsity diagnostics for exact versus incomplete factors."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import sparse as sps
from .cholesky import LowerFactor, cholesky
from .ctigo import Threshold, UpperFactor, ctigo_factorize
from .errors import DimensionError, ParameterError
from .gmrf import stack_factor

CSV_HEADER = ("tolerance", "nnz_q", "nnz_l", "nnz_r", "fill_in", "err_prec_1norm", "err_cov_1norm", "wall_ms")
TAU_GRID_DEFAULT = (0.01, 0.001, 0.0001, 0.00001, 0.000001, 0.0)


@dataclass(frozen=True)
class FactorizationReport:
    tolerance: float
    nnz_Q: int
    nnz_L: int
    nnz_R: int
    fill_in: int
    error_precision_norm1: float
    error_covariance_norm1: Optional[float]
    wall_time_ms: float
    dropped_count: int = 0

    def row(self) -> tuple:
        return (
            self.tolerance, self.nnz_Q, self.nnz_L, self.nnz_R, self.fill_in,
            self.error_precision_norm1, self.error_covariance_norm1, self.wall_time_ms,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def report(
    Q: sps.SparseMatrix,
    L: LowerFactor,
    R: UpperFactor,
    tolerance: float,
    dense_limit: int = sps.DENSE_LIMIT,
    wall_time_ms: float = 0.0,
) -> FactorizationReport:
    """Compare ``Q`` with ``R^T R``; covariance error only up to ``dense_limit``."""
    n = Q.nrows
    if L.n != n or R.n != n:
        raise DimensionError("Q, L and R must share the same order")
    Qt = sps.gram(R.matrix)
    err_prec = sps.norm1(sps.add(Q, sps.scale(Qt, -1.0)))
    err_cov = None
    if n <= dense_limit:
        err_cov = sps.norm1(sps.dense_inverse(Q, dense_limit) - sps.dense_inverse(Qt, dense_limit))
    return FactorizationReport(
        tolerance=float(tolerance),
        nnz_Q=Q.nnz,
        nnz_L=L.nnz,
        nnz_R=R.nnz,
        fill_in=L.nnz - sps.lower_triangle(Q).nnz,
        error_precision_norm1=err_prec,
        error_covariance_norm1=err_cov,
        wall_time_ms=wall_time_ms,
        dropped_count=R.dropped_count,
    )


def tolerance_sweep(
    Q1: sps.SparseMatrix,
    taus=TAU_GRID_DEFAULT,
    root: Optional[sps.SparseMatrix] = None,
    dense_limit: int = sps.DENSE_LIMIT,
) -> list[FactorizationReport]:
    """One report per tolerance for the stacked matrix of ``Q1 + W^T W``.

    ``root`` is ``W``; it defaults to the identity (unit-precision data on
    every node). The stacked matrix and exact factor are built once.
    """
    taus = [float(t) for t in taus]
    if not taus:
        raise ParameterError("need at least one tolerance")
    if any(t < 0 for t in taus):
        raise ParameterError("tolerances must be non-negative")
    n = Q1.nrows
    if root is None:
        root = sps.identity(n)
    A = stack_factor(cholesky(Q1), root)
    Q = sps.add(Q1, sps.gram(root))
    L = cholesky(Q)
    out = []
    for tau in taus:
        t0 = time.perf_counter()
        R = ctigo_factorize(A, Threshold(tau))
        ms = (time.perf_counter() - t0) * 1e3
        out.append(report(Q, L, R, tau, dense_limit, ms))
    return out


def pattern_image(M: sps.SparseMatrix) -> np.ndarray:
    """Boolean bitmap with a pixel set for every stored entry."""
    img = np.zeros(M.shape, dtype=bool)
    for j in range(M.ncols):
        rows, _ = M.column(j)
        img[rows, j] = True
    return img


def _sci(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.2E}"


def format_table(reports, title: str = "") -> str:
    """Two-column tolerance/error table, largest tolerance first, plus sparsity columns."""
    lines = []
    if title:
        lines.append(title)
    head = f"{'tolerance':>10} | {'error':>9} | {'cov error':>9} | {'nnz(R)':>7} | {'nnz(L)':>7}"
    lines += [head, "-" * len(head)]
    for r in reports:
        tol = "0" if r.tolerance == 0 else f"{r.tolerance:g}"
        lines.append(
            f"{tol:>10} | {_sci(r.error_precision_norm1):>9} | {_sci(r.error_covariance_norm1):>9} | "
            f"{r.nnz_R:>7} | {r.nnz_L:>7}"
        )
    return "\n".join(lines) + "\n"
