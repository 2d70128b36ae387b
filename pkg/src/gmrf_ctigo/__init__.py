"""Sparse incomplete Cholesky factors of GMRF precision matrices via
column-wise threshold incomplete Givens orthogonalization."""

from .cholesky import LowerFactor, cholesky, log_det, solve_lower, solve_upper_transpose
from .ctigo import (
    FixedPattern,
    GivensRotation,
    Threshold,
    UpperFactor,
    apply_rotation,
    compute_givens,
    ctigo_factorize,
    factorization_error,
)
from .errors import (
    DimensionError,
    LinalgError,
    NotPositiveDefiniteError,
    NumericalError,
    ParameterError,
    RankError,
    ShapeError,
    SingularError,
    SizeError,
)
from .gmrf import CanonicalGmrf, stack_factor
from .metrics import FactorizationReport, report, tolerance_sweep
from .sampling import RandomSource, sample_least_squares, sample_with_factor
from .sparse import SparseMatrix, from_triplets

__version__ = "0.1.0"
