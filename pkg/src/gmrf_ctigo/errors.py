"""Exception hierarchy shared by every module in the package."""


class LinalgError(Exception):
    """Base class for all library errors."""


class DimensionError(LinalgError, ValueError):
    """Index out of range or operand shapes that do not agree."""


class ShapeError(LinalgError, ValueError):
    """Matrix lacks a required structural property (square, symmetric, ...)."""


class SizeError(LinalgError, ValueError):
    """Dense operation requested above the configured size limit."""


class ParameterError(LinalgError, ValueError):
    """Model parameter outside its admissible range."""


class NumericalError(LinalgError, ArithmeticError):
    """Base class for failures discovered while computing."""


class SingularError(NumericalError):
    """Triangular or dense solve hit a zero pivot."""


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, column, pivot=None):
        self.column = column
        self.pivot = pivot
        msg = f"matrix is not positive definite: non-positive pivot at column {column}"
        if pivot is not None:
            msg += f" (value {float(pivot)!r})"
        super().__init__(msg)


class RankError(NumericalError):
    def __init__(self, column, pivot=None):
        self.column = column
        self.pivot = pivot
        super().__init__(f"matrix is rank deficient: pivot underflow at column {column}")
