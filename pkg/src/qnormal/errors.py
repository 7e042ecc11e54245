"""Exception hierarchy.

``NumericalError`` subclasses signal that the mathematics failed (the CLI
maps them to exit code 3); ``InputError`` subclasses signal bad arguments
or configuration (exit code 2).
"""


class QNormalError(Exception):
    """Base class for all package errors."""


class InputError(QNormalError, ValueError):
    pass


class NumericalError(QNormalError, ArithmeticError):
    pass


class InvalidMatrix(InputError):
    """Matrix is not square, not 2-D, or has non-finite entries."""


class DimensionMismatch(InputError):
    pass


class ZeroVector(NumericalError):
    """A state has (numerically) vanishing norm under the chosen metric."""


class ProjectionZero(ZeroVector):
    """A state has no component in the dominant eigenspace."""


class Singular(NumericalError):
    """LU pivot fell below the singularity threshold."""


class NonConvergence(NumericalError):
    """The QR iteration hit its sweep cap."""


class NonDiagonalizable(NumericalError):
    """Eigenvector matrix is (nearly) singular: defective input."""


class StepSizeTooLarge(NumericalError):
    """Q-norm drift of the integrator exceeded the abort threshold."""


class GridTooCoarse(InputError):
    """Too few time samples for a finite-difference check."""


class SpecInfeasible(InputError):
    """A random-instance request cannot be satisfied."""


class ParseError(InputError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ValidationError(InputError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
