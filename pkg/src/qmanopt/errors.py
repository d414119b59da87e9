"""Exception hierarchy shared by all modules."""


class QManoptError(Exception):
    """Base class for library errors."""


class DimensionError(QManoptError, ValueError):
    """Operands have incompatible shapes."""


class ConstraintError(QManoptError, ValueError):
    """A matrix violates a structural constraint (symmetry, orthonormality)."""


class ParameterError(QManoptError, ValueError):
    """An argument is outside its admissible range."""


class NumericalError(QManoptError, ArithmeticError):
    """A numerical routine failed or produced an invalid result."""


class RepresentationError(QManoptError, ValueError):
    """The object cannot be represented on the requested backend."""


class ParseError(QManoptError, ValueError):
    """Malformed input text."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SymmetryError(QManoptError, ValueError):
    """An operator does not conserve the requested quantum numbers."""


class StagnationError(QManoptError, RuntimeError):
    """An optimizer could not make progress.

    ``records`` holds the iteration log up to the failure and ``point`` the
    last accepted iterate, so callers can still write a partial report.
    """

    def __init__(self, message, records=None, point=None):
        super().__init__(message)
        self.records = list(records or [])
        self.point = point


class StageFailure(QManoptError, RuntimeError):
    """A block-diagonalization stage left a residual above threshold."""

    def __init__(self, message, residual, records=None):
        super().__init__(message)
        self.residual = residual
        self.records = list(records or [])


class ConfigError(ParameterError):
    """A run configuration is invalid; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.violations))
