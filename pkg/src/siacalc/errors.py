"""Exception hierarchy shared by every module."""


class SIAError(Exception):
    """Base class for all errors raised by siacalc."""


class DimensionError(SIAError, ValueError):
    """Generator counts, cube dimensions or form degrees do not line up."""


class NonInvertibleError(SIAError, ZeroDivisionError):
    """Attempt to invert an element whose standard part is zero."""


class DomainError(SIAError, ValueError):
    """A smooth primitive was applied outside its real domain."""


class ImpureInfinitesimalError(SIAError, ArithmeticError):
    """An element expected to be a pure multiple of e1...en carries stray terms."""


class ExprSyntaxError(SIAError, ValueError):
    """Malformed expression source. ``offset`` is a byte offset into the UTF-8 text."""

    def __init__(self, message, offset=None, source=None):
        self.offset = offset
        self.source = source
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class UnboundVariableError(SIAError, NameError):
    """Evaluation hit a variable with no binding."""


class ConvergenceError(SIAError, RuntimeError):
    """An iterative method or adaptive quadrature ran out of budget."""


class SolverError(SIAError, RuntimeError):
    """A Newton step could not be formed (singular or ill-conditioned system)."""


class DegenerateConstraintError(SolverError):
    """The constraint gradient vanishes, so its level set has no tangent space."""


class DegenerateParametrizationError(SIAError, ValueError):
    """A surface parametrization has a vanishing normal at a quadrature node."""
