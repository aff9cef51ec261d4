"""Exception types shared across the package.

The CLI maps each class to a process exit code, so keep the hierarchy flat.
"""


class TwistorLabError(Exception):
    """Base class for all errors raised by twistorlab."""


class ParseError(TwistorLabError, ValueError):
    """Syntax error in an expression or metric source.

    ``position`` is the 0-based character offset into the offending text.
    """

    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class MetricError(TwistorLabError, ValueError):
    """A metric is malformed: asymmetric, singular or not positive-definite."""


class DomainError(TwistorLabError, ValueError):
    """A point lies outside a chart domain or an evaluation went non-finite."""


class FrameError(TwistorLabError, ValueError):
    """Frame or form fails an orthonormality / self-duality / norm precondition."""


class HomologyError(TwistorLabError, ValueError):
    """Homology data violates an internal consistency condition."""


class LatticeError(TwistorLabError, ValueError):
    """Intersection lattice data is invalid (non-unimodular, bad w2, ...)."""


class BudgetExceededError(TwistorLabError, RuntimeError):
    """An enumeration would exceed its work budget."""
