"""Typed errors raised across the package.

Numerical failures (positivity loss, Newton divergence, CFL refusal) share the
``NumericalFailure`` base so the CLI can map them to a single exit code.
"""


class KrflowError(Exception):
    """Base class for all package errors."""


class NumericalFailure(KrflowError):
    """A computation left the regime where it is well defined."""


class PositivityLoss(NumericalFailure):
    """A metric left the Kähler cone (Q' <= 0 or Q'' <= 0 at some node)."""

    def __init__(self, message, node=None, s=None, t=None):
        super().__init__(message)
        self.node = node
        self.s = s
        self.t = t

    def __str__(self):
        base = super().__str__()
        where = []
        if self.node is not None:
            where.append(f"node={self.node}")
        if self.s is not None:
            where.append(f"s={self.s:.6g}")
        if self.t is not None:
            where.append(f"t={self.t:.6g}")
        return f"{base} ({', '.join(where)})" if where else base


class NewtonDivergence(NumericalFailure):
    """Damped Newton failed to reach the residual tolerance."""

    def __init__(self, message, t=None, residual=None):
        super().__init__(message)
        self.t = t
        self.residual = residual


class CflViolation(NumericalFailure):
    """An explicit step was requested above the stability limit."""


class StencilUnderflow(KrflowError, ValueError):
    """Too few grid nodes for the finite-difference stencils."""


class GridMismatch(KrflowError, ValueError):
    """Two tables live on different grids."""


class OutOfRange(KrflowError, ValueError):
    """An argument lies outside the grid or the admissible interval."""


class DomainError(KrflowError, ValueError):
    """A function was evaluated outside its domain."""


class BumpBoundViolation(KrflowError):
    """The transition function exceeds its slope bound."""


class CertificationFailure(KrflowError):
    """A claimed bound could not be certified on the grid."""


class RangeError(KrflowError, ValueError):
    """A ledger primitive or schedule argument is out of range."""


class HypothesisUnmet(KrflowError):
    """The hypothesis of a check fails on the supplied data."""

    def __init__(self, message, node=None, s=None):
        super().__init__(message)
        self.node = node
        self.s = s


class InsufficientSnapshots(KrflowError):
    """A check needs more (or more regularly spaced) snapshots."""


class WrongBackground(KrflowError):
    """A check was applied to a trajectory over the wrong background."""


class BandUnmet(KrflowError):
    """Initial data are not within the requested band of the reference."""


class ConfigError(KrflowError):
    """Invalid scenario configuration."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field

    def __str__(self):
        base = super().__str__()
        parts = []
        if self.field is not None:
            parts.append(f"field '{self.field}'")
        if self.line is not None:
            parts.append(f"line {self.line}")
        return f"{base} [{', '.join(parts)}]" if parts else base


class NonPositiveRadius(UserWarning):
    """The schedule radius became non-positive before the terminal time."""
