#!/usr/bin/python
"""Error types raised by the verification engine.

Numerical failures derive from :class:`GeometryError`. Anything a caller can fix
by passing different arguments derives from the shared
``agent_utilities`` parameter errors so the CLI maps them to exit status 2.
"""

from agent_utilities.core.exceptions import MissingParameterError, ParameterError


class GeometryError(Exception):
    """Base class for failures of the geometric computation itself."""


class DomainError(GeometryError):
    """An expression was evaluated at a singularity (division by zero, log of a
    non-positive number, square root of a negative number)."""


class SingularMetric(GeometryError):
    """The metric matrix is not positive definite at the requested point."""


class OutsideDomain(GeometryError):
    """A point lies outside the domain box of its chart."""


class DomainExit(GeometryError):
    """A geodesic left the domain box; ``path`` holds the truncated samples."""

    def __init__(self, message: str, path=None):
        super().__init__(message)
        self.path = path


class BoundaryGuardViolation(GeometryError):
    """A derivative was requested too close to a non-smooth tube interface."""


class EmptyInnerTube(GeometryError):
    """No sample point could be placed inside the inner disk of a tube."""


class InvariantViolation(GeometryError):
    """A manifold violates its own type invariants at a probe point."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class ArityError(ParameterError):
    """A point has the wrong number of coordinates for its chart."""


class ExpressionSyntaxError(ParameterError):
    """Expression text could not be parsed."""


class NotOrthonormal(ParameterError):
    """Vectors passed as an orthonormal family are not orthonormal."""


class BadCase(ParameterError):
    """A closed-form case number outside 1..8."""


class ManifestError(ParameterError):
    """A manifest is missing, malformed, or names an unknown manifold."""


class UnknownSuite(ParameterError):
    """A suite id that the engine does not provide."""


class MissingBaseACS(MissingParameterError):
    """An operation needs an almost complex structure the manifold lacks."""
