"""Exception hierarchy for curveflow.

Every error raised by the library derives from :class:`CurveFlowError`, so
callers (the simulation driver, the CLI) can distinguish "this computation is
geometrically or numerically impossible" from programming errors.
"""


class CurveFlowError(Exception):
    """Base class for all curveflow errors."""


class GeometryError(CurveFlowError):
    """A geometric quantity cannot be computed on the given vertices."""


class DegenerateEdge(GeometryError):
    """Two consecutive vertices (nearly) coincide; an edge length underflows."""


class DegenerateStencil(GeometryError):
    """X_{i+1} ~ X_{i-1}: the central-difference denominator underflows."""


class CuspAtVertex(GeometryError):
    """Adjacent edges are anti-parallel; the vertex tangent is undefined."""


class LengthMismatch(CurveFlowError):
    """Arrays passed to an inner product have different lengths."""


class SingularGram(CurveFlowError):
    """The (dL, dA) Gram matrix is numerically singular (dL parallel to dA)."""


class SolverError(CurveFlowError):
    """Base class for nonlinear/linear solver failures."""


class SingularMatrix(SolverError):
    """LU factorization hit a pivot below the breakdown threshold."""


class SingularJacobian(SolverError):
    """The finite-difference Jacobian is singular at the current iterate."""


class NonFiniteResidual(SolverError):
    """The residual function returned NaN or Inf at an accepted point."""


class SolverFailure(SolverError):
    """Newton iteration exhausted its budget without converging."""


class ConfigError(CurveFlowError):
    """Base class for configuration and input-file problems."""


class BadSpec(ConfigError):
    """A curve specification is invalid (too few vertices, bad dimensions)."""


class ParseError(ConfigError):
    """A config or curve file could not be parsed."""


class ValidationError(ConfigError):
    """A parsed config violates an invariant; the message names the field."""


class IoError(CurveFlowError):
    """An output file could not be written."""
