"""Exception types raised across the package."""


class MinWeierError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(MinWeierError, ValueError):
    """Malformed expression text. ``column`` is 1-based."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


class PoleError(MinWeierError, ArithmeticError):
    """A denominator fell below the pole floor during evaluation."""


class NonFiniteError(MinWeierError, ArithmeticError):
    """Evaluation overflowed to inf or nan."""


class QuadratureError(MinWeierError):
    """Adaptive quadrature failed (budget exhausted or path left the admissible set)."""


class StencilError(MinWeierError):
    """A finite-difference stencil touches a point where checks are undefined."""


class GaussFieldError(MinWeierError, ValueError):
    """Malformed Gauss-map field or CSV input."""


class MeshError(MinWeierError):
    """Mesh construction or serialization failure."""
