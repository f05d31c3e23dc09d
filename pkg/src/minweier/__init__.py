"""Minimal surfaces from holomorphic Weierstrass data in canonical principal parameters."""
from ._backend import BACKEND
from .errors import (
    ExprSyntaxError, GaussFieldError, MeshError, MinWeierError, NonFiniteError,
    PoleError, QuadratureError, StencilError,
)
from .expr import Expr, differentiate, evaluate, parse_expr, to_string

__version__ = "0.1.0"
