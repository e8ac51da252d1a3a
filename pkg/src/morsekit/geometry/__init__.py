"""Scalar fields and implicit manifolds."""

from .expr import ExprSyntaxError, ScalarField, UndefinedAtPoint, eval_jet, parse
from .manifold import (
    TOL_CONSTRAINT,
    AmbientPoint,
    ImplicitManifold,
    NoConvergence,
    RankDeficient,
    catalog_manifold,
    sphere,
    torus,
)

__all__ = [
    "TOL_CONSTRAINT",
    "AmbientPoint",
    "ExprSyntaxError",
    "ImplicitManifold",
    "NoConvergence",
    "RankDeficient",
    "ScalarField",
    "UndefinedAtPoint",
    "catalog_manifold",
    "eval_jet",
    "parse",
    "sphere",
    "torus",
]
