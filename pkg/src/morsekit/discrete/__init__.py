"""Exact combinatorial Morse theory on simplicial complexes."""

from .gradient import (
    AcyclicityViolated,
    DiscreteVectorField,
    HomologyMismatch,
    VPath,
    discrete_morse_complex,
    greedy_discrete_gradient,
    random_discrete_gradient,
    v_paths,
)
from .simplicial import (
    DuplicateFacet,
    InvalidVertex,
    SimplicialComplex,
    build_complex,
    corpus,
    full_simplex,
    parse_facets,
    read_facets,
    rp2_6,
    simplex_label,
    sphere_boundary,
    torus7,
)

__all__ = [
    "AcyclicityViolated",
    "DiscreteVectorField",
    "DuplicateFacet",
    "HomologyMismatch",
    "InvalidVertex",
    "SimplicialComplex",
    "VPath",
    "build_complex",
    "corpus",
    "discrete_morse_complex",
    "full_simplex",
    "greedy_discrete_gradient",
    "parse_facets",
    "random_discrete_gradient",
    "read_facets",
    "rp2_6",
    "simplex_label",
    "sphere_boundary",
    "torus7",
    "v_paths",
]
