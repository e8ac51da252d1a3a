"""Intersection operations: representing cycles and triple counts."""

from .curves import Crossing, NonTransverse, crossings, separatrices, winding
from .represent import RepresentingCycle, densify, represent_T_class
from .triple import DimensionMismatch, TripleCount, TripleIntersectionProblem, triple_count, unstable_loop

__all__ = [
    "Crossing",
    "DimensionMismatch",
    "NonTransverse",
    "RepresentingCycle",
    "TripleCount",
    "TripleIntersectionProblem",
    "crossings",
    "densify",
    "represent_T_class",
    "separatrices",
    "triple_count",
    "unstable_loop",
    "winding",
]
