"""Exact homological algebra over Z and Z/2."""

from .complex import (
    RINGS,
    DSquaredWitness,
    FreeChainComplex,
    HomologyResult,
    ShapeMismatch,
    homology,
    reduce_mod2,
    verify_d_squared,
)
from .linalg import GF2Span, columns_to_bits, gf2_kernel, gf2_rank, integer_rank, smith_normal_form
from .spectral import (
    FilteredComplex,
    FiltrationViolation,
    NotStabilized,
    SpectralSequencePages,
    compare_pages,
    spectral_sequence,
    truncate_table,
)

__all__ = [
    "RINGS",
    "DSquaredWitness",
    "FilteredComplex",
    "FiltrationViolation",
    "FreeChainComplex",
    "GF2Span",
    "HomologyResult",
    "NotStabilized",
    "ShapeMismatch",
    "SpectralSequencePages",
    "columns_to_bits",
    "compare_pages",
    "gf2_kernel",
    "gf2_rank",
    "homology",
    "integer_rank",
    "reduce_mod2",
    "smith_normal_form",
    "spectral_sequence",
    "truncate_table",
    "verify_d_squared",
]
