"""Loop-space coefficients and extended Morse complexes."""

from .classes import (
    CoefficientClass,
    NotConsecutive,
    OpenLoop,
    base_change_factors,
    coefficient_class_0d,
    coefficient_class_1d,
    intermediate_witness,
    loop_class_0d,
    rebase_class,
    relative_class_1d,
    torus_winding,
)
from .extended import (
    ExtendedComplexModel,
    LeibnizViolation,
    assemble_extended_complex,
    path_loop_pages,
    sphere_extended_model,
)
from .models import (
    GroupRingModel,
    ModelError,
    PontryaginModel,
    forced_loop_dimensions,
    sphere_loop_model,
    verify_sphere_model,
)

__all__ = [
    "CoefficientClass",
    "ExtendedComplexModel",
    "GroupRingModel",
    "LeibnizViolation",
    "ModelError",
    "NotConsecutive",
    "OpenLoop",
    "PontryaginModel",
    "assemble_extended_complex",
    "base_change_factors",
    "coefficient_class_0d",
    "coefficient_class_1d",
    "forced_loop_dimensions",
    "intermediate_witness",
    "loop_class_0d",
    "path_loop_pages",
    "rebase_class",
    "relative_class_1d",
    "sphere_extended_model",
    "sphere_loop_model",
    "torus_winding",
    "verify_sphere_model",
]
