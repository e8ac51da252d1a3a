"""Critical points and gradient flows."""

from .audit import MorseSmaleReport, morse_smale_audit
from .config import FlowConfig
from .critical import CriticalPoint, DegenerateCritical, classify, find_critical_points, riemannian_gradient
from .flow import Pass, StepSizeUnderflow, Trajectory, integrate_flow

__all__ = [
    "CriticalPoint",
    "DegenerateCritical",
    "FlowConfig",
    "MorseSmaleReport",
    "Pass",
    "StepSizeUnderflow",
    "Trajectory",
    "classify",
    "find_critical_points",
    "integrate_flow",
    "morse_smale_audit",
    "riemannian_gradient",
]
