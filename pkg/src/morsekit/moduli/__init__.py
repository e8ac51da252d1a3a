"""Moduli spaces of flow lines on surfaces."""

from .chart import FlowContext, Shot, Transition, UnresolvedLimit, UnstableSphereChart, level_distance
from .compact import CompactifiedUnstable, StrataGap, Stratum, compactified_unstable
from .connecting import (
    Arc,
    BrokenTrajectory,
    ConnectingManifold0D,
    ConnectingManifold1D,
    InconsistentBoundary,
    ModuliSummary,
    Orbit,
    all_moduli,
    check_boundary,
    connecting_0d,
    connecting_1d,
    differential_matrix,
    expected_boundary,
    morse_complex,
)
from .loops import BasePath, LoopImage, chart_base_path, extract_loop, flow_base_path

__all__ = [
    "Arc",
    "BasePath",
    "BrokenTrajectory",
    "CompactifiedUnstable",
    "ConnectingManifold0D",
    "ConnectingManifold1D",
    "FlowContext",
    "InconsistentBoundary",
    "LoopImage",
    "ModuliSummary",
    "Orbit",
    "Shot",
    "StrataGap",
    "Stratum",
    "Transition",
    "UnresolvedLimit",
    "UnstableSphereChart",
    "all_moduli",
    "chart_base_path",
    "check_boundary",
    "compactified_unstable",
    "connecting_0d",
    "connecting_1d",
    "differential_matrix",
    "expected_boundary",
    "extract_loop",
    "flow_base_path",
    "level_distance",
    "morse_complex",
]
