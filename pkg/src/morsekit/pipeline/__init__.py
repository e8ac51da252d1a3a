"""Scenes, orchestration, caching, reports and plots."""

from .plots import NoGeometry, PlotOptions, emit_plots, read_polylines_csv
from .run import Cache, CorpusReport, RunReport, TaskError, canonical_json, run_corpus, run_pipeline, write_report
from .scene import (
    SceneError,
    SceneSpec,
    SceneSyntaxError,
    UnknownManifold,
    UnresolvedReference,
    bundled_scene,
    bundled_scene_names,
    parse_scene,
    parse_scene_text,
    resolve_tasks,
)

__all__ = [
    "Cache",
    "CorpusReport",
    "NoGeometry",
    "PlotOptions",
    "RunReport",
    "SceneError",
    "SceneSpec",
    "SceneSyntaxError",
    "TaskError",
    "UnknownManifold",
    "UnresolvedReference",
    "bundled_scene",
    "bundled_scene_names",
    "canonical_json",
    "emit_plots",
    "parse_scene",
    "parse_scene_text",
    "read_polylines_csv",
    "resolve_tasks",
    "run_corpus",
    "run_pipeline",
    "write_report",
]
