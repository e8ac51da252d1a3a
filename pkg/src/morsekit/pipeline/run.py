"""Orchestration: dependency-ordered task execution, content-addressed cache, reports."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from graphlib import TopologicalSorter
from pathlib import Path

from .. import __version__
from .scene import PREREQUISITES, SceneSpec, bundled_scene, bundled_scene_names, resolve_tasks
from .tasks import NUMERIC, TASK_FUNCS, Session

log = logging.getLogger(__name__)


class TaskError(RuntimeError):
    """A task failed; carries the task name and the scene location it was configured at."""

    def __init__(self, task: str, location: str, cause: BaseException):
        self.task = task
        self.location = location
        self.cause = cause
        super().__init__(f"{location}: task {task!r} failed: {type(cause).__name__}: {cause}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


@dataclass
class RunReport:
    scene: str
    scene_hash: str
    version: str
    tasks: dict  # task -> result
    timings: dict = field(default_factory=dict)  # task -> seconds (kept out of the JSON)
    cache_hits: dict = field(default_factory=dict)  # task -> bool (kept out of the JSON)
    appendix: dict | None = None

    @property
    def violations(self) -> list[str]:
        out = []
        for task, res in self.tasks.items():
            if task == "verify-all":
                continue
            for c in res.get("checks", []):
                if not c["ok"]:
                    out.append(f"{task}: {c['name']}: {c['detail']}")
        return out

    def to_dict(self) -> dict:
        d = {"scene": self.scene, "scene_hash": self.scene_hash, "version": self.version, "tasks": self.tasks}
        if self.appendix is not None:
            d["appendix"] = self.appendix
        return d

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def timings_json(self) -> str:
        return canonical_json({
            "scene": self.scene,
            "seconds": {k: round(v, 4) for k, v in self.timings.items()},
            "cache_hits": self.cache_hits,
        })


class Cache:
    """Task results stored as JSON under the hash of their inputs.

    Entries are written to a temporary file and renamed into place, so a
    concurrent reader sees either nothing or a complete entry.
    """

    def __init__(self, root):
        self.root = Path(root)

    def path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str):
        p = self.path(key)
        try:
            return json.loads(p.read_text())
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            log.warning("ignoring unreadable cache entry %s", p)
            return None

    def put(self, key: str, value) -> None:
        p = self.path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(canonical_json(value))
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def _closure(task: str) -> list[str]:
    out, stack = [], [task]
    while stack:
        t = stack.pop()
        for p in PREREQUISITES[t]:
            if p not in out:
                out.append(p)
                stack.append(p)
    return sorted(out)


def task_key(spec: SceneSpec, task: str, tasks: list) -> str:
    """Hash of everything a task result depends on."""
    deps = [t for t in tasks if t != "verify-all"] if task == "verify-all" else _closure(task)
    content = {
        "version": __version__,
        "task": task,
        "manifold": spec.manifold,
        "fields": dict(sorted(spec.fields.items())),
        "config": dict(sorted(spec.config.items())),
        "seed": spec.seed,
        "params": {t: spec.params.get(t, {}) for t in sorted(set(deps) | {task})},
        "deps": deps,
    }
    blob = json.dumps(content, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _normalize(result):
    """Round-trip through canonical JSON so fresh and cached results are identical objects."""
    return json.loads(canonical_json(result))


def run_pipeline(
    spec: SceneSpec,
    tasks: list | None = None,
    cache_dir=None,
    use_cache: bool = True,
    jobs: int = 1,
) -> RunReport:
    """Run ``tasks`` (default: the scene's list) with prerequisites, in dependency order.

    Tasks without a data dependency may run concurrently when ``jobs > 1``;
    those touching the shared flow contexts are serialized.
    """
    order = resolve_tasks(tasks if tasks is not None else spec.tasks)
    sess = Session(spec)
    cache = Cache(cache_dir) if (use_cache and cache_dir is not None) else None
    timings, hits = {}, {}

    graph = {t: [p for p in PREREQUISITES[t] if p in order] for t in order}
    if "verify-all" in graph:
        graph["verify-all"] = [t for t in order if t != "verify-all"]
    ts = TopologicalSorter(graph)
    ts.prepare()

    def execute(task):
        t0 = time.perf_counter()
        key = task_key(spec, task, order)
        cached = cache.get(key) if cache is not None else None
        if cached is not None:
            timings[task], hits[task] = time.perf_counter() - t0, True
            return task, cached
        try:
            if task in NUMERIC:
                with sess.numeric:
                    result = TASK_FUNCS[task](sess)
            else:
                result = TASK_FUNCS[task](sess)
        except Exception as exc:
            raise TaskError(task, spec.where(task if task in spec.params else None, None if task in spec.params else "tasks"), exc) from exc
        result = _normalize(result)
        if cache is not None:
            cache.put(key, result)
        timings[task], hits[task] = time.perf_counter() - t0, False
        return task, result

    if jobs <= 1:
        while ts.is_active():
            for task in ts.get_ready():
                _, sess.results[task] = execute(task)
                ts.done(task)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            pending = set()
            while ts.is_active():
                for task in ts.get_ready():
                    pending.add(pool.submit(execute, task))
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for fut in done:
                    task, result = fut.result()
                    sess.results[task] = result
                    ts.done(task)

    results = {t: sess.results[t] for t in order}
    return RunReport(spec.name, spec.content_hash(), __version__, results, timings, hits)


def write_report(report: RunReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = out / f"{report.scene}.report.json"
    p.write_text(report.to_json())
    (out / f"{report.scene}.timings.json").write_text(report.timings_json())
    return p


@dataclass
class CorpusReport:
    reports: dict  # scene name -> RunReport

    @property
    def violations(self) -> list[str]:
        return [f"{name}: {v}" for name, r in self.reports.items() for v in r.violations]

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "scenes": {name: r.to_dict() for name, r in self.reports.items()},
            "violations": self.violations,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def run_corpus(names=None, cache_dir=None, use_cache: bool = True, jobs: int = 1, overrides: dict | None = None) -> CorpusReport:
    """``verify-all`` over every bundled scene."""
    reports = {}
    for name in names or bundled_scene_names():
        spec = bundled_scene(name)
        if overrides:
            spec = spec.with_overrides(**overrides)
        reports[name] = run_pipeline(spec, list(spec.tasks) + ["verify-all"], cache_dir, use_cache, jobs)
    return CorpusReport(reports)
