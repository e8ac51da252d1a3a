"""Declarative TOML scenes: parsing, validation and error locations."""

from __future__ import annotations

import copy
import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..dynamics import FlowConfig
from ..geometry import ExprSyntaxError, ScalarField, catalog_manifold
from ..geometry.manifold import CATALOG

TASKS = ("critical", "flow", "complex", "homology", "moduli", "extended", "ss", "ops", "dmt", "verify-all")

# task -> tasks that must run first
PREREQUISITES = {
    "critical": (),
    "flow": ("critical",),
    "complex": ("critical",),
    "homology": ("complex",),
    "moduli": ("critical",),
    "extended": ("complex",),
    "ss": ("extended",),
    "ops": ("critical",),
    "dmt": (),
    "verify-all": (),
}

# keys of a task section that name scene fields
FIELD_KEYS = {"field", "aux", "fields"}


class SceneError(Exception):
    """Base class: a message plus a ``file:line:col`` location."""

    def __init__(self, message: str, path: str = "<scene>", line: int | None = None, col: int | None = None):
        self.message = message
        self.path = str(path)
        self.line = line
        self.col = col
        super().__init__(f"{self.location}: {message}")

    @property
    def location(self) -> str:
        if self.line is None:
            return self.path
        if self.col is None:
            return f"{self.path}:{self.line}"
        return f"{self.path}:{self.line}:{self.col}"


class SceneSyntaxError(SceneError):
    pass


class UnknownManifold(SceneError):
    pass


class UnresolvedReference(SceneError):
    def __init__(self, name: str, message: str, path="<scene>", line=None, col=None):
        self.name = name
        super().__init__(message, path, line, col)


@dataclass
class SceneSpec:
    name: str
    manifold: dict | None  # {"kind": ..., **params}
    fields: dict  # name -> expression
    config: dict  # FlowConfig overrides
    tasks: list
    seed: int = 0
    params: dict = field(default_factory=dict)  # task -> section table
    path: str = "<scene>"
    text: str = ""

    def flow_config(self) -> FlowConfig:
        return FlowConfig().override(**self.config)

    def build_manifold(self):
        if self.manifold is None:
            raise UnknownManifold("scene has no manifold", self.path)
        kind = self.manifold["kind"]
        return catalog_manifold(kind, **{k: v for k, v in self.manifold.items() if k != "kind"})

    def ambient_dim(self) -> int:
        return self.build_manifold().ambient_dim

    def task_params(self, task: str) -> dict:
        return dict(self.params.get(task, {}))

    def locate(self, section: str | None, key: str | None = None) -> tuple[int | None, int | None]:
        return locate(self.text, section, key)

    def where(self, section: str | None, key: str | None = None) -> str:
        line, col = self.locate(section, key)
        if line is None:
            return self.path
        return f"{self.path}:{line}:{col}"

    def content(self) -> dict:
        """Everything that determines results, in canonical form."""
        return {
            "manifold": self.manifold,
            "fields": dict(sorted(self.fields.items())),
            "config": dict(sorted(self.config.items())),
            "seed": self.seed,
            "params": {k: self.params[k] for k in sorted(self.params)},
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.content(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, seed: int | None = None, config: dict | None = None, tasks: list | None = None) -> "SceneSpec":
        out = copy.deepcopy(self)
        if seed is not None:
            out.seed = int(seed)
        if config:
            out.config.update(config)
            out.flow_config()
        if tasks is not None:
            out.tasks = resolve_tasks(tasks)
        return out


def locate(text: str, section: str | None, key: str | None = None) -> tuple[int | None, int | None]:
    """1-based line and column of ``key`` inside ``[section]`` (top level for ``None``)."""
    current = None
    header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
    for i, raw in enumerate(text.splitlines(), start=1):
        m = header.match(raw)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return i, raw.index("[") + 1
            continue
        if current != section or key is None:
            continue
        km = re.match(rf"^(\s*)(\"?){re.escape(key)}\2\s*=", raw)
        if km:
            return i, len(km.group(1)) + 1
    return None, None


def resolve_tasks(tasks) -> list:
    """Tasks in dependency order with prerequisites added; order otherwise kept."""
    out = []

    def add(t):
        if t not in TASKS:
            raise SceneError(f"unknown task {t!r}; expected one of {', '.join(TASKS)}")
        for p in PREREQUISITES[t]:
            add(p)
        if t not in out:
            out.append(t)

    for t in tasks:
        add(t)
    if "verify-all" in out:
        out.remove("verify-all")
        out.append("verify-all")
    return out


def _value_column(text: str, line: int) -> int:
    raw = text.splitlines()[line - 1]
    eq = raw.index("=")
    q = min((i for i in (raw.find('"', eq), raw.find("'", eq)) if i >= 0), default=-1)
    return q + 2 if q >= 0 else eq + 2


def _field_refs(section: str, table: dict):
    """``(section, key, name)`` for every field name used in a task table, nested tables included."""
    for key, val in table.items():
        if isinstance(val, dict):
            yield from _field_refs(f"{section}.{key}", val)
        elif key in FIELD_KEYS:
            for ref in val if isinstance(val, list) else [val]:
                yield section, key, ref


def parse_scene_text(text: str, path: str = "<scene>") -> SceneSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"line (\d+), column (\d+)", msg)
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise SceneSyntaxError(re.sub(r"\s*\(at line.*\)$", "", msg), path, line, col) from None

    def err(cls, message, section=None, key=None, **kw):
        line, col = locate(text, section, key)
        return cls(message=message, path=path, line=line, col=col, **kw) if kw else cls(message, path, line, col)

    known = {"name", "seed", "tasks", "manifold", "fields", "config"} | set(TASKS)
    for k in data:
        if k not in known:
            raise err(SceneError, f"unknown top-level key {k!r}", None, k)

    tasks = data.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise err(SceneError, "scene needs a nonempty 'tasks' list", None, "tasks")
    for t in tasks:
        if t not in TASKS:
            raise err(SceneError, f"unknown task {t!r}", None, "tasks")
    # prerequisites must be listed before the tasks that need them
    for i, t in enumerate(tasks):
        for p in PREREQUISITES[t]:
            if p not in tasks[:i]:
                raise err(SceneError, f"task {t!r} needs {p!r} earlier in the task list", None, "tasks")

    man = data.get("manifold")
    if man is not None:
        man = dict(man)
        kind = man.get("kind")
        if kind not in CATALOG:
            raise err(UnknownManifold, f"unknown manifold {kind!r}; catalog has {', '.join(sorted(CATALOG))}", "manifold", "kind")
        try:
            m = catalog_manifold(kind, **{k: v for k, v in man.items() if k != "kind"})
        except (TypeError, ValueError) as exc:
            raise err(UnknownManifold, f"bad parameters for {kind}: {exc}", "manifold") from None
    elif any(t != "dmt" and t != "verify-all" for t in tasks):
        raise err(UnknownManifold, "scene has numerical tasks but no [manifold] section", None, None)
    else:
        m = None

    fields = dict(data.get("fields", {}))
    for name, expr in fields.items():
        if not isinstance(expr, str):
            raise err(SceneError, f"field {name!r} must be a string expression", "fields", name)
        try:
            ScalarField(expr, m.ambient_dim if m is not None else 3, name=name)
        except ExprSyntaxError as exc:
            line, _ = locate(text, "fields", name)
            col = _value_column(text, line) + exc.position if line else None
            raise SceneSyntaxError(f"field {name!r}: {exc.message}", path, line, col) from None

    config = dict(data.get("config", {}))
    try:
        FlowConfig().override(**config)
    except KeyError as exc:
        raise err(UnresolvedReference, f"unknown config key {exc.args[0]}", "config", None, name="config") from None
    except (TypeError, ValueError) as exc:
        raise err(SceneError, f"bad config: {exc}", "config") from None

    params = {t: dict(data[t]) for t in TASKS if t in data}
    for t, table in params.items():
        for section, key, ref in _field_refs(t, table):
            if ref not in fields:
                raise err(UnresolvedReference, f"task {t!r} references undefined field {ref!r}", section, key, name=ref)
    numeric = [t for t in tasks if t not in ("dmt", "verify-all")]
    if numeric and "f" not in fields and not any("field" in params.get(t, {}) for t in numeric):
        raise err(UnresolvedReference, "numerical tasks need a field named 'f' or an explicit 'field' key", "fields", None, name="f")
    for t in numeric:
        if t in params and "field" in params[t]:
            continue
        if "f" not in fields:
            raise err(UnresolvedReference, f"task {t!r} uses the default field 'f', which is undefined", None, "tasks", name="f")

    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise err(SceneError, "seed must be an integer", None, "seed")
    name = data.get("name", Path(path).stem)
    return SceneSpec(name, man, fields, config, list(tasks), seed, params, str(path), text)


def parse_scene(path) -> SceneSpec:
    """Read and validate a scene file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SceneError(f"cannot read scene: {exc.strerror}", str(p)) from None
    return parse_scene_text(text, str(p))


def bundled_scene_names() -> list[str]:
    root = resources.files("morsekit") / "scenes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def bundled_scene(name: str) -> SceneSpec:
    root = resources.files("morsekit") / "scenes"
    ref = root / f"{name}.toml"
    if not ref.is_file():
        raise SceneError(f"no bundled scene {name!r}; available: {', '.join(bundled_scene_names())}")
    return parse_scene_text(ref.read_text(), f"scenes/{name}.toml")
