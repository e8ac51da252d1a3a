"""Loops from flow lines: the maps ``j^P_Q``.

A flow line from ``P`` to ``Q`` becomes a loop once both ends are joined to
a base point along a fixed simple path ``w`` through all critical points.
Collapsing ``w`` gives the quotient in which the flow line alone, read as a
function of ``-f``, is already a loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dynamics import CriticalPoint, Trajectory
from ..geometry import ImplicitManifold
from .connecting import BrokenTrajectory, Orbit


@dataclass(frozen=True, eq=False)
class BasePath:
    """A contractible graph through all critical points, rooted at ``base``.

    ``routes[c]`` is the polyline inside the graph from the base point to
    critical point ``c``.  Chart base paths are simple paths; flow base
    paths may be trees, which collapse just as well.
    """

    base: str
    routes: dict

    def path_to(self, cid: str) -> np.ndarray:
        """Polyline along ``w`` from the base point to ``cid``."""
        return self.routes[cid]

    def to_dict(self) -> dict:
        return {"base": self.base, "route_points": {k: len(v) for k, v in sorted(self.routes.items())}}


def _path_routes(order, segs, anchor) -> dict:
    routes = {order[0]: np.asarray(anchor, dtype=float)[None, :]}
    acc = routes[order[0]]
    for k, seg in enumerate(segs):
        acc = np.vstack([acc, seg[1:]])
        routes[order[k + 1]] = acc
    return routes


def chart_base_path(
    m: ImplicitManifold,
    crits: list[CriticalPoint],
    order: list[str] | None = None,
    turns: dict | None = None,
    bump: float = 0.0,
    points: int = 96,
) -> BasePath:
    """Base path made of chart segments between consecutive critical points.

    On the torus the segments are straight in the angle chart, using the
    shortest lift plus ``turns[k] = (du, dv)`` extra full turns on segment
    ``k``; ``bump`` adds a transverse detour that keeps the homotopy class.
    On spheres the segments are great-circle arcs.
    """
    by_id = {c.id: c for c in crits}
    order = list(order) if order is not None else [c.id for c in crits]
    if len(order) == 1:
        return BasePath(order[0], _path_routes(order, [], by_id[order[0]].location))
    turns = turns or {}
    segs = []
    s = np.linspace(0.0, 1.0, points)
    for k in range(len(order) - 1):
        a, b = by_id[order[k]].location, by_id[order[k + 1]].location
        if m.catalog_id == "torus":
            ua, ub = m.torus_angles(a), m.torus_angles(b)
            delta = (ub - ua + math.pi) % (2 * math.pi) - math.pi
            delta = delta + 2 * math.pi * np.asarray(turns.get(k, (0, 0)), dtype=float)
            uv = ua[None, :] + s[:, None] * delta[None, :]
            if bump:
                normal = np.array([-delta[1], delta[0]]) / (np.linalg.norm(delta) or 1.0)
                uv = uv + bump * np.sin(np.pi * s)[:, None] * normal[None, :]
            seg = m.torus_point(uv[:, 0], uv[:, 1])
            seg[0], seg[-1] = a, b
        elif m.catalog_id == "sphere":
            seg = _great_arc(a, b, s)
        else:
            seg = np.array([m.retract_array(a + t * (b - a)) for t in s])
        segs.append(seg)
    return BasePath(order[0], _path_routes(order, segs, by_id[order[0]].location))


def _great_arc(a, b, s):
    cos = float(np.clip(a @ b, -1.0, 1.0))
    ang = math.acos(cos)
    if ang < 1e-12:
        return np.repeat(a[None, :], len(s), axis=0)
    perp = b - cos * a
    if np.linalg.norm(perp) < 1e-9:
        # antipodal: any perpendicular direction works; take a fixed one
        e = np.zeros_like(a)
        e[int(np.argmin(np.abs(a)))] = 1.0
        perp = e - (e @ a) * a
    perp = perp / np.linalg.norm(perp)
    t = ang * s
    arc = np.cos(t)[:, None] * a[None, :] + np.sin(t)[:, None] * perp[None, :]
    arc[-1] = b
    return arc


def flow_base_path(crits: list[CriticalPoint], orbits: list[Orbit], base: str | None = None) -> BasePath:
    """Base tree made of computed flow lines (traversed either way).

    Breadth-first from ``base`` (default: the first critical point), taking
    for every newly reached critical point the first orbit joining it in the
    given order.
    """
    by_id = {c.id: c for c in crits}
    base = base if base is not None else crits[0].id
    routes = {base: by_id[base].location[None, :].astype(float)}
    queue = [base]
    while queue:
        cur = queue.pop(0)
        for o in orbits:
            if cur not in (o.source, o.target):
                continue
            other = o.target if o.source == cur else o.source
            if other in routes:
                continue
            pts = o.trajectory.points if o.source == cur else o.trajectory.points[::-1]
            routes[other] = np.vstack([routes[cur], pts[1:]])
            queue.append(other)
    if len(routes) != len(by_id):
        raise ValueError(f"flow lines leave {sorted(set(by_id) - set(routes))} unreached")
    return BasePath(base, routes)


@dataclass(frozen=True, eq=False)
class LoopImage:
    """A flow line as a loop.

    ``core`` is the flow line from ``source`` to ``target`` with parameter
    ``param = -f``; ``polyline`` is the closed ambient loop obtained by
    splicing with the base path at both ends.
    """

    source: str
    target: str
    core: np.ndarray
    param: np.ndarray
    polyline: np.ndarray
    base_path: BasePath

    @property
    def is_constant(self) -> bool:
        return len(self.core) == 1

    @property
    def closed(self) -> bool:
        return bool(np.array_equal(self.polyline[0], self.polyline[-1]))

    def sample(self, t) -> np.ndarray:
        """Core point(s) at parameter value(s) ``t`` by linear interpolation."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.interp(t, self.param, self.core[:, j]) for j in range(self.core.shape[1])], axis=1)

    def concatenate(self, other: "LoopImage") -> "LoopImage":
        """Loop concatenation; the parameter ranges abut at ``f`` of the junction."""
        if self.target != other.source:
            raise ValueError(f"cannot concatenate loops {self.source}->{self.target} and {other.source}->{other.target}")
        if self.is_constant:
            return other
        if other.is_constant:
            return self
        core = np.vstack([self.core, other.core[1:]])
        param = np.concatenate([self.param, other.param[1:]])
        poly = np.vstack([self.polyline, other.polyline[1:]])
        return LoopImage(self.source, other.target, core, param, poly, self.base_path)


def _splice(core: np.ndarray, source: str, target: str, w: BasePath) -> np.ndarray:
    head = w.path_to(source)
    tail = w.path_to(target)[::-1]
    return np.vstack([head[:-1], core, tail[1:]])


def extract_loop(traj, w: BasePath) -> LoopImage:
    """The loop ``j^P_Q`` of a flow line, an orbit, or a broken trajectory."""
    if isinstance(traj, BrokenTrajectory):
        a = extract_loop(traj.first, w)
        b = extract_loop(traj.second, w)
        core = np.vstack([a.core, b.core[1:]])
        param = np.concatenate([a.param, b.param[1:]])
        return LoopImage(a.source, b.target, core, param, _splice(core, a.source, b.target, w), w)
    if isinstance(traj, Orbit):
        traj = traj.trajectory
    if not isinstance(traj, Trajectory):
        raise TypeError("extract_loop takes a Trajectory, Orbit or BrokenTrajectory")
    tr = traj.flow_ordered()
    if tr.alpha_limit is None or tr.omega_limit is None:
        raise ValueError("both limits of the trajectory must be critical points")
    core = np.asarray(tr.points, dtype=float)
    param = -np.asarray(tr.f_values, dtype=float)
    if len(core) > 1 and not np.all(np.diff(param) > 0):
        raise ValueError("trajectory is not strictly monotone in f")
    return LoopImage(tr.alpha_limit, tr.omega_limit, core, param, _splice(core, tr.alpha_limit, tr.omega_limit, w), w)
