"""Shooting charts on unstable spheres and transition search by bisection.

For an index-2 critical point P on a surface the unstable sphere is a small
circle ``theta -> P + rho (cos theta U1 + sin theta U2)``.  The map sending
``theta`` to its forward flow line, parametrized by the value of ``f``, is
continuous except where the flow line hits the stable manifold of a
saddle.  Those transition parameters are located by
bisection and are exactly the points of ``M^P_R`` for saddles ``R``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..dynamics import CriticalPoint, FlowConfig, Trajectory, find_critical_points, integrate_flow
from ..geometry import ImplicitManifold, ScalarField

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
# level-wise separation of neighbouring flow lines above which a cell is refined
SEPARATION = 0.2


class UnresolvedLimit(ArithmeticError):
    pass


class FlowContext:
    """Shared geometric stage for moduli computations: ``(M, f, Crit f, cfg)``.

    Charts are created on demand and cached per critical point.
    """

    def __init__(self, m: ImplicitManifold, f: ScalarField, crits=None, cfg: FlowConfig | None = None):
        self.m = m
        self.f = f
        self.cfg = cfg or FlowConfig()
        self.crits = list(crits) if crits is not None else find_critical_points(m, f, self.cfg)
        self._by_id = {c.id: c for c in self.crits}
        self._charts: dict[str, UnstableSphereChart] = {}

    def crit(self, ident: str) -> CriticalPoint:
        return self._by_id[ident]

    def chart(self, p: CriticalPoint | str) -> "UnstableSphereChart":
        if isinstance(p, str):
            p = self.crit(p)
        if p.id not in self._charts:
            self._charts[p.id] = UnstableSphereChart(self, p)
        return self._charts[p.id]

    @property
    def minima(self):
        return [c for c in self.crits if c.index == 0]

    @property
    def saddles(self):
        return [c for c in self.crits if 0 < c.index < self.m.dim]


@dataclass(frozen=True, eq=False)
class Shot:
    """Forward flow of one point of the unstable sphere."""

    param: float
    trajectory: Trajectory
    omega: str | None
    near: dict = field(default_factory=dict)  # saddle id -> (closest distance, side)


@dataclass(frozen=True, eq=False)
class Transition:
    """A parameter whose flow line ends at a saddle ``R`` (a point of ``M^P_R``)."""

    param: float
    saddle: str
    left: Shot
    right: Shot
    orbit: Trajectory
    arrival_side: int  # side of R's stable frame the orbit arrives from

    @property
    def left_side(self) -> int:
        return self.left.near[self.saddle][1]

    @property
    def right_side(self) -> int:
        return self.right.near[self.saddle][1]


def level_distance(a: Trajectory, b: Trajectory, levels: int = 256) -> float:
    """Largest distance between two flow lines compared at equal values of ``f``.

    Flow lines parametrized by ``f`` depend continuously on their start
    point unless one of them runs into a critical point, so this detects
    the parameters where the forward limit map breaks.
    """
    hi = min(a.f_values[1], b.f_values[1]) if len(a.f_values) > 1 and len(b.f_values) > 1 else None
    lo = max(a.f_values[-1], b.f_values[-1])
    if hi is None or not hi > lo:
        return 0.0
    c = np.linspace(lo, hi, levels)
    fa, fb = a.f_values[::-1], b.f_values[::-1]
    pa = np.stack([np.interp(c, fa, a.points[::-1, j]) for j in range(a.points.shape[1])], axis=1)
    pb = np.stack([np.interp(c, fb, b.points[::-1, j]) for j in range(b.points.shape[1])], axis=1)
    return float(np.max(np.linalg.norm(pa - pb, axis=1)))


class UnstableSphereChart:
    """The unstable sphere of ``owner`` with lazily computed shots."""

    def __init__(self, ctx: FlowContext, owner: CriticalPoint):
        self.ctx = ctx
        self.owner = owner
        self.radius = ctx.cfg.shooting_radius
        self._shots: dict[float, Shot] = {}
        lower = [c.value for c in ctx.crits if c.value < owner.value - 1e-12]
        gap = owner.value - max(lower) if lower else 1.0
        self.level = owner.value - ctx.cfg.level_fraction * gap

    @property
    def dim(self) -> int:
        return self.owner.index - 1

    # -- points ----------------------------------------------------------

    def shot_point(self, param: float) -> np.ndarray:
        U = self.owner.unstable_frame
        if self.owner.index == 1:
            d = param * U[:, 0]
        elif self.owner.index == 2:
            d = math.cos(param) * U[:, 0] + math.sin(param) * U[:, 1]
        else:
            raise NotImplementedError("charts exist for index 1 and 2")
        return self.ctx.m.retract_array(self.owner.location + self.radius * d)

    def parameters(self) -> list[float]:
        if self.owner.index == 1:
            return [1.0, -1.0]
        K = self.ctx.cfg.chart_resolution
        return [(k + 0.5) * TWO_PI / K for k in range(K)]

    def sample(self, param: float) -> np.ndarray:
        """Point of ``f^-1(level)`` on the forward flow line through ``param``."""
        tr = self.shot(param).trajectory
        i = int(np.argmax(tr.f_values < self.level))
        if tr.f_values[i] >= self.level:
            raise UnresolvedLimit(f"flow from {self.owner.id} at {param} never reaches the level")
        a, b = tr.points[i - 1], tr.points[i]
        fa, fb = tr.f_values[i - 1], tr.f_values[i]
        x = a + (fa - self.level) / (fa - fb) * (b - a)
        m, f = self.ctx.m, self.ctx.f
        for _ in range(8):
            x = m.retract_array(x)
            v, g = f.value_grad(x)
            g = m.tangent_project(x, np.array(g))
            if abs(v - self.level) < 1e-13:
                break
            x = x - (v - self.level) * g / (g @ g)
        return x

    @property
    def samples(self) -> dict[float, np.ndarray]:
        return {t: self.sample(t) for t in self.parameters()}

    # -- flows -----------------------------------------------------------

    def shot(self, param: float) -> Shot:
        param = float(param)
        if param in self._shots:
            return self._shots[param]
        ctx = self.ctx
        x0 = self.shot_point(param)
        if self.owner.index == 1:
            stop = None  # every critical point: saddle connections must surface
        else:
            stop = [c.id for c in ctx.minima]
        tr = integrate_flow(ctx.m, ctx.f, x0, "forward", ctx.cfg, ctx.crits, stop=stop, alpha_limit=self.owner.id)
        tr = _with_source(tr, self.owner)
        omega = tr.omega_limit
        near = {}
        pts = tr.points
        for r in ctx.saddles:
            if r.id == self.owner.id:
                continue
            d = np.sqrt(np.sum((pts - r.location) ** 2, axis=1))
            i = int(np.argmin(d))
            if d[i] < ctx.cfg.basin_radius:
                u = r.unstable_coords(pts[i])
                near[r.id] = (float(d[i]), int(np.sign(u[0])))
        if omega is not None and ctx.crit(omega).index == 1:
            near[omega] = (0.0, 0)  # exact hit: no side
        s = Shot(param, tr, omega, near)
        self._shots[param] = s
        return s

    # -- transitions -----------------------------------------------------

    def _flagged(self, a: Shot, b: Shot) -> bool:
        if a.omega != b.omega:
            return True
        for r, (_, side) in a.near.items():
            if r in b.near and b.near[r][1] != side:
                return True
        return level_distance(a.trajectory, b.trajectory) > SEPARATION

    @cached_property
    def transitions(self) -> list[Transition]:
        """All transition parameters, sorted, for an index-2 owner."""
        if self.owner.index != 2:
            raise NotImplementedError("transitions are defined on circle charts")
        params = self.parameters()
        shots = [self.shot(t) for t in params]
        brackets = []
        for k in range(len(params)):
            a = shots[k]
            b_param = params[(k + 1) % len(params)] + (TWO_PI if k + 1 == len(params) else 0.0)
            b = shots[(k + 1) % len(params)]
            if self._flagged(a, b):
                self._refine(a.param, b_param, a, b, brackets)
        found = [self._certify(lo, hi) for lo, hi in brackets]
        return _merge([t for t in found if t is not None])

    def _shot_wrapped(self, t: float) -> Shot:
        return self.shot(t % TWO_PI) if t >= TWO_PI else self.shot(t)

    def _refine(self, lo, hi, a, b, out):
        tol = self.ctx.cfg.bisection_tol
        stack = [(lo, hi, a, b)]
        while stack:
            lo, hi, a, b = stack.pop()
            if hi - lo < tol:
                out.append((lo, hi))
                continue
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                out.append((lo, hi))
                continue
            m = self._shot_wrapped(mid)
            # push right first so the left half is processed first
            if self._flagged(m, b):
                stack.append((mid, hi, m, b))
            if self._flagged(a, m):
                stack.append((lo, mid, a, m))

    def _certify(self, lo, hi) -> Transition | None:
        a, b = self._shot_wrapped(lo), self._shot_wrapped(hi)
        ctx = self.ctx
        candidates = [
            r for r in a.near
            if r in b.near and a.near[r][1] != b.near[r][1]
        ]
        exact = [s.omega for s in (a, b) if s.omega is not None and ctx.crit(s.omega).index == 1]
        if candidates:
            r = min(candidates, key=lambda r: max(a.near[r][0], b.near[r][0]))
        elif exact:
            r = exact[0]
        elif a.omega == b.omega:
            # a steep but continuous stretch of the limit map; nothing to certify
            if level_distance(a.trajectory, b.trajectory) > SEPARATION:
                raise UnresolvedLimit(
                    f"bracket [{lo!r}, {hi!r}] on the unstable circle of {self.owner.id} flows to "
                    f"{a.omega} at both ends but the flow lines stay apart"
                )
            return None
        else:
            raise UnresolvedLimit(
                f"targets {a.omega} and {b.omega} differ across [{lo!r}, {hi!r}] without a saddle in between"
            )
        R = ctx.crit(r)
        # orbit into R from the bracket end closest to it
        hit = [s for s in (a, b) if s.omega == r]
        closer = hit[0] if hit else min((a, b), key=lambda s: s.near[r][0])
        if hit:
            orbit = closer.trajectory
        else:
            stop = [r] + [c.id for c in ctx.minima]
            orbit = integrate_flow(
                ctx.m, ctx.f, self.shot_point(closer.param % TWO_PI), "forward", ctx.cfg, ctx.crits,
                stop=stop, alpha_limit=self.owner.id,
            )
            orbit = _with_source(orbit, self.owner)
            if orbit.omega_limit != r:
                raise UnresolvedLimit(f"orbit through bracket [{lo!r}, {hi!r}] does not end at {r}")
        orbit = _with_target(orbit, R)
        arrival = int(np.sign(R.stable_coords(orbit.points[-2])[0]))
        return Transition(0.5 * (lo + hi) % TWO_PI, r, a, b, orbit, arrival)


def _merge(ts: list[Transition]) -> list[Transition]:
    """Merge brackets that straddle a single exact saddle hit."""
    ts = sorted(ts, key=lambda t: t.param)
    out: list[Transition] = []
    for t in ts:
        if out and out[-1].saddle == t.saddle and abs(t.param - out[-1].param) < 1e-8:
            prev = out[-1]
            out[-1] = Transition(prev.param, prev.saddle, prev.left, t.right, prev.orbit, prev.arrival_side)
        else:
            out.append(t)
    if len(out) > 1 and out[0].saddle == out[-1].saddle and TWO_PI - out[-1].param + out[0].param < 1e-8:
        last, first = out.pop(), out[0]
        out[0] = Transition(first.param, first.saddle, last.left, first.right, first.orbit, first.arrival_side)
    for t in out:
        if t.left.near.get(t.saddle, (0, 0))[1] == 0 or t.right.near.get(t.saddle, (0, 0))[1] == 0:
            raise UnresolvedLimit(f"transition at {t.param} through {t.saddle} lacks a side on one end")
    return out


def _with_source(tr: Trajectory, p: CriticalPoint) -> Trajectory:
    """Prepend the source critical point so the polyline starts there."""
    return Trajectory(
        points=np.vstack([p.location, tr.points]),
        f_values=np.concatenate([[p.value], tr.f_values]),
        direction=tr.direction,
        alpha_limit=p.id,
        omega_limit=tr.omega_limit,
        budget_exhausted=tr.budget_exhausted,
        passes=tr.passes,
    )


def _with_target(tr: Trajectory, q: CriticalPoint) -> Trajectory:
    """Append the target critical point so the polyline ends there."""
    if np.array_equal(tr.points[-1], q.location):
        return tr
    return Trajectory(
        points=np.vstack([tr.points, q.location]),
        f_values=np.concatenate([tr.f_values, [q.value]]),
        direction=tr.direction,
        alpha_limit=tr.alpha_limit,
        omega_limit=q.id,
        budget_exhausted=tr.budget_exhausted,
        passes=tr.passes,
    )
