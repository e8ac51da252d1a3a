"""Triple intersections ``W^u_{f1}(x) ∩ W^u_{f2}(y) ∩ W^s_{f3}(z)`` on surfaces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import integrate_flow
from ..moduli import FlowContext
from .curves import NonTransverse, check_clear, crossings, separatrices, winding


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TripleIntersectionProblem:
    contexts: tuple  # three FlowContexts on one surface
    x: str
    y: str
    z: str

    def __post_init__(self):
        if len(self.contexts) != 3:
            raise ValueError("a triple intersection needs three functions")
        m = self.contexts[0].m
        if any(c.m is not m for c in self.contexts):
            raise ValueError("all three functions must live on the same manifold")
        ix = self.contexts[0].crit(self.x).index
        iy = self.contexts[1].crit(self.y).index
        iz = self.contexts[2].crit(self.z).index
        if ix + iy - iz - m.dim != 0:
            raise DimensionMismatch(f"|x| + |y| - |z| - n = {ix}+{iy}-{iz}-{m.dim} != 0")

    @property
    def m(self):
        return self.contexts[0].m


@dataclass
class TripleCount:
    mod2: int
    signed: int
    points: list = field(default_factory=list)
    winding_x: tuple | None = None
    winding_y: tuple | None = None
    oracle: int | None = None  # algebraic intersection number from windings
    reruns: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return all(r == (self.mod2, self.signed) for r in self.reruns)

    def to_dict(self) -> dict:
        return {
            "mod2": self.mod2,
            "signed": self.signed,
            "points": [[round(float(c), 8) for c in p] for p in self.points],
            "winding_x": list(self.winding_x) if self.winding_x else None,
            "winding_y": list(self.winding_y) if self.winding_y else None,
            "oracle": self.oracle,
            "reruns": [list(r) for r in self.reruns],
            "stable": self.stable,
        }


def unstable_loop(ctx: FlowContext, x: str, max_step: float = 0.05) -> np.ndarray:
    """Closed oriented curve ``W^u(x)`` of an index-1 point: ``+`` branch out, ``-`` branch back."""
    cfg = ctx.cfg.override(max_step=min(max_step, ctx.cfg.max_step), initial_step=min(max_step, ctx.cfg.initial_step))
    plus, minus = separatrices(ctx.m, ctx.f, ctx.crit(x), ctx.crits, cfg, kind="unstable")
    if np.linalg.norm(plus[-1] - minus[-1]) > 1e-12:
        raise NonTransverse(f"unstable separatrices of {x} end at different minima")
    return np.vstack([plus, minus[::-1][1:]])


def triple_count(prob: TripleIntersectionProblem, max_step: float = 0.05) -> TripleCount:
    """``#(W^u_{f1}(x) ∩ W^u_{f2}(y) ∩ W^s_{f3}(z))`` mod 2 and with signs.

    Implemented for ``|x| = |y| = 1`` and ``|z| = 0`` on surfaces.  Both
    unstable curves are traced as closed polylines; each transverse
    crossing is kept when it flows under ``f3`` to ``z``.  The sign of a
    crossing compares ``(tangent of W^u(x), tangent of W^u(y))`` with the
    outward normal.  On the catalog torus the winding numbers of both loops
    are recorded and ``oracle`` is their determinant.
    """
    c1, c2, c3 = prob.contexts
    m = prob.m
    if m.dim != 2 or c1.crit(prob.x).index != 1 or c2.crit(prob.y).index != 1:
        raise NotImplementedError("triple counts are implemented for two index-1 points on a surface")
    A = unstable_loop(c1, prob.x, max_step)
    B = unstable_loop(c2, prob.y, max_step)
    radius = max(c.cfg.basin_radius for c in prob.contexts)
    pts, signed = [], 0
    for cr in crossings(m, A, B):
        check_clear(cr.point, [c.crits for c in prob.contexts], radius, "triple intersection candidate")
        tr = integrate_flow(m, c3.f, cr.point, "forward", c3.cfg, c3.crits)
        if tr.budget_exhausted:
            raise NonTransverse(f"flow of {tuple(np.round(cr.point, 6))} under f3 did not settle")
        if tr.omega_limit == prob.z:
            pts.append(cr.point)
            signed += cr.sign
    out = TripleCount(len(pts) % 2, signed, pts)
    if m.catalog_id == "torus":
        wa, wb = winding(m, A), winding(m, B)
        out.winding_x, out.winding_y = wa, wb
        # orient the angle chart against the outward normal once
        out.oracle = _chart_orientation(m) * (wa[0] * wb[1] - wa[1] * wb[0])
    return out


def _chart_orientation(m) -> int:
    """+1 when ``(d/du, d/dv)`` is positively oriented w.r.t. the outward normal."""
    u, v, h = 0.3, 0.7, 1e-6
    p = m.torus_point(u, v)
    du = (m.torus_point(u + h, v) - m.torus_point(u - h, v)) / (2 * h)
    dv = (m.torus_point(u, v + h) - m.torus_point(u, v - h)) / (2 * h)
    n = m.jacobian(p)[0]
    return 1 if float(np.cross(du, dv) @ n) > 0 else -1
