"""Representing cycles ``sum_s k(x, y; s) s`` of suspended moduli in an auxiliary Morse complex.

For Morse functions ``f`` and ``g`` in general position, the suspension
``T^x_y = W^u_f(x) ∩ W^s_f(y)`` meets each stable manifold ``W^s_g(s)`` with
``ind_g(s) = |x| - |y|`` in finitely many points; their count mod 2 is
``k(x, y; s)``.  The chain ``sum_s k(x, y; s) s`` is a cycle of ``C(g)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..algebra import FreeChainComplex, GF2Span, columns_to_bits
from ..dynamics import integrate_flow
from ..moduli import FlowContext, connecting_0d, morse_complex
from .curves import NonTransverse, check_clear, crossings, separatrices


@dataclass(frozen=True, eq=False)
class RepresentingCycle:
    x: str
    y: str
    degree: int
    coefficients: dict  # g-critical id -> k mod 2
    host: FreeChainComplex  # C(g) over Z/2
    witnesses: dict = field(default_factory=dict)  # g-critical id -> intersection points

    def vector(self) -> list[int]:
        return [self.coefficients.get(s, 0) for s in self.host.basis.get(self.degree, [])]

    def cycle_defect(self) -> dict:
        """``sum_s k(s) h^s_z`` for every ``z`` one degree down (all zero for a cycle)."""
        D = self.host.matrix(self.degree)
        v = self.vector()
        low = self.host.basis.get(self.degree - 1, [])
        return {z: sum(D[i][j] * v[j] for j in range(len(v))) % 2 for i, z in enumerate(low)}

    @property
    def is_cycle(self) -> bool:
        return not any(self.cycle_defect().values())

    def is_boundary(self) -> bool:
        D = self.host.matrix(self.degree + 1)
        span = GF2Span()
        for c in columns_to_bits(D):
            span.add(c)
        bits = sum(1 << i for i, a in enumerate(self.vector()) if a)
        return span.contains(bits)

    @property
    def homology_nonzero(self) -> bool:
        return self.is_cycle and not self.is_boundary()

    def fundamental_pairing(self) -> int:
        """Pairing with the dual cochain of the first top-degree critical point.

        Any single top cochain represents the mod 2 fundamental class; the sum
        of all of them does not once ``g`` has more than one maximum.
        """
        top = max(self.host.degrees)
        if self.degree != top:
            return 0
        v = self.vector()
        return v[0] % 2 if v else 0

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "degree": self.degree,
            "coefficients": {s: k for s, k in sorted(self.coefficients.items())},
            "cycle_defect": {z: v for z, v in sorted(self.cycle_defect().items())},
            "is_cycle": self.is_cycle,
            "homology_nonzero": self.homology_nonzero,
        }


def represent_T_class(
    fctx: FlowContext, x, y, gctx: FlowContext, max_step: float = 0.05, require_cycle: bool = True
) -> RepresentingCycle:
    """``k(x, y; s)`` for every ``s`` of ``g`` with ``ind_g(s) = |x| - |y|``.

    Index difference 2 (surfaces): ``k = 1`` exactly when ``s`` flows under
    ``f`` back to ``x`` and forward to ``y``.  Index difference 1: ``k`` is
    the mod 2 number of crossings of the ``f``-flow lines from ``x`` to
    ``y`` with the stable separatrices of ``s`` under ``g``.
    """
    if fctx.m is not gctx.m:
        raise ValueError("f and g must live on the same manifold")
    m = fctx.m
    X = fctx.crit(x) if isinstance(x, str) else x
    Y = fctx.crit(y) if isinstance(y, str) else y
    deg = X.index - Y.index
    if deg not in (1, 2):
        raise ValueError("represent_T_class needs |x| - |y| in {1, 2}")
    if m.dim != 2:
        raise NotImplementedError("representing cycles are computed on surfaces")
    host = morse_complex(gctx, ring="Z2")
    radius = fctx.cfg.basin_radius
    cfg = fctx.cfg.override(max_step=min(max_step, fctx.cfg.max_step), initial_step=min(max_step, fctx.cfg.initial_step))
    coeffs, wit = {}, {}
    targets = [s for s in gctx.crits if s.index == deg]
    if deg == 2:
        for s in targets:
            check_clear(s.location, [fctx.crits], radius, f"critical point {s.id} of g")
            fwd = integrate_flow(m, fctx.f, s.location, "forward", cfg, fctx.crits)
            bwd = integrate_flow(m, fctx.f, s.location, "backward", cfg, fctx.crits)
            if fwd.budget_exhausted or bwd.budget_exhausted:
                raise NonTransverse(f"flow of {s.id} under f did not settle")
            hit = bwd.alpha_limit == X.id and fwd.omega_limit == Y.id
            coeffs[s.id] = int(hit)
            wit[s.id] = [s.location.copy()] if hit else []
    else:
        orbits = connecting_0d(X, Y, fctx.chart(X)).orbits
        curves = [densify(m, o.trajectory.flow_ordered().points, cfg.max_step) for o in orbits]
        for s in targets:
            seps = separatrices(m, gctx.f, s, gctx.crits, gctx.cfg.override(max_step=cfg.max_step, initial_step=cfg.initial_step), kind="stable")
            pts = []
            for c in curves:
                for sep in seps:
                    for cr in crossings(m, c, sep):
                        check_clear(cr.point, [fctx.crits, gctx.crits], radius, "intersection point")
                        pts.append(cr.point)
            coeffs[s.id] = len(pts) % 2
            wit[s.id] = pts
    cyc = RepresentingCycle(X.id, Y.id, deg, coeffs, host, wit)
    if require_cycle and not cyc.is_cycle:
        raise ArithmeticError(f"sum k(x,y;s) s is not a cycle: defect {cyc.cycle_defect()}")
    return cyc


def densify(m, pts: np.ndarray, max_len: float) -> np.ndarray:
    """Subdivide chords longer than ``max_len`` and retract the new points onto ``m``."""
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        k = int(np.ceil(np.linalg.norm(b - a) / max_len))
        for t in np.arange(1, k) / k:
            out.append(m.retract_array(a + t * (b - a)))
        out.append(b)
    return np.array(out)
