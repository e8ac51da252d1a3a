"""Coefficient classes ``a^x_y`` of flow-line moduli in loop-space models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..moduli import FlowContext, LoopImage, connecting_0d, connecting_1d, extract_loop
from ..operations.curves import winding
from .models import GroupRingModel, PontryaginModel


class OpenLoop(ValueError):
    pass


class NotConsecutive(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientClass:
    source: str
    target: str
    degree: int
    value: frozenset

    def to_dict(self, model=None) -> dict:
        shown = model.format(self.value) if model is not None else sorted(map(str, self.value))
        return {"source": self.source, "target": self.target, "degree": self.degree, "value": shown}


def torus_winding(m, polyline: np.ndarray) -> tuple[int, int]:
    """Winding pair ``(w_1, w_2)`` of a closed polyline on the catalog torus.

    ``w_1`` counts turns around the tube (angle ``v``) and ``w_2`` turns
    around the symmetry axis (angle ``u``), so a loop along the inner
    equator has class ``t_2``.
    """
    polyline = np.asarray(polyline, dtype=float)
    if len(polyline) < 2:
        return (0, 0)
    if np.linalg.norm(polyline[0] - polyline[-1]) > 1e-9:
        raise OpenLoop("polyline does not close up")
    w_u, w_v = winding(m, polyline)
    return w_v, w_u


def loop_class_0d(L: LoopImage, G: GroupRingModel, m) -> frozenset:
    """Group-ring element ``t_1^{w_1} t_2^{w_2}`` of a closed loop on the torus."""
    if not L.closed:
        raise OpenLoop(f"loop {L.source}->{L.target} is not closed")
    return G.monomial(torus_winding(m, L.polyline))


def coefficient_class_0d(ctx: FlowContext, P, Q, model, base_path=None) -> CoefficientClass:
    """``a^P_Q`` for ``|P| - |Q| = 1``.

    In a group-ring model this is ``sum_orbits t^{w(orbit)}`` computed from
    the loops ``j^P_Q`` through ``base_path``; in a Pontryagin model it is
    the orbit count mod 2 times the unit (degree 0).
    """
    P = ctx.crit(P) if isinstance(P, str) else P
    Q = ctx.crit(Q) if isinstance(Q, str) else Q
    mod = connecting_0d(P, Q, ctx.chart(P))
    if isinstance(model, GroupRingModel):
        if base_path is None:
            raise ValueError("group-ring classes need a base path")
        value = model.zero()
        for o in mod.orbits:
            value = model.add(value, loop_class_0d(extract_loop(o, base_path), model, ctx.m))
    else:
        value = model.one() if mod.mod2 else model.zero()
    return CoefficientClass(P.id, Q.id, 0, value)


def intermediate_witness(ctx: FlowContext, P, Q):
    """An ``R`` strictly between ``P`` and ``Q`` with both moduli nonempty, or ``None``."""
    for R in ctx.crits:
        if Q.index < R.index < P.index:
            if connecting_0d(P, R, ctx.chart(P)).count and connecting_0d(R, Q, ctx.chart(R)).count:
                return R
    return None


def coefficient_class_1d(ctx: FlowContext, P, Q, gctx: FlowContext, model: PontryaginModel, moduli=None) -> CoefficientClass:
    """``a^P_Q`` in degree 1 for a consecutive pair on ``S^2``.

    The class is read through the evaluation map ``H_1(Omega S^2) -> H_2(S^2)``,
    an isomorphism here: it is the generator ``u`` when the representing
    cycle of ``T^P_Q`` in ``C(g)`` is homologically nonzero and 0 otherwise.
    ``moduli`` may supply a precomputed ``M^P_Q``; an empty one gives 0.
    """
    from ..operations import represent_T_class

    P = ctx.crit(P) if isinstance(P, str) else P
    Q = ctx.crit(Q) if isinstance(Q, str) else Q
    if P.index - Q.index != 2:
        raise ValueError("degree-1 classes need |P| - |Q| = 2")
    if ctx.m.catalog_id != "sphere" or ctx.m.dim != 2:
        raise NotImplementedError("degree-1 classes are read off on the catalog 2-sphere")
    R = intermediate_witness(ctx, P, Q)
    if R is not None:
        raise NotConsecutive(f"{R.id} lies between {P.id} and {Q.id} with nonempty moduli on both sides")
    mod = moduli if moduli is not None else connecting_1d(P, Q, ctx.chart(P))
    if not mod.arcs and not mod.closed_components:
        return CoefficientClass(P.id, Q.id, 1, model.zero())
    cyc = represent_T_class(ctx, P, Q, gctx)
    value = model.element("u") if cyc.homology_nonzero else model.zero()
    return CoefficientClass(P.id, Q.id, 1, value)


def relative_class_1d(ctx: FlowContext, P, Q, gctx: FlowContext, model: PontryaginModel) -> CoefficientClass:
    """Chain-level choice of ``a^P_Q`` in degree 1 for a non-consecutive pair on ``S^2``.

    ``M^P_Q`` then has broken ends and no fundamental class of its own.
    The coefficient is read from the chain ``sum_s k(P, Q; s) s`` paired
    with the dual cochain of the first maximum of ``g``: it is ``u`` exactly
    when that maximum lies in the basin of ``P`` and flows to ``Q``.  Summed
    over all maxima ``P`` of ``f`` the choices add up to the fundamental
    class, which is what makes the assembled differential square to zero.
    """
    from ..operations import represent_T_class

    P = ctx.crit(P) if isinstance(P, str) else P
    Q = ctx.crit(Q) if isinstance(Q, str) else Q
    if P.index - Q.index != 2:
        raise ValueError("degree-1 classes need |P| - |Q| = 2")
    chain = represent_T_class(ctx, P, Q, gctx, require_cycle=False)
    value = model.element("u") if chain.fundamental_pairing() else model.zero()
    return CoefficientClass(P.id, Q.id, 1, value)


def base_change_factors(m, w1, w2) -> dict:
    """Winding pair of ``route_1(x)`` followed by ``route_2(x)`` backwards, per critical point.

    Both base trees must share the base point.
    """
    if w1.base != w2.base:
        raise ValueError("base trees have different base points")
    out = {}
    for cid in w1.routes:
        loop = np.vstack([w1.path_to(cid), w2.path_to(cid)[::-1][1:]])
        out[cid] = torus_winding(m, loop)
    return out


def rebase_class(c: CoefficientClass, G: GroupRingModel, delta: dict) -> CoefficientClass:
    """The class ``a^x_y`` seen through the second base tree.

    Rerouting the path to ``x`` by the loop ``delta[x]`` turns the loop of a
    flow line ``x -> y`` into ``delta[x]^-1 (loop) delta[y]``; the group is
    abelian, so the class is multiplied by ``t^(delta[y] - delta[x])``.
    """
    shift = tuple(b - a for a, b in zip(delta[c.source], delta[c.target]))
    return CoefficientClass(c.source, c.target, c.degree, G.mul(c.value, G.monomial(shift)))
