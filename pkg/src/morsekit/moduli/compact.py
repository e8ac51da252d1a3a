"""Compactified unstable manifolds on surfaces as finite cell complexes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from ..dynamics import CriticalPoint, FlowConfig
from .chart import FlowContext
from .connecting import connecting_0d, connecting_1d


class StrataGap(ArithmeticError):
    pass


@dataclass(frozen=True)
class Stratum:
    """One cell of the compactification: ``(flow piece to y) x (cell of W^(y))``."""

    label: str
    dim: int
    via: str | None  # critical point y whose cell this stratum comes from
    ends: tuple = ()  # labels of the two boundary vertices of a 1-cell

    def to_dict(self) -> dict:
        return {"label": self.label, "dim": self.dim, "via": self.via, "ends": list(self.ends)}


@dataclass(frozen=True)
class CompactifiedUnstable:
    owner: str
    index: int
    strata: tuple
    boundary_index_set: frozenset

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** s.dim for s in self.strata)

    def cells(self, dim: int) -> list[Stratum]:
        return [s for s in self.strata if s.dim == dim]

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "index": self.index,
            "euler_characteristic": self.euler_characteristic,
            "boundary_index_set": sorted(self.boundary_index_set),
            "cells": [len(self.cells(k)) for k in range(self.index + 1)],
            "strata": [s.to_dict() for s in self.strata],
        }


def compactified_unstable(x: CriticalPoint | str, ctx: FlowContext, cfg: FlowConfig | None = None) -> CompactifiedUnstable:
    """Cell structure of the compactified unstable manifold of ``x``.

    Index 0 is a point, index 1 an interval whose ends are the minima the
    two separatrices reach, index 2 a disk whose boundary circle is built
    from arcs of the 1-dimensional moduli and, for every orbit to a saddle
    ``y``, a copy of that saddle's interval.  The boundary must close into a
    single circle; otherwise :class:`StrataGap` is raised.
    """
    if cfg is not None and cfg != ctx.cfg:
        raise ValueError("cfg differs from the context configuration")
    x = ctx.crit(x) if isinstance(x, str) else x
    if x.index == 0:
        return CompactifiedUnstable(x.id, 0, (Stratum(x.id, 0, None),), frozenset())
    chart = ctx.chart(x)
    if x.index == 1:
        strata = [Stratum(f"W({x.id})", 1, None)]
        index_set = set()
        ends = []
        for q in ctx.minima:
            for o in connecting_0d(x, q, chart).orbits:
                label = f"{o.key} x W({q.id})"
                strata.append(Stratum(label, 0, q.id))
                ends.append(label)
                index_set.add(q.id)
        if len(ends) != 2:
            raise StrataGap(f"unstable interval of {x.id} has {len(ends)} ends")
        strata[0] = Stratum(f"W({x.id})", 1, None, tuple(ends))
        return CompactifiedUnstable(x.id, 1, tuple(strata), frozenset(index_set))
    if x.index != 2:
        raise NotImplementedError("compactification is implemented for surfaces")

    strata = [Stratum(f"W({x.id})", 2, None)]
    index_set = set()
    edges: list[tuple[str, str]] = []
    vertices: set[str] = set()
    for y in ctx.saddles:
        for o in connecting_0d(x, y, chart).orbits:
            index_set.add(y.id)
            # the saddle's interval, attached along this orbit
            sub = compactified_unstable(y, ctx)
            ends = tuple(f"{o.key} x {e}" for e in sub.strata[0].ends)
            strata.append(Stratum(f"{o.key} x W({y.id})", 1, y.id, ends))
            for e in ends:
                vertices.add(e)
            edges.append(ends)
    closed = 0
    for q in ctx.minima:
        mod = connecting_1d(x, q, chart)
        if mod.arcs or mod.closed_components:
            index_set.add(q.id)
        for k, arc in enumerate(mod.arcs):
            ends = tuple(_corner(e) for e in (arc.lower, arc.upper))
            strata.append(Stratum(f"arc{k}({x.id}->{q.id}) x W({q.id})", 1, q.id, ends))
            edges.append(ends)
        closed += mod.closed_components
    if closed:
        if edges or closed != 1:
            raise StrataGap(f"boundary of {x.id} mixes closed moduli with broken strata")
        # a closed circle: one vertex and one loop edge
        strata.append(Stratum(f"base({x.id})", 0, None))
        strata.append(Stratum(f"M({x.id})", 1, ctx.minima[0].id if len(ctx.minima) == 1 else None, (f"base({x.id})",) * 2))
        return CompactifiedUnstable(x.id, 2, tuple(strata), frozenset(index_set))
    for v in sorted(vertices):
        strata.append(Stratum(v, 0, None))
    _check_single_circle(x.id, vertices, edges)
    return CompactifiedUnstable(x.id, 2, tuple(strata), frozenset(index_set))


def _corner(end) -> str:
    """Vertex label of a broken end: ``(orbit to y) x (end of W^(y))``."""
    q = end.second.target
    return f"{end.first.key} x {end.second.key} x W({q})"


def _check_single_circle(owner, vertices, edges):
    if not edges:
        raise StrataGap(f"boundary of {owner} is empty")
    deg = defaultdict(int)
    adj = defaultdict(set)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
        adj[a].add(b)
        adj[b].add(a)
    missing = set(deg) - set(vertices)
    if missing:
        raise StrataGap(f"boundary of {owner}: arc ends {sorted(missing)[:2]} are not saddle corners")
    bad = [v for v in vertices if deg[v] != 2]
    if bad:
        raise StrataGap(f"boundary of {owner}: corners {sorted(bad)[:2]} do not have two incident strata")
    start = next(iter(sorted(vertices)))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for n in adj[v]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    if seen != set(vertices):
        raise StrataGap(f"boundary of {owner} splits into more than one circle")
