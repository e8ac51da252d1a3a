"""Connecting manifolds ``M^P_Q`` of dimension 0 and 1 on surfaces.

Both are read off the unstable sphere of ``P``.  Zero-dimensional spaces
are signed point sets; one-dimensional ones are arcs of the unstable circle
whose ends are broken trajectories through an intermediate saddle.

Sign convention.  Each critical point carries a token (its
``stable_orientation``).  An orbit leaving an index-1 point on side ``e`` of
its unstable frame has sign ``token_P token_Q e``; an orbit of an index-2
point arriving at a saddle ``R`` from side ``s`` of ``R``'s stable frame has
sign ``token_P token_R s``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..algebra import FreeChainComplex
from ..dynamics import CriticalPoint, FlowConfig, Trajectory
from .chart import TWO_PI, FlowContext, UnresolvedLimit, UnstableSphereChart, _with_target


class InconsistentBoundary(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class Orbit:
    """One point of a 0-dimensional ``M^P_Q``."""

    source: str
    target: str
    param: float  # +-1 for index-1 sources, an angle for index-2 sources
    trajectory: Trajectory
    sign: int
    tag: str = ""

    @property
    def key(self) -> str:
        return f"{self.source}>{self.target}@{self.tag}"

    def to_dict(self) -> dict:
        return {"key": self.key, "param": round(self.param, 10), "sign": self.sign}


@dataclass(frozen=True, eq=False)
class ConnectingManifold0D:
    source: str
    target: str
    orbits: tuple

    @property
    def count(self) -> int:
        return len(self.orbits)

    @property
    def mod2(self) -> int:
        return len(self.orbits) % 2

    @property
    def signed(self) -> int:
        return sum(o.sign for o in self.orbits)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "count": self.count,
            "signed": self.signed,
            "orbits": [o.to_dict() for o in self.orbits],
        }


@dataclass(frozen=True, eq=False)
class BrokenTrajectory:
    """A broken flow line ``P -> R -> Q``: an end of a 1-dimensional moduli space."""

    via: str
    first: Orbit
    second: Orbit

    @property
    def pair(self) -> tuple[str, str]:
        return (self.first.key, self.second.key)

    @property
    def sign(self) -> int:
        return self.first.sign * self.second.sign


@dataclass(frozen=True, eq=False)
class Arc:
    """An open arc ``(lo, hi)`` of the unstable circle (``hi`` may exceed 2 pi)."""

    lo: float
    hi: float
    lower: BrokenTrajectory
    upper: BrokenTrajectory

    def contains(self, theta: float) -> bool:
        t = (theta - self.lo) % TWO_PI
        return 0 < t < (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {
            "interval": [round(self.lo, 10), round(self.hi, 10)],
            "ends": [list(self.lower.pair), list(self.upper.pair)],
            "end_signs": [self.lower.sign, self.upper.sign],
        }


@dataclass(frozen=True, eq=False)
class ConnectingManifold1D:
    source: str
    target: str
    arcs: tuple
    closed_components: int

    @property
    def boundary_ends(self) -> list[BrokenTrajectory]:
        return [e for a in self.arcs for e in (a.lower, a.upper)]

    def boundary_multiset(self) -> Counter:
        return Counter(e.pair for e in self.boundary_ends)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "arcs": [a.to_dict() for a in self.arcs],
            "ends": len(self.boundary_ends),
            "closed_components": self.closed_components,
        }


def _token(c: CriticalPoint) -> int:
    return int(c.stable_orientation)


def _check_pair(ctx: FlowContext, P: CriticalPoint, Q: CriticalPoint, diff: int):
    if P.index - Q.index != diff:
        raise ValueError(f"need |P| - |Q| = {diff}, got {P.id} (index {P.index}) and {Q.id} (index {Q.index})")
    if ctx.m.dim != 2:
        raise NotImplementedError("numerical moduli are implemented on surfaces")


def connecting_0d(P, Q, chart: UnstableSphereChart, cfg: FlowConfig | None = None) -> ConnectingManifold0D:
    """Signed flow lines from ``P`` to ``Q`` with ``|P| - |Q| = 1``.

    ``chart`` is the unstable-sphere chart of ``P`` (its configuration is
    used; ``cfg`` is accepted for interface symmetry and must match).
    """
    ctx = chart.ctx
    P = ctx.crit(P) if isinstance(P, str) else P
    Q = ctx.crit(Q) if isinstance(Q, str) else Q
    if chart.owner.id != P.id:
        raise ValueError("chart must belong to the source critical point")
    if cfg is not None and cfg != ctx.cfg:
        raise ValueError("cfg differs from the chart's configuration")
    _check_pair(ctx, P, Q, 1)
    orbits = []
    if P.index == 1:
        for e in chart.parameters():
            shot = chart.shot(e)
            if shot.omega == Q.id:
                tr = _with_target(shot.trajectory, Q)
                orbits.append(Orbit(P.id, Q.id, e, tr, _token(P) * _token(Q) * int(e), "+" if e > 0 else "-"))
    else:
        for t in chart.transitions:
            if t.saddle == Q.id:
                orbits.append(Orbit(P.id, Q.id, t.param, t.orbit, _token(P) * _token(Q) * t.arrival_side, f"{t.param:.8f}"))
    params = [o.param for o in orbits]
    for i in range(len(params)):
        for j in range(i):
            d = abs(params[i] - params[j]) % TWO_PI
            if min(d, TWO_PI - d) <= ctx.cfg.bisection_tol:
                raise UnresolvedLimit(f"orbits of {P.id}->{Q.id} at {params[j]} and {params[i]} are not separated")
    return ConnectingManifold0D(P.id, Q.id, tuple(orbits))


def _orbit_by_side(ctx: FlowContext, R: CriticalPoint, Q: CriticalPoint, side: int) -> Orbit | None:
    m0 = connecting_0d(R, Q, ctx.chart(R))
    for o in m0.orbits:
        if int(o.param) == side:
            return o
    return None


def connecting_1d(P, Q, chart: UnstableSphereChart, cfg: FlowConfig | None = None) -> ConnectingManifold1D:
    """Arcs of ``M^P_Q`` (``|P| - |Q| = 2``) with their broken ends.

    The boundary identity ``ends = union_R M^P_R x M^R_Q`` is checked as an
    exact multiset equality; a mismatch raises :class:`InconsistentBoundary`.
    """
    ctx = chart.ctx
    P = ctx.crit(P) if isinstance(P, str) else P
    Q = ctx.crit(Q) if isinstance(Q, str) else Q
    if chart.owner.id != P.id:
        raise ValueError("chart must belong to the source critical point")
    if cfg is not None and cfg != ctx.cfg:
        raise ValueError("cfg differs from the chart's configuration")
    _check_pair(ctx, P, Q, 2)
    ts = chart.transitions
    if not ts:
        targets = {chart.shot(t).omega for t in chart.parameters()}
        if len(targets) != 1:
            raise UnresolvedLimit(f"unstable circle of {P.id} reaches {sorted(map(str, targets))} without transitions")
        closed = 1 if targets == {Q.id} else 0
        return ConnectingManifold1D(P.id, Q.id, (), closed)

    first_orbits = {}
    for R in {t.saddle for t in ts}:
        for o in connecting_0d(P, R, chart).orbits:
            first_orbits[o.param] = o

    arcs = []
    n = len(ts)
    for k in range(n):
        t0, t1 = ts[k], ts[(k + 1) % n]
        lo = t0.param
        hi = t1.param + (TWO_PI if k + 1 == n else 0.0)
        if t0.right.omega != t1.left.omega:
            raise InconsistentBoundary(
                f"arc ({lo:.6g}, {hi:.6g}) of {P.id} has ends flowing to {t0.right.omega} and {t1.left.omega}"
            )
        if t0.right.omega != Q.id:
            continue
        ends = []
        for t, side in ((t0, t0.right_side), (t1, t1.left_side)):
            R = ctx.crit(t.saddle)
            second = _orbit_by_side(ctx, R, Q, side)
            if second is None:
                raise InconsistentBoundary(
                    f"arc of {P.id}->{Q.id} ends at {R.id} on side {side}, but that separatrix misses {Q.id}"
                )
            ends.append(BrokenTrajectory(R.id, first_orbits[t.param], second))
        arcs.append(Arc(lo, hi, ends[0], ends[1]))

    out = ConnectingManifold1D(P.id, Q.id, tuple(arcs), 0)
    check_boundary(ctx, out)
    return out


def expected_boundary(ctx: FlowContext, P: CriticalPoint, Q: CriticalPoint) -> Counter:
    """The multiset ``union_R M^P_R x M^R_Q`` of orbit-key pairs."""
    expected: Counter = Counter()
    for R in ctx.crits:
        if not Q.index < R.index < P.index:
            continue
        a = connecting_0d(P, R, ctx.chart(P))
        b = connecting_0d(R, Q, ctx.chart(R))
        for x in a.orbits:
            for y in b.orbits:
                expected[(x.key, y.key)] += 1
    return expected


def check_boundary(ctx: FlowContext, mod: ConnectingManifold1D) -> None:
    P, Q = ctx.crit(mod.source), ctx.crit(mod.target)
    got = mod.boundary_multiset()
    want = expected_boundary(ctx, P, Q)
    if got != want:
        missing = want - got
        extra = got - want
        raise InconsistentBoundary(
            f"broken ends of {P.id}->{Q.id}: {sum(got.values())} found, {sum(want.values())} expected "
            f"(missing {sorted(missing)[:3]}, unexpected {sorted(extra)[:3]})"
        )
    if len(mod.boundary_ends) % 2:
        raise InconsistentBoundary(f"{P.id}->{Q.id} has an odd number of ends")


@dataclass
class ModuliSummary:
    """All moduli of a surface scene, keyed by (source, target)."""

    zero: dict = field(default_factory=dict)
    one: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "zero": [self.zero[k].to_dict() for k in sorted(self.zero)],
            "one": [self.one[k].to_dict() for k in sorted(self.one)],
        }


def all_moduli(ctx: FlowContext, one: bool = True) -> ModuliSummary:
    """Every 0-dimensional moduli space, and the 1-dimensional ones when ``one``."""
    out = ModuliSummary()
    for P in ctx.crits:
        for Q in ctx.crits:
            d = P.index - Q.index
            if d == 1:
                out.zero[(P.id, Q.id)] = connecting_0d(P, Q, ctx.chart(P))
            elif d == 2 and one:
                out.one[(P.id, Q.id)] = connecting_1d(P, Q, ctx.chart(P))
    return out


def differential_matrix(ctx: FlowContext, moduli: ModuliSummary, k: int, signed: bool = True) -> np.ndarray:
    """Matrix of ``d: C_k -> C_{k-1}`` with entries the (signed) orbit counts."""
    src = [c.id for c in ctx.crits if c.index == k]
    dst = [c.id for c in ctx.crits if c.index == k - 1]
    D = np.zeros((len(dst), len(src)), dtype=np.int64)
    for j, p in enumerate(src):
        for i, q in enumerate(dst):
            mod = moduli.zero.get((p, q))
            if mod is not None:
                D[i, j] = mod.signed if signed else mod.count
    return D


def morse_complex(ctx: FlowContext, moduli: ModuliSummary | None = None, ring: str = "Z") -> FreeChainComplex:
    """The Morse complex: critical points graded by index, orbit counts as ``d``.

    Over Z the entries are signed counts, over Z/2 counts mod 2.
    """
    moduli = moduli if moduli is not None else all_moduli(ctx, one=False)
    n = max((c.index for c in ctx.crits), default=0)
    basis = {k: [c.id for c in ctx.crits if c.index == k] for k in range(n + 1)}
    d = {}
    for k in range(1, n + 1):
        D = differential_matrix(ctx, moduli, k, signed=ring == "Z")
        d[k] = [[int(a) for a in row] for row in D]
    return FreeChainComplex(ring, basis, d)
