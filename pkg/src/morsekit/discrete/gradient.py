"""Acyclic matchings, V-paths and the discrete Morse complex."""

from __future__ import annotations

import random
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from ..algebra import FreeChainComplex, homology, verify_d_squared
from .simplicial import SimplicialComplex, simplex_label


class AcyclicityViolated(ValueError):
    pass


class HomologyMismatch(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteVectorField:
    """Partial matching ``face -> coface`` on the face poset of ``K``."""

    K: SimplicialComplex
    up: dict  # face -> coface

    def __post_init__(self):
        down = {}
        for s, t in self.up.items():
            if len(t) != len(s) + 1 or not set(s) < set(t):
                raise ValueError(f"{s} is not a codimension-1 face of {t}")
            if t in down or t in self.up or s in down:
                raise ValueError(f"cell {t if t in down or t in self.up else s} is matched twice")
            down[t] = s
        object.__setattr__(self, "down", down)
        self._check_acyclic()

    def _check_acyclic(self):
        # modified Hasse digraph: boundary edges t -> s, reversed for matched pairs
        graph: dict[tuple, set] = {c: set() for c in self.K.cells()}
        for t in self.K.cells():
            for s, _ in self.K.faces(t):
                if self.up.get(s) == t:
                    graph[t].add(s)  # s -> t, stored as "t depends on s"
                else:
                    graph[s].add(t)
        try:
            tuple(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            cyc = exc.args[1]
            raise AcyclicityViolated(f"closed V-path through {[simplex_label(c) for c in cyc[:4]]}") from None

    def is_critical(self, c: tuple) -> bool:
        return c not in self.up and c not in self.down

    def critical(self, k: int | None = None) -> list[tuple]:
        dims = range(self.K.dim + 1) if k is None else [k]
        return [c for d in dims for c in self.K.simplices.get(d, ()) if self.is_critical(c)]

    def critical_counts(self) -> list[int]:
        return [len(self.critical(k)) for k in range(self.K.dim + 1)]


def _collapse_matching(K: SimplicialComplex, pick) -> dict:
    """Matching from alternating elementary collapses and maximal-cell removals.

    ``pick(candidates, kind)`` chooses among free pairs (``kind="pair"``) or
    maximal cells (``kind="cell"``); returning ``None`` for pairs forces a
    removal.  Any such sequence yields an acyclic matching.
    """
    alive = set(K.cells())
    cofaces: dict[tuple, set] = {c: set() for c in alive}
    for t in alive:
        for s, _ in K.faces(t):
            cofaces[s].add(t)
    up = {}
    while alive:
        free = [(s, next(iter(cofaces[s]))) for s in alive if len(cofaces[s]) == 1]
        choice = pick(free, "pair") if free else None
        if choice is not None:
            s, t = choice
            up[s] = t
            removed = (s, t)
        else:
            maximal = [c for c in alive if not cofaces[c]]
            removed = (pick(maximal, "cell"),)
        for c in removed:
            alive.discard(c)
            cofaces.pop(c, None)
            for f, _ in K.faces(c):
                if f in cofaces:
                    cofaces[f].discard(c)
    return up


def _order_key(K, priority):
    rank = {v: i for i, v in enumerate(priority)} if priority is not None else {v: i for i, v in enumerate(K.vertices)}
    return lambda c: (len(c), sorted(rank[v] for v in c))


def greedy_discrete_gradient(K: SimplicialComplex, priority=None) -> DiscreteVectorField:
    """Collapse-based acyclic matching with lexicographic vertex priority.

    Free pairs are collapsed in priority order (highest cells first); when
    none exist, the lexicographically last maximal cell becomes critical.
    """
    key = _order_key(K, priority)

    def pick(cands, kind):
        if kind == "pair":
            return max(cands, key=lambda st: (key(st[1]), key(st[0])))
        return max(cands, key=key)

    return DiscreteVectorField(K, _collapse_matching(K, pick))


def random_discrete_gradient(K: SimplicialComplex, rng: random.Random, p_critical: float = 0.15) -> DiscreteVectorField:
    """Random acyclic matching; ``p_critical`` is the chance of removing a cell instead of collapsing."""

    def pick(cands, kind):
        if kind == "pair" and rng.random() < p_critical:
            return None
        ordered = sorted(cands)
        return ordered[rng.randrange(len(ordered))]

    return DiscreteVectorField(K, _collapse_matching(K, pick))


# -- V-paths ----------------------------------------------------------------


@dataclass(frozen=True)
class VPath:
    """``tau > a_0 < b_0 > a_1 < b_1 ... > sigma`` with its sign."""

    cells: tuple
    sign: int

    @property
    def source(self):
        return self.cells[0]

    @property
    def target(self):
        return self.cells[-1]


def v_paths(V: DiscreteVectorField, tau: tuple, sigma: tuple | None = None) -> list[VPath]:
    """All gradient paths from critical ``tau`` to critical cells one dimension down.

    Sign: product of incidences along face steps, times ``-<d b, a>`` for
    every matched step ``a -> b``.
    """
    K = V.K
    out = []
    # stack of (path cells, current face, sign so far)
    stack = [((tau, a), a, e) for a, e in K.faces(tau)]
    while stack:
        cells, a, sign = stack.pop()
        if V.is_critical(a):
            if sigma is None or a == sigma:
                out.append(VPath(cells, sign))
            continue
        b = V.up.get(a)
        if b is None:
            continue  # a is matched downwards: the path dies
        step = -K.incidence(b, a)
        for a2, e in K.faces(b):
            if a2 != a:
                stack.append((cells + (b, a2), a2, sign * step * e))
    out.sort(key=lambda p: p.cells)
    return out


def _flow(V: DiscreteVectorField, memo: dict, a: tuple) -> dict:
    """Signed critical-cell chain reached from face ``a`` (memoized)."""
    if a in memo:
        return memo[a]
    K = V.K
    if V.is_critical(a):
        res = {a: 1}
    elif a not in V.up:
        res = {}
    else:
        b = V.up[a]
        step = -K.incidence(b, a)
        res = {}
        for a2, e in K.faces(b):
            if a2 == a:
                continue
            for c, w in _flow(V, memo, a2).items():
                res[c] = res.get(c, 0) + step * e * w
        res = {c: w for c, w in res.items() if w}
    memo[a] = res
    return res


def discrete_morse_complex(V: DiscreteVectorField, ring: str = "Z", check_homology: bool = True) -> FreeChainComplex:
    """Chain complex on critical cells with V-path counts as differential.

    ``dd = 0`` is verified; with ``check_homology`` the homology is compared
    with that of the full simplicial complex, and the weak Morse
    inequalities are asserted.
    """
    K = V.K
    basis = {k: [simplex_label(c) for c in V.critical(k)] for k in range(K.dim + 1)}
    pos = {c: i for k in range(K.dim + 1) for i, c in enumerate(V.critical(k))}
    memo: dict = {}
    d = {}
    for k in range(1, K.dim + 1):
        crit_k, crit_low = V.critical(k), V.critical(k - 1)
        M = [[0] * len(crit_k) for _ in crit_low]
        for j, tau in enumerate(crit_k):
            for a, e in K.faces(tau):
                for c, w in _flow(V, memo, a).items():
                    M[pos[c]][j] += e * w
        d[k] = M
    C = FreeChainComplex(ring, basis, d)
    w = verify_d_squared(C)
    if w is not None:
        raise ArithmeticError(f"discrete Morse differential has d^2 != 0: {w}")
    if check_homology:
        H = homology(C)
        H_K = homology(K.chain_complex(ring))
        if H.betti_list(K.dim) != H_K.betti_list(K.dim) or _torsion(H) != _torsion(H_K):
            raise HomologyMismatch(f"Morse complex homology {H.to_dict()} differs from simplicial {H_K.to_dict()}")
        b2 = homology(K.chain_complex("Z2")).betti_list(K.dim)
        for k, n in enumerate(V.critical_counts()):
            if n < b2[k]:
                raise ArithmeticError(f"weak Morse inequality fails in degree {k}: {n} < {b2[k]}")
    return C


def _torsion(H):
    return {k: v for k, v in H.torsion.items() if v}
