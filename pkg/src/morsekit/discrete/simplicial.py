"""Finite simplicial complexes with oriented boundary matrices."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

from ..algebra import FreeChainComplex, verify_d_squared


class DuplicateFacet(ValueError):
    pass


class InvalidVertex(ValueError):
    pass


def _vertex_key(v):
    # ints sort numerically and before strings; strings sort lexicographically
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


def simplex_label(s: tuple) -> str:
    return "[" + ",".join(str(v) for v in s) + "]"


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Downward-closed family of simplices, each stored as a sorted vertex tuple.

    Simplices are oriented by sorted vertex order, so the ``i``-th face of
    ``s`` (drop vertex ``i``) has incidence ``(-1)^i``.
    """

    vertices: tuple
    simplices: dict  # dim -> list of sorted tuples, in a fixed order
    index: dict  # simplex -> position within its dimension

    @property
    def dim(self) -> int:
        return max(self.simplices)

    def count(self, k: int) -> int:
        return len(self.simplices.get(k, ()))

    @property
    def f_vector(self) -> list[int]:
        return [self.count(k) for k in range(self.dim + 1)]

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector))

    def cells(self):
        for k in range(self.dim + 1):
            yield from self.simplices[k]

    def faces(self, s: tuple):
        """``(face, incidence)`` pairs of ``s``."""
        if len(s) == 1:
            return []
        return [(s[:i] + s[i + 1:], -1 if i % 2 else 1) for i in range(len(s))]

    def incidence(self, s: tuple, face: tuple) -> int:
        for f, sign in self.faces(s):
            if f == face:
                return sign
        return 0

    def boundary_matrix(self, k: int) -> list[list[int]]:
        """Integer matrix of ``C_k -> C_{k-1}`` (rows: (k-1)-simplices)."""
        rows = self.count(k - 1)
        M = [[0] * self.count(k) for _ in range(rows)]
        if k <= 0:
            return M
        for j, s in enumerate(self.simplices.get(k, ())):
            for face, sign in self.faces(s):
                M[self.index[face]][j] = sign
        return M

    def chain_complex(self, ring: str = "Z") -> FreeChainComplex:
        basis = {k: [simplex_label(s) for s in self.simplices[k]] for k in range(self.dim + 1)}
        d = {k: self.boundary_matrix(k) for k in range(1, self.dim + 1)}
        return FreeChainComplex(ring, basis, d)


def build_complex(facets) -> SimplicialComplex:
    """Closure of a facet list, with ``dd = 0`` checked over Z."""
    facets = [tuple(f) for f in facets]
    if not facets:
        raise ValueError("facet list is empty")
    seen = set()
    verts = set()
    top = []
    for f in facets:
        if not f:
            raise InvalidVertex("empty facet")
        for v in f:
            if v is None or isinstance(v, (bool, float)) or not isinstance(v, (int, str)):
                raise InvalidVertex(f"vertex {v!r} must be an int or a string label")
            if isinstance(v, str) and (not v or any(c.isspace() for c in v)):
                raise InvalidVertex(f"vertex label {v!r} is empty or contains whitespace")
        if len(set(f)) != len(f):
            raise InvalidVertex(f"facet {f} repeats a vertex")
        key = tuple(sorted(f, key=_vertex_key))
        if key in seen:
            raise DuplicateFacet(f"facet {f} appears twice")
        seen.add(key)
        verts.update(key)
        top.append(key)
    kinds = {type(v) for v in verts}
    if len(kinds) > 1:
        raise InvalidVertex("vertex labels mix integers and strings")
    closure: dict[int, set] = {}
    for s in top:
        for k in range(1, len(s) + 1):
            closure.setdefault(k - 1, set()).update(combinations(s, k))
    simplices = {k: sorted(v, key=lambda s: [_vertex_key(x) for x in s]) for k, v in sorted(closure.items())}
    index = {s: i for k in simplices for i, s in enumerate(simplices[k])}
    K = SimplicialComplex(tuple(sorted(verts, key=_vertex_key)), simplices, index)
    w = verify_d_squared(K.chain_complex("Z"))
    if w is not None:
        raise ArithmeticError(f"boundary of boundary nonzero: {w}")
    return K


def parse_facets(text: str) -> list[tuple]:
    """One facet per line, whitespace-separated labels; ``#`` starts a comment.

    Labels that are all integers are read as ints.
    """
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(tuple(line.split()))
    if rows and all(v.lstrip("-").isdigit() for r in rows for v in r):
        rows = [tuple(int(v) for v in r) for r in rows]
    return rows


def read_facets(path) -> SimplicialComplex:
    return build_complex(parse_facets(Path(path).read_text()))


# -- corpus ---------------------------------------------------------------


def full_simplex(n: int) -> SimplicialComplex:
    """The closed ``n``-simplex on vertices ``0..n``."""
    return build_complex([tuple(range(n + 1))])


def sphere_boundary(n: int) -> SimplicialComplex:
    """``n``-sphere as the boundary of the ``(n+1)``-simplex."""
    return build_complex(list(combinations(range(n + 2), n + 1)))


def torus7() -> SimplicialComplex:
    """Seven-vertex torus: triangles ``{i, i+1, i+3}`` and ``{i, i+2, i+3}`` mod 7."""
    tris = []
    for i in range(7):
        tris.append((i, (i + 1) % 7, (i + 3) % 7))
        tris.append((i, (i + 2) % 7, (i + 3) % 7))
    return build_complex(tris)


def rp2_6() -> SimplicialComplex:
    """Six-vertex projective plane (hemi-icosahedron)."""
    tris = [
        (1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 6), (1, 2, 6),
        (2, 3, 5), (2, 4, 5), (2, 4, 6), (3, 4, 6), (3, 5, 6),
    ]
    return build_complex(tris)


def corpus() -> dict[str, SimplicialComplex]:
    """Built-in test complexes keyed by name."""
    out = {f"sphere{n}": sphere_boundary(n) for n in range(1, 6)}
    out["torus7"] = torus7()
    out["rp2_6"] = rp2_6()
    for n in range(0, 4):
        out[f"simplex{n}"] = full_simplex(n)
    return out
