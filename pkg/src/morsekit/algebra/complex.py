"""Free chain complexes over Z and Z/2 and their homology."""

from __future__ import annotations

from dataclasses import dataclass, field

from .linalg import columns_to_bits, gf2_rank, smith_normal_form

RINGS = ("Z", "Z2")


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FreeChainComplex:
    """Graded free module with differential matrices.

    ``basis[k]`` lists the labels of degree ``k``; ``d[k]`` is the matrix of
    ``C_k -> C_{k-1}`` as a list of rows (one row per label of degree
    ``k-1``).  Missing degrees are zero.  Over ``Z2`` entries are kept
    reduced mod 2.
    """

    ring: str
    basis: dict
    d: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ring not in RINGS:
            raise ValueError(f"ring must be one of {RINGS}, got {self.ring!r}")
        if self.ring == "Z2":
            object.__setattr__(self, "d", {k: [[a & 1 for a in row] for row in M] for k, M in self.d.items()})
        for k, M in self.d.items():
            rows, cols = len(self.basis.get(k - 1, ())), len(self.basis.get(k, ()))
            if len(M) != rows or any(len(r) != cols for r in M):
                shape = (len(M), len(M[0]) if M else 0)
                raise ShapeMismatch(f"d_{k} has shape {shape}, expected ({rows}, {cols})")

    @property
    def degrees(self) -> list[int]:
        return sorted(k for k, b in self.basis.items() if b)

    def rank(self, k: int) -> int:
        return len(self.basis.get(k, ()))

    def matrix(self, k: int) -> list[list[int]]:
        """``d_k`` as a dense matrix (zero when absent)."""
        if k in self.d:
            return self.d[k]
        return [[0] * self.rank(k) for _ in range(self.rank(k - 1))]

    def labels(self) -> list[tuple[str, int]]:
        return [(lab, k) for k in sorted(self.basis) for lab in self.basis[k]]

    @classmethod
    def from_entries(cls, ring: str, generators, entries) -> "FreeChainComplex":
        """Build from ``[(label, degree)]`` and ``[(from, to, coeff)]`` triples."""
        basis: dict[int, list[str]] = {}
        where = {}
        for label, deg in generators:
            if label in where:
                raise ValueError(f"duplicate generator {label!r}")
            basis.setdefault(deg, []).append(label)
            where[label] = (deg, len(basis[deg]) - 1)
        d: dict[int, list[list[int]]] = {}
        for src, dst, c in entries:
            ks, js = where[src]
            kt, it = where[dst]
            if kt != ks - 1:
                raise ShapeMismatch(f"entry {src}->{dst} does not lower degree by one")
            M = d.setdefault(ks, [[0] * len(basis[ks]) for _ in basis.get(ks - 1, [])])
            M[it][js] += int(c)
        return cls(ring, basis, d)

    def entries(self):
        out = []
        for k in sorted(self.d):
            M = self.d[k]
            for i, row in enumerate(M):
                for j, a in enumerate(row):
                    if a:
                        out.append((self.basis[k][j], self.basis[k - 1][i], a))
        return out

    def to_dict(self) -> dict:
        return {
            "ring": self.ring,
            "generators": [{"label": lab, "degree": k} for lab, k in self.labels()],
            "differential": [list(e) for e in self.entries()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FreeChainComplex":
        gens = [(g["label"], int(g["degree"])) for g in d["generators"]]
        return cls.from_entries(d["ring"], gens, [tuple(e) for e in d["differential"]])


@dataclass(frozen=True)
class DSquaredWitness:
    degree: int  # d_{degree-1} d_{degree} != 0
    source: str
    target: str
    value: int


def _matmul(A, B, ring):
    n = len(B[0]) if B else 0
    out = []
    for row in A:
        r = [0] * n
        for k, a in enumerate(row):
            if a:
                for j, b in enumerate(B[k]):
                    if b:
                        r[j] += a * b
        out.append([x & 1 for x in r] if ring == "Z2" else r)
    return out


def verify_d_squared(C: FreeChainComplex) -> DSquaredWitness | None:
    """``None`` when ``d o d = 0``; otherwise the first nonzero entry."""
    for k in sorted(C.d):
        if k - 1 not in C.d:
            continue
        A, B = C.d[k - 1], C.d[k]
        if A and B and len(A[0]) != len(B):
            raise ShapeMismatch(f"d_{k - 1} and d_{k} do not compose")
        P = _matmul(A, B, C.ring)
        for i, row in enumerate(P):
            for j, a in enumerate(row):
                if a:
                    return DSquaredWitness(k, C.basis[k][j], C.basis[k - 2][i], a)
    return None


@dataclass(frozen=True)
class HomologyResult:
    ring: str
    betti: dict  # degree -> free rank
    torsion: dict  # degree -> invariant factors > 1 (Z only)

    def betti_list(self, top: int | None = None) -> list[int]:
        top = max(self.betti, default=0) if top is None else top
        return [self.betti.get(k, 0) for k in range(top + 1)]

    def to_dict(self) -> dict:
        return {
            "ring": self.ring,
            "betti": {str(k): v for k, v in sorted(self.betti.items())},
            "torsion": {str(k): v for k, v in sorted(self.torsion.items()) if v},
        }


def homology(C: FreeChainComplex) -> HomologyResult:
    """Ranks (and torsion over Z) of ``H_*(C)``.

    Over Z/2 ranks come from bitset elimination; over Z from the Smith
    normal form of each differential.
    """
    degrees = sorted(set(C.basis) | {k - 1 for k in C.d})
    rank_d: dict[int, int] = {}
    factors: dict[int, list[int]] = {}
    for k in degrees + [max(degrees, default=0) + 1]:
        M = C.d.get(k)
        if not M or not M[0]:
            rank_d[k] = 0
            factors[k] = []
            continue
        if C.ring == "Z2":
            rank_d[k] = gf2_rank(columns_to_bits(M))
            factors[k] = []
        else:
            f = smith_normal_form(M)
            rank_d[k] = len(f)
            factors[k] = [x for x in f if x > 1]
    betti, torsion = {}, {}
    for k in degrees:
        b = C.rank(k) - rank_d.get(k, 0) - rank_d.get(k + 1, 0)
        if b < 0:
            raise ArithmeticError("negative Betti number: d o d != 0")
        betti[k] = b
        torsion[k] = factors.get(k + 1, [])
    return HomologyResult(C.ring, betti, torsion)


def reduce_mod2(C: FreeChainComplex) -> FreeChainComplex:
    return FreeChainComplex("Z2", C.basis, C.d)
