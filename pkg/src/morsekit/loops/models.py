"""Coefficient rings for extended Morse complexes.

Two models, both over Z/2 with elements stored as frozensets of basis
keys (a sum of distinct basis elements):

* :class:`PontryaginModel` -- a truncated graded algebra given by its basis
  per degree and multiplication triples, standing in for ``H_*(Omega M)``;
* :class:`GroupRingModel` -- Laurent polynomials ``Z/2[t_1^+-1, ..., t_g^+-1]``,
  the group ring of a free abelian fundamental group.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

ZERO = frozenset()


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PontryaginModel:
    """Truncated graded Z/2-algebra.

    ``basis[k]`` lists labels of degree ``k`` for ``k = 0..cap``;
    ``table[(a, b)]`` is the product ``a * b`` as a frozenset of labels.
    Products of total degree above ``cap`` are truncated to zero.
    """

    cap: int
    basis: dict
    table: dict
    name: str = "pontryagin"
    degree: dict = field(init=False, repr=False)

    def __post_init__(self):
        deg = {}
        for k, labs in self.basis.items():
            for lab in labs:
                if lab in deg:
                    raise ModelError(f"basis label {lab!r} appears twice")
                deg[lab] = k
        object.__setattr__(self, "degree", deg)
        for (a, b), c in self.table.items():
            for lab in c:
                if deg[lab] != deg[a] + deg[b]:
                    raise ModelError(f"{a}*{b} contains {lab} of the wrong degree")
        if len(self.basis.get(0, [])) != 1:
            raise ModelError("degree 0 must be one-dimensional (the unit)")

    @property
    def unit(self) -> str:
        return self.basis[0][0]

    def one(self) -> frozenset:
        return frozenset([self.unit])

    def zero(self) -> frozenset:
        return ZERO

    def element(self, *labels) -> frozenset:
        out = set()
        for lab in labels:
            if lab not in self.degree:
                raise ModelError(f"unknown basis label {lab!r}")
            out ^= {lab}
        return frozenset(out)

    def labels(self) -> list[str]:
        return [lab for k in sorted(self.basis) for lab in self.basis[k]]

    def add(self, a: frozenset, b: frozenset) -> frozenset:
        return a ^ b

    def mul_basis(self, a: str, b: str) -> frozenset:
        if self.degree[a] + self.degree[b] > self.cap:
            return ZERO
        return self.table.get((a, b), ZERO)

    def mul(self, a: frozenset, b: frozenset) -> frozenset:
        out = set()
        for x in a:
            for y in b:
                out ^= self.mul_basis(x, y)
        return frozenset(out)

    def degree_of(self, a: frozenset) -> int | None:
        """Degree of a homogeneous element; ``None`` for zero."""
        ds = {self.degree[x] for x in a}
        if len(ds) > 1:
            raise ModelError(f"element {sorted(a)} is not homogeneous")
        return ds.pop() if ds else None

    def format(self, a: frozenset) -> str:
        return " + ".join(sorted(a, key=lambda x: (self.degree[x], x))) or "0"

    def check_associativity(self):
        """Exhaustive associativity and unitality on the truncated range.

        Returns ``None`` or the first failing triple.
        """
        labs = self.labels()
        one = self.one()
        for a in labs:
            e = frozenset([a])
            if self.mul(one, e) != e or self.mul(e, one) != e:
                return (self.unit, a, "unit")
        for a, b, c in itertools.product(labs, repeat=3):
            if self.degree[a] + self.degree[b] + self.degree[c] > self.cap:
                continue
            A, B, C = (frozenset([x]) for x in (a, b, c))
            if self.mul(self.mul(A, B), C) != self.mul(A, self.mul(B, C)):
                return (a, b, c)
        return None

    def to_dict(self) -> dict:
        return {
            "kind": "pontryagin",
            "name": self.name,
            "cap": self.cap,
            "basis": {str(k): list(v) for k, v in sorted(self.basis.items())},
            "products": [[a, b, c] for (a, b), cs in sorted(self.table.items()) for c in sorted(cs)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "PontryaginModel":
        if data.get("kind", "pontryagin") != "pontryagin":
            raise ModelError(f"not a Pontryagin model: {data.get('kind')!r}")
        basis = {int(k): list(v) for k, v in data["basis"].items()}
        table: dict = {}
        for a, b, c in data.get("products", []):
            table[(a, b)] = table.get((a, b), ZERO) ^ frozenset([c])
        return cls(int(data["cap"]), basis, table, data.get("name", "pontryagin"))

    @classmethod
    def from_json(cls, text: str) -> "PontryaginModel":
        return cls.from_dict(json.loads(text))


def _power(k: int) -> str:
    return "1" if k == 0 else ("u" if k == 1 else f"u^{k}")


def sphere_loop_model(n: int, cap: int = 6) -> PontryaginModel:
    """``H_*(Omega S^n; Z/2) = Z/2[u]``, ``|u| = n - 1``, truncated at degree ``cap``."""
    if n < 2:
        raise ModelError("the polynomial loop model needs n >= 2")
    step = n - 1
    basis = {k: [] for k in range(cap + 1)}
    ks = [k for k in range(cap + 1) if k * step <= cap]
    for k in ks:
        basis[k * step].append(_power(k))
    table = {}
    for j in ks:
        for k in ks:
            if (j + k) * step <= cap:
                table[(_power(j), _power(k))] = frozenset([_power(j + k)])
    return PontryaginModel(cap, basis, table, f"Omega S^{n}")


def forced_loop_dimensions(n: int, cap: int, max_dim: int = 2) -> list[list[int]]:
    """All dimension vectors of ``H_k(Omega S^n)``, ``k < cap``, allowed by acyclicity.

    The two-critical-point function on ``S^n`` gives the extended complex
    ``H (x) m  <-  H (x) M`` with the differential multiplication by the
    degree ``n-1`` class of the moduli space.  The total homology must be
    that of a point, which constrains ``b_k = dim H_k``.  The search runs
    over ``b_k`` in ``0..max_dim``; each block of the differential is
    taken at maximal rank, which loses nothing since homology only shrinks
    as ranks grow.  Every consistent vector is returned, so a single answer
    means the dimensions are forced.
    """
    step = n - 1
    top = cap  # b_cap is enumerated but only b_0..b_{cap-1} are pinned down
    found = set()
    for b in itertools.product(range(max_dim + 1), repeat=top + 1):
        if b[0] != 1:
            continue
        # maximal rank of each block H_j -> H_{j+n-1}
        ranks = {j: min(b[j], b[j + step]) for j in range(top + 1 - step)}
        ok = True
        # total degree t holds H_t (x) m and H_{t-n} (x) M
        for t in range(top + 1):
            m_part = b[t] - ranks.get(t - step, 0)
            M_part = b[t - n] - ranks[t - n] if t >= n else 0
            if m_part + M_part != (1 if t == 0 else 0):
                ok = False
                break
        if ok:
            found.add(b[:cap])
    return [list(b) for b in sorted(found)]


def verify_sphere_model(model: PontryaginModel, n: int) -> bool:
    """The catalog model agrees with the forced dimensions and ``u`` acts bijectively."""
    forced = forced_loop_dimensions(n, model.cap)
    if len(forced) != 1:
        return False
    dims = [len(model.basis.get(k, [])) for k in range(model.cap)]
    if dims != forced[0]:
        return False
    u = model.element(_power(1))
    for k in range(model.cap - (n - 1) + 1):
        for lab in model.basis.get(k, []):
            if not model.mul(frozenset([lab]), u):
                return False
    return model.check_associativity() is None


# -- group rings ------------------------------------------------------------


@dataclass(frozen=True)
class GroupRingModel:
    """``Z/2[Z^g]``: elements are frozensets of exponent tuples."""

    rank: int = 2
    name: str = "Z2[pi1]"

    def one(self) -> frozenset:
        return frozenset([(0,) * self.rank])

    def zero(self) -> frozenset:
        return ZERO

    def monomial(self, exponents) -> frozenset:
        exponents = tuple(int(e) for e in exponents)
        if len(exponents) != self.rank:
            raise ModelError(f"expected {self.rank} exponents, got {exponents}")
        return frozenset([exponents])

    def add(self, a: frozenset, b: frozenset) -> frozenset:
        return a ^ b

    def mul(self, a: frozenset, b: frozenset) -> frozenset:
        out = set()
        for x in a:
            for y in b:
                out ^= {tuple(i + j for i, j in zip(x, y))}
        return frozenset(out)

    def degree_of(self, a: frozenset) -> int | None:
        return 0 if a else None

    def augmentation(self, a: frozenset) -> int:
        """Image under ``t_i -> 1``."""
        return len(a) % 2

    def format(self, a: frozenset) -> str:
        if not a:
            return "0"
        terms = []
        for e in sorted(a):
            parts = []
            for i, k in enumerate(e):
                if k == 1:
                    parts.append(f"t{i + 1}")
                elif k:
                    parts.append(f"t{i + 1}^{k}")
            terms.append(" ".join(parts) or "1")
        return " + ".join(terms)

    def to_dict(self) -> dict:
        return {"kind": "group_ring", "name": self.name, "rank": self.rank}
