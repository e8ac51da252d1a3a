"""Extended Morse complexes with loop-space coefficients."""

from __future__ import annotations

from dataclasses import dataclass

from ..algebra import FilteredComplex, FreeChainComplex
from .classes import CoefficientClass
from .models import GroupRingModel, PontryaginModel


class LeibnizViolation(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class ExtendedComplexModel:
    """Coefficient matrix ``A = (a^x_y)`` over a model ring.

    ``filtered`` is the finite Z/2 complex spanned by ``b (x) x`` with ``b``
    a basis element of a Pontryagin model, total degree ``|b| + |x| <= cap``
    and filtration ``|x|``; it is ``None`` for group-ring models, whose
    underlying Z/2 module is infinite.
    """

    model: object
    indices: dict  # critical id -> index
    A: dict  # (x, y) -> model element
    cap: int
    filtered: FilteredComplex | None

    def a_squared(self) -> dict:
        """Nonzero entries of ``A^2``."""
        return _square(self.model, self.indices, self.A)

    def differential(self, x: str) -> dict:
        return {y: a for (s, y), a in sorted(self.A.items()) if s == x and a}

    def augmented(self) -> FreeChainComplex:
        """The Z/2 Morse complex obtained by sending every group element to 1."""
        if not isinstance(self.model, GroupRingModel):
            raise TypeError("augmentation is defined for group-ring models")
        top = max(self.indices.values())
        basis = {k: sorted(c for c, i in self.indices.items() if i == k) for k in range(top + 1)}
        d = {}
        for k in range(1, top + 1):
            d[k] = [[self.model.augmentation(self.A.get((x, y), frozenset())) for x in basis[k]] for y in basis[k - 1]]
        return FreeChainComplex("Z2", basis, d)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "cap": self.cap,
            "indices": dict(sorted(self.indices.items())),
            "A": [[x, y, self.model.format(a)] for (x, y), a in sorted(self.A.items()) if a],
            "complex": self.filtered.to_dict() if self.filtered is not None else None,
        }


def _square(model, indices, A) -> dict:
    out = {}
    for x in indices:
        for z in indices:
            if indices[x] - indices[z] < 2:
                continue
            acc = model.zero()
            for y in indices:
                if indices[z] < indices[y] < indices[x]:
                    a, b = A.get((x, y)), A.get((y, z))
                    if a and b:
                        acc = model.add(acc, model.mul(a, b))
            if acc:
                out[(x, z)] = acc
    return out


def assemble_extended_complex(crits, classes, model, cap: int = 6) -> ExtendedComplexModel:
    """Assemble ``d(b (x) x) = sum_y (b a^x_y) (x) y`` and check ``A^2 = 0``.

    ``crits`` maps critical ids to indices (or is a list of critical
    points); ``classes`` is an iterable of :class:`CoefficientClass`.
    Missing pairs have zero coefficient.
    """
    if isinstance(crits, dict):
        indices = dict(crits)
    else:
        indices = {c.id: c.index for c in crits}
    A = {}
    for c in classes:
        if not isinstance(c, CoefficientClass):
            raise TypeError("classes must be CoefficientClass instances")
        if c.degree != indices[c.source] - indices[c.target] - 1:
            raise ValueError(f"class of {c.source}->{c.target} has degree {c.degree}")
        if isinstance(model, PontryaginModel) and c.value and model.degree_of(c.value) != c.degree:
            raise ValueError(f"class of {c.source}->{c.target} is not homogeneous of degree {c.degree}")
        A[(c.source, c.target)] = c.value
    if isinstance(model, PontryaginModel) and cap < max(indices.values()) + 2:
        raise ValueError("degree cap must be at least the top index plus 2")
    sq = _square(model, indices, A)
    if sq:
        (x, z), val = sorted(sq.items())[0]
        raise LeibnizViolation(f"A^2 has entry {model.format(val)} at ({x}, {z})")
    filtered = _filtered(model, indices, A, cap) if isinstance(model, PontryaginModel) else None
    return ExtendedComplexModel(model, indices, A, cap, filtered)


def _gen(b: str, x: str) -> str:
    return f"{b}*{x}"


def _filtered(model: PontryaginModel, indices, A, cap) -> FilteredComplex:
    gens, filt, entries = [], {}, []
    crit_order = sorted(indices, key=lambda c: (indices[c], c))
    for x in crit_order:
        for b in model.labels():
            deg = model.degree[b] + indices[x]
            if deg > cap:
                continue
            lab = _gen(b, x)
            gens.append((lab, deg))
            filt[lab] = indices[x]
    present = {lab for lab, _ in gens}
    for x in crit_order:
        for b in model.labels():
            src = _gen(b, x)
            if src not in present:
                continue
            for y in crit_order:
                a = A.get((x, y))
                if not a:
                    continue
                for c in sorted(model.mul(frozenset([b]), a)):
                    dst = _gen(c, y)
                    if dst in present:
                        entries.append((src, dst, 1))
    C = FreeChainComplex.from_entries("Z2", gens, entries)
    return FilteredComplex(C, filt)


def sphere_extended_model(n: int, cap: int = 6, model: PontryaginModel | None = None) -> ExtendedComplexModel:
    """Extended complex of the two-critical-point function on ``S^n``.

    The only coefficient is the generator ``u`` in degree ``n - 1``, the
    class of the moduli sphere ``M^N_S``.
    """
    from .models import sphere_loop_model

    model = model or sphere_loop_model(n, cap)
    cls = CoefficientClass("N", "S", n - 1, model.element("u"))
    return assemble_extended_complex({"S": 0, "N": n}, [cls], model, cap)


def path_loop_pages(n: int, cap: int = 6) -> dict:
    """Expected page table of ``Omega S^n -> P S^n -> S^n`` through total degree ``cap - 1``.

    Built without the engine: the loop homology dimensions come from
    :func:`forced_loop_dimensions`, ``E^2 = H(S^n) (x) H(Omega S^n)`` sits in
    columns ``p = 0, n``, the transgression ``d^n`` is an isomorphism
    wherever its target is in range, and ``E^{n+1}`` is a point.  Pages
    ``1 .. n`` coincide for the two-critical-point model.
    """
    from .models import forced_loop_dimensions

    forced = forced_loop_dimensions(n, cap)
    if len(forced) != 1:
        raise ValueError(f"loop homology of S^{n} is not forced below degree {cap}")
    b = forced[0]
    top = cap - 1
    grid = {(p, q): b[q] for p in (0, n) for q in range(cap) if b[q] and p + q <= top}
    ranks = {(n, q): 1 for (p, q) in grid if p == n and (0, q + n - 1) in grid}
    pages = []
    for r in range(1, n + 1):
        pages.append({
            "r": r,
            "entries": [{"p": p, "q": q, "dim": v} for (p, q), v in sorted(grid.items())],
            "ranks": [{"p": p, "q": q, "rank": v} for (p, q), v in sorted(ranks.items())] if r == n else [],
        })
    pages.append({"r": n + 1, "entries": [{"p": 0, "q": 0, "dim": 1}], "ranks": []})
    return {"pages": pages, "r_stab": n + 1}
