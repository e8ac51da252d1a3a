"""Filtered complexes over Z/2 and their spectral sequences.

Pages are computed from the approximation subspaces

    Z^r_p = {x in F_p : dx in F_{p-r}},
    E^r_p = Z^r_p / (Z^{r-1}_{p-1} + d Z^{r-1}_{p+r-1}),

degree by degree, with exact GF(2) elimination.  Differentials ``d^r`` are
computed separately from the induced map on these quotients, so the
identity ``dim E^{r+1} = dim E^r - rank(d^r out) - rank(d^r in)`` is a
genuine check rather than a definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .complex import FreeChainComplex, homology
from .linalg import GF2Span, gf2_kernel


class FiltrationViolation(ValueError):
    pass


class NotStabilized(ArithmeticError):
    def __init__(self, r_max, r_needed):
        self.r_max = r_max
        self.r_needed = r_needed
        super().__init__(f"spectral sequence still moving at r_max={r_max} (stabilizes at r={r_needed})")


@dataclass(frozen=True)
class FilteredComplex:
    complex: FreeChainComplex
    filtration: dict  # label -> level

    def __post_init__(self):
        C = self.complex
        for lab, _ in C.labels():
            if lab not in self.filtration:
                raise FiltrationViolation(f"generator {lab!r} has no filtration level")
            if self.filtration[lab] < 0:
                raise FiltrationViolation(f"generator {lab!r} has negative filtration {self.filtration[lab]}")
        for src, dst, c in C.entries():
            if c % 2 and self.filtration[dst] > self.filtration[src]:
                raise FiltrationViolation(
                    f"d({src}) hits {dst}: filtration rises from {self.filtration[src]} to {self.filtration[dst]}"
                )

    @property
    def levels(self) -> list[int]:
        return sorted(set(self.filtration.values()))

    def to_dict(self) -> dict:
        C = self.complex
        return {
            "ring": C.ring,
            "generators": [
                {"label": lab, "degree": k, "filtration": self.filtration[lab]} for lab, k in C.labels()
            ],
            "differential": [[s, t, c] for s, t, c in C.entries()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "FilteredComplex":
        gens = data["generators"]
        C = FreeChainComplex.from_entries(
            data.get("ring", "Z2"), [(g["label"], int(g["degree"])) for g in gens], data.get("differential", [])
        )
        return cls(C, {g["label"]: int(g["filtration"]) for g in gens})

    @classmethod
    def from_json(cls, text: str) -> "FilteredComplex":
        return cls.from_dict(json.loads(text))


@dataclass
class SpectralSequencePages:
    """Dimensions and differentials of ``E^r_{p,q}`` for ``r = 1 .. r_last``.

    ``dims[r][(p, q)]`` is ``dim E^r_{p,q}``; ``ranks[r][(p, q)]`` is the
    rank of ``d^r : E^r_{p,q} -> E^r_{p-r,q+r-1}``; ``matrices[r][(p, q)]``
    holds ``(source labels, target labels, rows)`` for nonzero ``d^r``.
    """

    dims: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    r_stab: int = 1
    total_homology: dict = field(default_factory=dict)

    @property
    def r_last(self) -> int:
        return max(self.dims)

    def page(self, r: int) -> dict:
        return self.dims[min(r, self.r_last)]

    @property
    def infinity(self) -> dict:
        return self.dims[self.r_last]

    def nonzero(self, r: int) -> dict:
        return {k: v for k, v in self.page(r).items() if v}

    def convergence_ok(self) -> bool:
        """``sum_{p+q=n} dim E^inf_{p,q} = dim H_n`` for every degree."""
        sums: dict[int, int] = {}
        for (p, q), v in self.infinity.items():
            sums[p + q] = sums.get(p + q, 0) + v
        keys = set(sums) | set(self.total_homology)
        return all(sums.get(n, 0) == self.total_homology.get(n, 0) for n in keys)

    def to_table(self) -> dict:
        """Page table in the interchange schema used by :func:`compare_pages`."""
        pages = []
        for r in sorted(self.dims):
            pages.append({
                "r": r,
                "entries": [{"p": p, "q": q, "dim": v} for (p, q), v in sorted(self.dims[r].items()) if v],
                "ranks": [{"p": p, "q": q, "rank": v} for (p, q), v in sorted(self.ranks.get(r, {}).items()) if v],
            })
        return {"pages": pages, "r_stab": self.r_stab}


class _Engine:
    def __init__(self, fc: FilteredComplex):
        C = fc.complex
        if C.ring != "Z2":
            raise NotImplementedError("spectral sequences are computed over Z/2")
        self.fc = fc
        gens = sorted(C.labels(), key=lambda lk: (fc.filtration[lk[0]], lk[1]))
        order = sorted(range(len(gens)), key=lambda i: (fc.filtration[gens[i][0]], gens[i][1], i))
        self.gens = [gens[i] for i in order]
        self.bit = {lab: i for i, (lab, _) in enumerate(self.gens)}
        self.level = [fc.filtration[lab] for lab, _ in self.gens]
        self.degree = [k for _, k in self.gens]
        self.dcol = [0] * len(self.gens)
        for src, dst, c in C.entries():
            if c & 1:
                self.dcol[self.bit[src]] ^= 1 << self.bit[dst]
        self._z: dict = {}

    def d(self, v: int) -> int:
        out = 0
        while v:
            low = v & -v
            out ^= self.dcol[low.bit_length() - 1]
            v ^= low
        return out

    def filt_mask(self, p: int, n: int) -> list[int]:
        return [i for i in range(len(self.gens)) if self.degree[i] == n and self.level[i] <= p]

    def Z(self, r: int, p: int, n: int) -> list[int]:
        """Basis (bitsets) of ``Z^r_p`` in degree ``n``."""
        key = (r, p, n)
        if key in self._z:
            return self._z[key]
        idx = self.filt_mask(p, n)
        if r <= 0:
            out = [1 << i for i in idx]
        else:
            bad = 0
            for i in range(len(self.gens)):
                if self.degree[i] == n - 1 and self.level[i] > p - r:
                    bad |= 1 << i
            cols = [self.dcol[i] & bad for i in idx]
            out = []
            for combo in gf2_kernel(cols):
                v = 0
                j = 0
                while combo:
                    if combo & 1:
                        v ^= 1 << idx[j]
                    combo >>= 1
                    j += 1
                out.append(v)
        self._z[key] = out
        return out

    def denominator(self, r: int, p: int, n: int) -> list[int]:
        return self.Z(r - 1, p - 1, n) + [self.d(v) for v in self.Z(r - 1, p + r - 1, n + 1)]

    def quotient(self, r: int, p: int, n: int):
        """``(span, reps)`` with ``span`` built from denominator then numerator."""
        span = GF2Span()
        for v in self.denominator(r, p, n):
            span.add(v)
        nd = span.inserted
        reps = []
        for v in self.Z(r, p, n):
            idx = span.inserted
            if span.add(v):
                reps.append((idx, v))
        return span, nd, reps

    def label(self, v: int) -> str:
        return self.gens[v.bit_length() - 1][0]


def spectral_sequence(fc: FilteredComplex, r_max: int = 20) -> SpectralSequencePages:
    """Pages ``E^1 .. E^{r_stab}`` with differentials and a convergence check."""
    eng = _Engine(fc)
    if not eng.gens:
        return SpectralSequencePages({1: {}}, {1: {}}, {1: {}}, 1, {})
    levels = fc.levels
    pmin, pmax = levels[0], levels[-1]
    span_len = pmax - pmin
    degrees = sorted(set(eng.degree))
    out = SpectralSequencePages()
    r_last = span_len + 1
    last_nonzero = 0
    for r in range(1, r_last + 1):
        dims, ranks, mats = {}, {}, {}
        quot = {}
        for n in range(degrees[0], degrees[-1] + 1):
            for p in range(pmin, pmax + 1):
                span, nd, reps = eng.quotient(r, p, n)
                quot[(p, n)] = (span, nd, reps)
                dims[(p, n - p)] = len(reps)
        for (p, n), (span, nd, reps) in quot.items():
            tgt = quot.get((p - r, n - 1))
            if not reps or tgt is None or not tgt[2]:
                ranks[(p, n - p)] = 0
                continue
            tspan, tnd, treps = tgt
            pos = {idx: j for j, (idx, _) in enumerate(treps)}
            rows = [[0] * len(reps) for _ in treps]
            for j, (_, v) in enumerate(reps):
                residue, combo = tspan.reduce(eng.d(v))
                if residue:
                    raise ArithmeticError("d of a cycle representative left Z^r")
                k = 0
                while combo:
                    if combo & 1 and k in pos:
                        rows[pos[k]][j] ^= 1
                    combo >>= 1
                    k += 1
            rank = _rank_rows(rows)
            ranks[(p, n - p)] = rank
            if rank:
                last_nonzero = r
                mats[(p, n - p)] = (
                    [eng.label(v) for _, v in reps],
                    [eng.label(v) for _, v in treps],
                    rows,
                )
        out.dims[r] = dims
        out.ranks[r] = ranks
        out.matrices[r] = mats
    # E^{r+1} = H(E^r, d^r), checked dimension-wise
    for r in range(1, r_last):
        for (p, q), dim in out.dims[r].items():
            outgoing = out.ranks[r].get((p, q), 0)
            incoming = out.ranks[r].get((p + r, q - r + 1), 0)
            if out.dims[r + 1].get((p, q), 0) != dim - outgoing - incoming:
                raise ArithmeticError(f"E^{r + 1}_({p},{q}) is not the homology of (E^{r}, d^{r})")
    out.r_stab = last_nonzero + 1
    H = homology(fc.complex)
    out.total_homology = dict(H.betti)
    if not out.convergence_ok():
        raise ArithmeticError("E^infinity does not sum to the homology of the total complex")
    if out.r_stab > r_max:
        raise NotStabilized(r_max, out.r_stab)
    # keep pages up to the stable one
    for store in (out.dims, out.ranks, out.matrices):
        for r in [r for r in store if r > max(out.r_stab, 1)]:
            del store[r]
    return out


def _rank_rows(rows) -> int:
    span = GF2Span()
    for row in rows:
        v = 0
        for j, a in enumerate(row):
            if a:
                v |= 1 << j
        span.add(v)
    return len(span)


def compare_pages(computed: SpectralSequencePages | dict, expected: dict) -> list[str]:
    """Differences between a computed and an expected page table.

    Both tables use the :meth:`SpectralSequencePages.to_table` schema.
    Only pages and ``(p, q)`` positions present in both are compared; pages
    beyond the last listed one are taken to equal it.  The list is empty
    exactly when all shared dimensions and differential ranks agree; the
    first entry names the first mismatch.
    """
    got = computed.to_table() if isinstance(computed, SpectralSequencePages) else computed

    def index(table):
        pages = {}
        for page in table["pages"]:
            dims = {(e["p"], e["q"]): e["dim"] for e in page.get("entries", [])}
            ranks = {(e["p"], e["q"]): e["rank"] for e in page.get("ranks", [])}
            pages[page["r"]] = (dims, ranks)
        return pages

    a, b = index(got), index(expected)
    diffs = []
    last_a = max(a) if a else 0

    def pos(table_pages):
        return {k for dims, ranks in table_pages.values() for k in list(dims) + list(ranks)}

    keys = sorted(pos(a) | pos(b))
    for r in sorted(b):
        da, ra = a.get(min(r, last_a), ({}, {}))
        db, rb = b[r]
        for k in keys:
            if da.get(k, 0) != db.get(k, 0):
                diffs.append(f"E^{r}_{k}: computed dim {da.get(k, 0)}, expected {db.get(k, 0)}")
            if ra.get(k, 0) != rb.get(k, 0) and r <= last_a:
                diffs.append(f"d^{r} at {k}: computed rank {ra.get(k, 0)}, expected {rb.get(k, 0)}")
    return diffs


def truncate_table(table: dict, max_total: int) -> dict:
    """Restrict a page table to positions of total degree ``p + q <= max_total``."""
    pages = []
    for page in table["pages"]:
        pages.append({
            "r": page["r"],
            "entries": [e for e in page.get("entries", []) if e["p"] + e["q"] <= max_total],
            "ranks": [e for e in page.get("ranks", []) if e["p"] + e["q"] <= max_total],
        })
    return {"pages": pages, "r_stab": table.get("r_stab")}
