"""Exact linear algebra: GF(2) bitset elimination and integer Smith normal form.

GF(2) vectors are Python ints read as bitsets (bit ``i`` is basis element
``i``).  Integer matrices are lists of lists of Python ints, so nothing here
ever touches floating point.
"""

from __future__ import annotations


class GF2Span:
    """Incrementally built subspace of GF(2)^n with coordinate tracking.

    ``add(v)`` inserts ``v`` and reports whether it was independent.
    ``reduce(v)`` returns ``(residue, combo)`` where ``combo`` is a bitset
    over insertion order with ``v = residue + sum of those inserts``; the
    residue is zero exactly when ``v`` lies in the span.
    """

    def __init__(self):
        self._rows: dict[int, tuple[int, int]] = {}  # pivot bit -> (vector, combo)
        self._count = 0

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def inserted(self) -> int:
        return self._count

    def reduce(self, v: int) -> tuple[int, int]:
        combo = 0
        rows = self._rows
        while v:
            row = rows.get(v.bit_length() - 1)
            if row is None:
                break
            v ^= row[0]
            combo ^= row[1]
        return v, combo

    def add(self, v: int) -> bool:
        residue, combo = self.reduce(v)
        idx = self._count
        self._count += 1
        if residue == 0:
            return False
        self._rows[residue.bit_length() - 1] = (residue, combo ^ (1 << idx))
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0

    def vectors(self) -> list[int]:
        return [self._rows[k][0] for k in sorted(self._rows)]


def gf2_rank(vectors) -> int:
    span = GF2Span()
    for v in vectors:
        span.add(v)
    return len(span)


def columns_to_bits(matrix: list[list[int]]) -> list[int]:
    """Columns of a 0/1 matrix (list of rows) as bitsets over the rows."""
    if not matrix:
        return []
    ncols = len(matrix[0])
    cols = [0] * ncols
    for i, row in enumerate(matrix):
        for j, a in enumerate(row):
            if a & 1:
                cols[j] |= 1 << i
    return cols


def gf2_kernel(columns: list[int]) -> list[int]:
    """Basis of the kernel of the map whose columns are the given bitsets.

    Kernel vectors are bitsets over the column indices.
    """
    span = GF2Span()
    kernel = []
    for j, c in enumerate(columns):
        residue, combo = span.reduce(c)
        if residue == 0:
            kernel.append(combo | (1 << j))
        span.add(c)
    return kernel


# -- integers -----------------------------------------------------------


def smith_normal_form(matrix: list[list[int]]) -> list[int]:
    """Nonzero invariant factors ``d_1 | d_2 | ...`` of an integer matrix.

    Elementary row and column operations with exact ints; the pivot is
    always an entry of smallest absolute value in the remaining block.
    """
    A = [list(map(int, row)) for row in matrix]
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < m and t < n:
        # smallest nonzero entry in the lower-right block
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                a = row[j]
                if a and (best is None or abs(a) < best[0]):
                    best = (abs(a), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            done = True
            for i in range(t + 1, m):
                q = A[i][t]
                if q:
                    k = q // p
                    if k:
                        ri, rt = A[i], A[t]
                        for c in range(t, n):
                            ri[c] -= k * rt[c]
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                q = A[t][j]
                if q:
                    k = q // p
                    if k:
                        for row in A:
                            row[j] -= k * row[t]
                    if A[t][j]:
                        done = False
            if done:
                # divisibility: fold any entry not divisible by p into row t
                bad = None
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if A[i][j] % p:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                rt, rb = A[t], A[bad]
                for c in range(t, n):
                    rt[c] += rb[c]
                continue
            # move the smallest remaining entry of row/column t to the pivot
            best = (abs(p), t, t)
            for i in range(t + 1, m):
                if A[i][t] and abs(A[i][t]) < best[0]:
                    best = (abs(A[i][t]), i, t)
            for j in range(t + 1, n):
                if A[t][j] and abs(A[t][j]) < best[0]:
                    best = (abs(A[t][j]), t, j)
            _, i, j = best
            if i != t:
                A[t], A[i] = A[i], A[t]
            if j != t:
                for row in A:
                    row[t], row[j] = row[j], row[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


def integer_rank(matrix: list[list[int]]) -> int:
    return len(smith_normal_form(matrix))
