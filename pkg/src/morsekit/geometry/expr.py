"""Scalar field expressions: parsing and forward-mode jets.

The grammar is a closed infix language::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('+' | '-') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xN``; ``x, y, z, w`` are accepted as aliases for
``x1 .. x4``. Functions are ``sin cos exp sqrt``.

Derivatives are obtained by propagating second-order dual numbers through
the expression tree. The propagation is unrolled once per field into
straight-line Python (one statement per dual component), so repeated
evaluation inside flow integrators costs a few microseconds.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "UndefinedAtPoint",
    "ScalarField",
    "parse",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
ALIASES = {"x": 0, "y": 1, "z": 2, "w": 3}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class ExprSyntaxError(ValueError):
    """Malformed expression; ``position`` is the 0-based column."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        self.message = message
        super().__init__(f"{message} at column {position + 1}: {text!r}")


class UndefinedAtPoint(ArithmeticError):
    """The field (or a requested derivative) is undefined at a point."""

    def __init__(self, what: str, point):
        self.what = what
        self.point = tuple(float(c) for c in point)
        super().__init__(f"{what} undefined at {self.point}")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[col]!r}", text, col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, ambient_dim: int | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.ambient_dim = ambient_dim

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, self.text, tok[2])

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.fail(f"expected {op!r}", tok)

    def parse(self):
        if self.peek()[0] == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = ("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = ("mul" if op == "*" else "div", node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return inner if tok[1] == "+" else ("neg", inner)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return ("pow", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, value, pos = tok
        if kind == "num":
            return ("num", float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return ("call", value, arg)
            index = _variable_index(value)
            if index is None:
                self.fail(f"unknown name {value!r}", tok)
            if self.ambient_dim is not None and index >= self.ambient_dim:
                self.fail(f"variable {value!r} exceeds ambient dimension {self.ambient_dim}", tok)
            return ("var", index)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of expression", tok)
        self.fail(f"unexpected token {value!r}", tok)


def _variable_index(name: str):
    if name in ALIASES:
        return ALIASES[name]
    m = re.fullmatch(r"x([1-9]\d*)", name)
    if m:
        return int(m.group(1)) - 1
    return None


def parse(text: str, ambient_dim: int | None = None):
    """Parse ``text`` into a nested-tuple expression tree."""
    return _Parser(text, ambient_dim).parse()


def max_variable(node) -> int:
    """Largest variable index used in ``node`` (-1 for constants)."""
    tag = node[0]
    if tag == "num":
        return -1
    if tag == "var":
        return node[1]
    if tag in ("neg",):
        return max_variable(node[1])
    if tag == "call":
        return max_variable(node[2])
    return max(max_variable(node[1]), max_variable(node[2]))


# ---------------------------------------------------------------------------
# jet code generation
# ---------------------------------------------------------------------------


def _undefined(what, x):
    raise UndefinedAtPoint(what, x)


class _Emitter:
    """Unrolls dual-number propagation into straight-line statements.

    A dual value is ``(v, g, h)``: a value expression, a sparse gradient
    ``{i: expr}`` and a sparse upper-triangular Hessian ``{(i, j): expr}``.
    Missing components are exactly zero.
    """

    def __init__(self, order: int):
        self.order = order
        self.lines: list[str] = []
        self.counter = 0

    def tmp(self, expr: str) -> str:
        name = f"t{self.counter}"
        self.counter += 1
        self.lines.append(f"{name} = {expr}")
        return name

    def emit(self, node):
        tag = node[0]
        if tag == "num":
            return (repr(node[1]), {}, {})
        if tag == "var":
            v = f"x[{node[1]}]"
            g = {node[1]: "1.0"} if self.order >= 1 else {}
            return (v, g, {})
        if tag == "neg":
            a = self.emit(node[1])
            return self._scale(a, "-1.0")
        if tag in ("add", "sub"):
            a = self.emit(node[1])
            b = self.emit(node[2])
            return self._addsub(a, b, "+" if tag == "add" else "-")
        if tag == "mul":
            return self._mul(self.emit(node[1]), self.emit(node[2]))
        if tag == "div":
            a = self.emit(node[1])
            b = self.emit(node[2])
            if not b[1]:
                # constant denominator
                self.lines.append(f"if {b[0]} == 0.0: _undefined('division by zero', x)")
                return self._scale(a, self.tmp(f"1.0 / {b[0]}"))
            return self._mul(a, self._reciprocal(b))
        if tag == "pow":
            base = self.emit(node[1])
            expo = node[2]
            if expo[0] == "num" or (expo[0] == "neg" and expo[1][0] == "num"):
                c = expo[1] if expo[0] == "num" else -expo[1][1]
                return self._pow_const(base, c)
            # a^b = exp(b log a)
            logged = self._unary_log(base)
            return self._unary("exp", self._mul(self.emit(expo), logged))
        if tag == "call":
            return self._unary(node[1], self.emit(node[2]))
        raise ValueError(f"bad node {node!r}")

    # -- combinators ------------------------------------------------------

    def _scale(self, a, s):
        v, g, h = a
        return (
            self.tmp(f"{s} * {v}"),
            {i: self.tmp(f"{s} * {e}") for i, e in g.items()},
            {k: self.tmp(f"{s} * {e}") for k, e in h.items()},
        )

    def _addsub(self, a, b, op):
        def comb(da, db):
            out = {}
            for k in sorted(set(da) | set(db)):
                if k in da and k in db:
                    out[k] = self.tmp(f"{da[k]} {op} {db[k]}")
                elif k in da:
                    out[k] = da[k]
                else:
                    out[k] = db[k] if op == "+" else self.tmp(f"-{db[k]}")
            return out

        return (self.tmp(f"{a[0]} {op} {b[0]}"), comb(a[1], b[1]), comb(a[2], b[2]))

    def _mul(self, a, b):
        va, ga, ha = a
        vb, gb, hb = b
        v = self.tmp(f"{va} * {vb}")
        g = {}
        for i in sorted(set(ga) | set(gb)):
            terms = []
            if i in gb:
                terms.append(f"{va} * {gb[i]}")
            if i in ga:
                terms.append(f"{vb} * {ga[i]}")
            g[i] = self.tmp(" + ".join(terms))
        h = {}
        if self.order >= 2:
            keys = set(ha) | set(hb)
            for i in ga:
                for j in gb:
                    keys.add((min(i, j), max(i, j)))
            for k in sorted(keys):
                i, j = k
                terms = []
                if k in hb:
                    terms.append(f"{va} * {hb[k]}")
                if k in ha:
                    terms.append(f"{vb} * {ha[k]}")
                if i in ga and j in gb:
                    terms.append(f"{ga[i]} * {gb[j]}")
                if i != j and j in ga and i in gb:
                    terms.append(f"{ga[j]} * {gb[i]}")
                h[k] = self.tmp(" + ".join(terms))
        return (v, g, h)

    def _chain(self, a, value, d1, d2):
        """Apply a unary map with derivatives ``d1``, ``d2`` at ``a``."""
        _, ga, ha = a
        g = {i: self.tmp(f"{d1} * {e}") for i, e in ga.items()}
        h = {}
        if self.order >= 2:
            keys = set(ha)
            idx = sorted(ga)
            for p, i in enumerate(idx):
                for j in idx[p:]:
                    keys.add((i, j))
            for k in sorted(keys):
                i, j = k
                terms = []
                if k in ha:
                    terms.append(f"{d1} * {ha[k]}")
                if i in ga and j in ga:
                    terms.append(f"{d2} * {ga[i]} * {ga[j]}")
                h[k] = self.tmp(" + ".join(terms))
        return (value, g, h)

    def _unary(self, name, a):
        v = a[0]
        smooth = bool(a[1])
        if name == "sin":
            val = self.tmp(f"_sin({v})")
            d1 = self.tmp(f"_cos({v})") if smooth else None
            return self._chain(a, val, d1, f"(-{val})") if smooth else (val, {}, {})
        if name == "cos":
            val = self.tmp(f"_cos({v})")
            if not smooth:
                return (val, {}, {})
            d1 = self.tmp(f"-_sin({v})")
            return self._chain(a, val, d1, f"(-{val})")
        if name == "exp":
            val = self.tmp(f"_exp({v})")
            return self._chain(a, val, val, val) if smooth else (val, {}, {})
        if name == "sqrt":
            if smooth and self.order >= 1:
                self.lines.append(f"if {v} <= 0.0: _undefined('sqrt derivative', x)")
            else:
                self.lines.append(f"if {v} < 0.0: _undefined('sqrt', x)")
            val = self.tmp(f"_sqrt({v})")
            if not smooth:
                return (val, {}, {})
            d1 = self.tmp(f"0.5 / {val}")
            d2 = self.tmp(f"-0.25 / ({val} * {v})")
            return self._chain(a, val, d1, d2)
        raise ValueError(f"unknown function {name!r}")

    def _unary_log(self, a):
        v = a[0]
        self.lines.append(f"if {v} <= 0.0: _undefined('power of non-positive base', x)")
        val = self.tmp(f"_log({v})")
        if not a[1]:
            return (val, {}, {})
        d1 = self.tmp(f"1.0 / {v}")
        d2 = self.tmp(f"-{d1} * {d1}")
        return self._chain(a, val, d1, d2)

    def _reciprocal(self, a):
        v = a[0]
        self.lines.append(f"if {v} == 0.0: _undefined('division by zero', x)")
        val = self.tmp(f"1.0 / {v}")
        d1 = self.tmp(f"-{val} * {val}")
        d2 = self.tmp(f"2.0 * {val} * {val} * {val}")
        return self._chain(a, val, d1, d2)

    def _pow_const(self, a, c):
        v = a[0]
        if c == 0.0:
            return ("1.0", {}, {})
        if c == 1.0:
            return a
        integral = float(c).is_integer()
        if not integral:
            self.lines.append(f"if {v} < 0.0: _undefined('fractional power of negative base', x)")
        if c < 0 or (not integral and c < 2):
            self.lines.append(f"if {v} == 0.0: _undefined('power at zero', x)")
        if integral:
            ci = int(c)
            val = self.tmp(f"{v} ** {ci}")
            if not a[1]:
                return (val, {}, {})
            d1 = self.tmp(f"{float(ci)!r} * {v} ** {ci - 1}") if ci != 2 else self.tmp(f"2.0 * {v}")
            d2 = self.tmp(f"{float(ci * (ci - 1))!r} * {v} ** {ci - 2}") if ci != 2 else "2.0"
        else:
            val = self.tmp(f"{v} ** {c!r}")
            if not a[1]:
                return (val, {}, {})
            d1 = self.tmp(f"{c!r} * {v} ** {c - 1!r}")
            d2 = self.tmp(f"{c * (c - 1)!r} * {v} ** {c - 2!r}")
        return self._chain(a, val, d1, d2)


_NAMESPACE = {
    "_sin": math.sin,
    "_cos": math.cos,
    "_exp": math.exp,
    "_sqrt": math.sqrt,
    "_log": math.log,
    "_undefined": _undefined,
}


def _compile(tree, n: int, order: int):
    em = _Emitter(order)
    v, g, h = em.emit(tree)
    body = ["def _jet(x):"] + ["    " + line for line in em.lines]
    if order == 0:
        body.append(f"    return {v}")
    elif order == 1:
        grad = ", ".join(g.get(i, "0.0") for i in range(n))
        body.append(f"    return {v}, ({grad},)")
    else:
        grad = ", ".join(g.get(i, "0.0") for i in range(n))
        rows = []
        for i in range(n):
            row = ", ".join(h.get((min(i, j), max(i, j)), "0.0") for j in range(n))
            rows.append(f"({row},)")
        body.append(f"    return {v}, ({grad},), ({', '.join(rows)},)")
    ns = dict(_NAMESPACE)
    exec("\n".join(body), ns)  # noqa: S102 - generated from a closed grammar
    return ns["_jet"]


@dataclass(frozen=True)
class ScalarField:
    """A smooth function on R^N given by an expression in ``x1 .. xN``."""

    expression: str
    ambient_dim: int
    name: str = "f"
    tree: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tree = parse(self.expression, self.ambient_dim)
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "_fns", {})

    def _fn(self, order):
        fns = self._fns
        if order not in fns:
            fns[order] = _compile(self.tree, self.ambient_dim, order)
        return fns[order]

    def _call(self, order, p):
        try:
            return self._fn(order)(p)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise UndefinedAtPoint(f"{self.name}: {exc}", p) from None

    def compiled(self, order: int):
        """The raw generated function of ``order`` taking a coordinate sequence."""
        return self._fn(order)

    def value(self, p) -> float:
        return self._call(0, _coords(p, self.ambient_dim))

    def value_grad(self, p):
        """Value and ambient gradient (as a float tuple) at ``p``."""
        return self._call(1, _coords(p, self.ambient_dim))

    def jet(self, p, order: int = 2):
        """Return ``(value, gradient, hessian)``; unrequested parts are None."""
        x = _coords(p, self.ambient_dim)
        if order == 0:
            return self._call(0, x), None, None
        if order == 1:
            v, g = self._call(1, x)
            return v, np.array(g), None
        v, g, h = self._call(2, x)
        return v, np.array(g), np.array(h)

    def shifted(self, extra: str, name: str | None = None) -> "ScalarField":
        """A new field ``(self) + (extra)``."""
        return ScalarField(f"({self.expression}) + ({extra})", self.ambient_dim, name or self.name)


def _coords(p, n):
    if type(p) is np.ndarray and p.shape == (n,):
        return p.tolist()
    x = tuple(float(c) for c in np.asarray(p, dtype=float).ravel())
    if len(x) != n:
        raise ValueError(f"expected {n} coordinates, got {len(x)}")
    return x


def eval_jet(f: ScalarField, p, order: int = 2):
    """Value, gradient and Hessian of ``f`` at ``p`` up to ``order``."""
    return f.jet(p, order)
