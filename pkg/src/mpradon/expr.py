"""Coefficient expressions for vector fields.

Expressions are sympy trees over the symbols ``x1, ..., xn`` built from
constants, variables, ``+``, ``*``, integer powers, ``exp`` and the flat
function ``flat(u) = exp(-1/u^2)`` (``flat(0) = 0``); quotients and
negative integer powers are allowed so that derivatives of flat terms can
be written back as text.  The derivative of
``flat(u)`` is ``2 u^{-3} flat(u)``, so differentiation stays inside this
node set and every derivative of a flat term is a rational function times
a flat factor.

Numerical evaluation follows the flat-point convention: a product that
contains a flat factor evaluating to exactly zero is zero, whatever the
other (possibly singular) factors are.

Textual grammar (EBNF)::

    expr   = term , { ("+" | "-") , term } ;
    term   = unary , { ("*" | "/") , unary } ;
    unary  = [ "-" | "+" ] , power ;
    power  = atom , [ "^" , unary ] ;           (* exponent: integer constant *)
    atom   = number | var | func , "(" , expr , ")" | "(" , expr , ")" ;
    func   = "exp" | "flat" ;
    var    = "x" , digit , { digit } ;           (* x1 ... xn *)
    number = digit , { digit } , [ "." , digit , { digit } ] ;
"""

from __future__ import annotations

import functools
import re

import numpy as np
import sympy as sp


class flat(sp.Function):
    """``exp(-1/u^2)`` extended by zero at ``u = 0``."""

    @classmethod
    def eval(cls, u):
        if u.is_zero:
            return sp.Integer(0)
        return None

    def fdiff(self, argindex=1):
        u = self.args[0]
        return 2 * u**-3 * flat(u)


def symbols(n: int):
    return sp.symbols(" ".join(f"x{i + 1}" for i in range(n)), real=True) if n > 1 else \
        (sp.Symbol("x1", real=True),)


class ParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|(x\d+)|(exp|flat)|(.))")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, var, fn, other = m.groups()
        if num:
            out.append(("num", num))
        elif var:
            out.append(("var", var))
        elif fn:
            out.append(("fn", fn))
        elif other and not other.isspace():
            if other not in "+-*/^()":
                raise ParseError(f"unexpected character {other!r} at {m.start(4)}")
            out.append(("op", other))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text, n):
        self.toks = _tokenize(text)
        self.i = 0
        self.syms = symbols(n)
        self.n = n

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ParseError(f"expected {value or kind}, got {tok[1]!r}")
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input at token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            elif rhs == 0:
                raise ParseError("division by zero")
            else:
                e = e / rhs
        return e

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.power()
        if self.peek() == ("op", "+"):
            self.take()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            ex = self.unary()
            if not ex.is_Integer:
                raise ParseError("exponents must be integer constants")
            return base**ex
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return sp.Rational(val)
        if kind == "var":
            self.take()
            k = int(val[1:])
            if not 1 <= k <= self.n:
                raise ParseError(f"variable {val} outside x1..x{self.n}")
            return self.syms[k - 1]
        if kind == "fn":
            self.take()
            self.take("op", "(")
            arg = self.expr()
            self.take("op", ")")
            return sp.exp(arg) if val == "exp" else flat(arg)
        if (kind, val) == ("op", "("):
            self.take()
            e = self.expr()
            self.take("op", ")")
            return e
        raise ParseError(f"unexpected token {val!r}")


def parse(text: str, n: int) -> sp.Expr:
    """Parse a coefficient expression in ``x1 ... xn`` (see module grammar)."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    return _Parser(text, n).parse()


def to_text(expr: sp.Expr) -> str:
    """Render back into the textual grammar (``**`` becomes ``^``)."""
    return sp.sstr(expr).replace("**", "^")


# ---------------------------------------------------------------------------
# numerical evaluation


def _is_flat_factor(f):
    if isinstance(f, flat):
        return True
    return f.is_Pow and isinstance(f.base, flat) and f.exp.is_positive


def _compile(e, index):
    if e.is_Symbol:
        k = index[e]
        return lambda X: X[..., k]
    if e.is_Number:
        v = complex(e) if not e.is_real else float(e)
        return lambda X: np.full(X.shape[:-1], v)
    if isinstance(e, flat):
        g = _compile(e.args[0], index)

        def f_flat(X):
            u = g(X)
            with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
                v = np.exp(-1.0 / (u * u))
            return np.where(u == 0, 0.0, v)
        return f_flat
    if isinstance(e, sp.exp):
        g = _compile(e.args[0], index)
        return lambda X: np.exp(g(X))
    if e.is_Add:
        parts = [_compile(a, index) for a in e.args]

        def f_add(X):
            out = parts[0](X)
            for p in parts[1:]:
                out = out + p(X)
            return out
        return f_add
    if e.is_Mul:
        flats = [_compile(a, index) for a in e.args if _is_flat_factor(a)]
        others = [_compile(a, index) for a in e.args if not _is_flat_factor(a)]

        def f_mul(X):
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                out = np.ones(X.shape[:-1])
                vanish = np.zeros(X.shape[:-1], dtype=bool)
                for p in flats:
                    v = p(X)
                    vanish |= v == 0
                    out = out * v
                for p in others:
                    out = out * p(X)
            return np.where(vanish, 0.0, out)
        return f_mul
    if e.is_Pow:
        b = _compile(e.base, index)
        ex = e.exp
        if ex.is_Integer:
            k = int(ex)
            def f_ipow(X):
                with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                    return b(X) ** float(k)
            return f_ipow
        xe = _compile(ex, index)
        return lambda X: np.power(b(X), xe(X))
    raise TypeError(f"unsupported node {type(e).__name__}")


@functools.lru_cache(maxsize=4096)
def _compiled(expr, n):
    syms = symbols(n)
    return _compile(expr, {s: i for i, s in enumerate(syms)})


def evaluate(expr: sp.Expr, X, n: int | None = None) -> np.ndarray:
    """Evaluate ``expr`` at points ``X`` of shape ``(..., n)``."""
    X = np.asarray(X, dtype=float)
    n = X.shape[-1] if n is None else n
    return np.asarray(_compiled(sp.sympify(expr), n)(X), dtype=float)


# ---------------------------------------------------------------------------
# exact linear algebra over constants


def coefficient_terms(expr: sp.Expr) -> dict:
    """Split an expression into ``{basis_term: rational coefficient}`` after expansion."""
    e = sp.expand(expr)
    if e == 0:
        return {}
    out = {}
    for term in sp.Add.make_args(e):
        c, rest = term.as_coeff_Mul()
        out[rest] = out.get(rest, 0) + c
    return {k: v for k, v in out.items() if v != 0}


def solve_constant_combination(target, members):
    """Exact constants ``c`` with ``target = sum_k c_k members[k]``, or ``None``.

    ``target`` and each member are sequences of expressions (field
    components).  Both sides are expanded into sums of basis terms and the
    resulting rational linear system is solved exactly; a solution is a
    certificate, while ``None`` means no combination exists in the formal
    term basis.
    """
    k = len(members)
    cs = sp.symbols(f"c0:{max(k, 1)}")
    eqs = {}
    for comp in range(len(target)):
        total = coefficient_terms(target[comp])
        rows = {}
        for basis, v in total.items():
            rows.setdefault(basis, 0)
            rows[basis] -= v
        for m in range(k):
            for basis, v in coefficient_terms(members[m][comp]).items():
                rows.setdefault(basis, 0)
                rows[basis] += v * cs[m]
        for basis, lin in rows.items():
            eqs[(comp, basis)] = lin
    eqlist = [sp.expand(v) for v in eqs.values() if sp.expand(v) != 0]
    if k == 0:
        return [] if not eqlist else None
    if not eqlist:
        return [sp.Integer(0)] * k
    sol = sp.linsolve(eqlist, *cs[:k])
    if not sol:
        return None
    vals = list(next(iter(sol)))
    free = set().union(*(v.free_symbols for v in vals))
    subs = {s: 0 for s in free}
    return [sp.nsimplify(v.subs(subs)) for v in vals]
