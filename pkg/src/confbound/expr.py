"""Metric-expression language: AST, recursive-descent parser, printer and evaluator.

Grammar (``^`` binds tightest and is right-associative, unary minus sits
between ``^`` and ``* /``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

So ``-x^2`` is ``-(x^2)`` and ``2^-1`` is accepted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .errors import ConfboundError, ExpressionDomainError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs")
CONSTANTS = {"pi": math.pi}
DEFAULT_VARIABLES = ("x0", "x1", "x2", "x3", "r")
MAX_SOURCE_BYTES = 64 * 1024


class ParseError(ConfboundError, SyntaxError):
    """Malformed expression; carries 1-based ``line`` and ``col``."""

    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


class UnknownIdentifier(ParseError):
    def __init__(self, name: str, line: int, col: int):
        self.name = name
        super().__init__(f"unknown identifier '{name}'", line, col)


# -- AST -------------------------------------------------------------------
@dataclass(frozen=True)
class Expr:
    def children(self) -> tuple["Expr", ...]:
        return ()

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def children(self):
        return (self.arg,)


_OP_NAMES = {"+": "Add", "-": "Sub", "*": "Mul", "/": "Div", "^": "Pow"}


def describe(e: Expr) -> str:
    """Constructor-style rendering, e.g. ``Pow(Cos(Var r), 2)``."""
    if isinstance(e, Num):
        v = e.value
        return str(int(v)) if float(v).is_integer() else repr(v)
    if isinstance(e, Var):
        return f"Var {e.name}"
    if isinstance(e, Const):
        return f"Const {e.name}"
    if isinstance(e, Neg):
        return f"Neg({describe(e.arg)})"
    if isinstance(e, Call):
        return f"{e.fn.capitalize()}({describe(e.arg)})"
    return f"{_OP_NAMES[e.op]}({describe(e.left)}, {describe(e.right)})"


def node_count(e: Expr) -> int:
    return 1 + sum(node_count(c) for c in e.children())


def leaf_count(e: Expr) -> int:
    kids = e.children()
    return 1 if not kids else sum(leaf_count(c) for c in kids)


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    out = frozenset()
    for c in e.children():
        out |= free_variables(c)
    return out


# -- lexer / parser ------------------------------------------------------------
_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            for i, ch in enumerate(m.group(), start=pos):
                if ch == "\n":
                    line, line_start = line + 1, i + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, variables):
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t.text != text or t.kind == "end":
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ParseError(f"expected '{text}', found {found}", t.line, t.col)
        return self.take()

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek().text == "-" and self.peek().kind == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.take()
            return Num(float(t.text))
        if t.kind == "name":
            self.take()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if t.text in CONSTANTS:
                return Const(t.text)
            if t.text in self.variables:
                return Var(t.text)
            raise UnknownIdentifier(t.text, t.line, t.col)
        if t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"unexpected {found}", t.line, t.col)


def parse(text: str, variables=DEFAULT_VARIABLES) -> Expr:
    """Parse ``text`` into an AST; ``variables`` lists the admissible names."""
    if len(text.encode("utf-8")) > MAX_SOURCE_BYTES:
        raise ParseError("expression exceeds 64 KiB", 1, 1)
    p = _Parser(text, variables)
    node = p.expr()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"unexpected {t.text!r}", t.line, t.col)
    return node


# -- printer -------------------------------------------------------------------
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC["neg"]
    return _PREC["atom"]


def _fmt_num(v: float) -> str:
    if math.isinf(v) or math.isnan(v):
        raise ValueError("non-finite literal cannot be printed")
    return repr(float(v))


def to_string(e: Expr) -> str:
    """Print with the fewest parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        # the operand of unary minus is itself unary-or-power
        return "-" + (inner if _prec(e.arg) >= _PREC["neg"] else f"({inner})")
    p = _PREC[e.op]
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "^":
        # the base must be an atom; the exponent may be a unary chain
        if _prec(e.left) < _PREC["atom"]:
            left = f"({left})"
        if _prec(e.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# -- evaluation ------------------------------------------------------------------
def _is_jet(x) -> bool:
    return isinstance(x, J.Jet)


def _is_mp(x) -> bool:
    return type(x).__module__.startswith("mpmath")


def _domain(mask, msg):
    if np.any(mask):
        raise ExpressionDomainError(msg, mask)


def fn_sin(x):
    return J.sin(x) if _is_jet(x) else _mp("sin", x) if _is_mp(x) else np.sin(x)


def fn_cos(x):
    return J.cos(x) if _is_jet(x) else _mp("cos", x) if _is_mp(x) else np.cos(x)


def fn_tan(x):
    return J.tan(x) if _is_jet(x) else _mp("tan", x) if _is_mp(x) else np.tan(x)


def fn_exp(x):
    return J.exp(x) if _is_jet(x) else _mp("exp", x) if _is_mp(x) else np.exp(x)


def fn_log(x):
    if _is_jet(x):
        return J.log(x)
    if _is_mp(x):
        return _mp("log", x)
    _domain(np.asarray(x) <= 0, "log of non-positive argument")
    return np.log(x)


def fn_sqrt(x):
    if _is_jet(x):
        return J.sqrt(x)
    if _is_mp(x):
        return _mp("sqrt", x)
    _domain(np.asarray(x) < 0, "sqrt of negative argument")
    return np.sqrt(x)


def fn_abs(x):
    if _is_jet(x):
        return J.fabs(x)
    return abs(x) if _is_mp(x) else np.abs(x)


def _mp(name, x):
    import mpmath

    return getattr(mpmath, name)(x)


def fn_pow(a, b):
    if _is_jet(a):
        return J.power(a, b)
    if _is_jet(b):
        return J._pin(J.exp(b * fn_log(a)), np.power(a, b.value))
    if _is_mp(a) or _is_mp(b):
        return a**b
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.ndim(b_arr) == 0 and float(b_arr).is_integer():
        return a_arr ** int(b_arr) if b_arr >= 0 else np.divide(1.0, a_arr ** int(-b_arr))
    _domain(a_arr < 0, "non-integer power of negative argument")
    return np.power(a_arr, b_arr)


def fn_div(a, b):
    if not _is_jet(b) and not _is_mp(b):
        _domain(np.asarray(b) == 0, "division by zero")
    return a / b


_FN = {"sin": fn_sin, "cos": fn_cos, "tan": fn_tan, "exp": fn_exp, "log": fn_log, "sqrt": fn_sqrt, "abs": fn_abs}


def evaluate(e: Expr, env: dict, memo: dict | None = None):
    """Evaluate over floats/arrays, jets or mpmath numbers (chosen by ``env`` values).

    Each node object is evaluated once per call, so shared subtrees are cheap.
    """
    if memo is None:
        memo = {}
    hit = memo.get(id(e))
    if hit is not None:
        return hit[1]
    if isinstance(e, Num):
        out = e.value
        if env and any(_is_mp(v) for v in env.values()):
            import mpmath

            out = mpmath.mpf(e.value)
    elif isinstance(e, Const):
        out = CONSTANTS[e.name]
        if env and any(_is_mp(v) for v in env.values()):
            import mpmath

            out = +mpmath.pi
    elif isinstance(e, Var):
        if e.name not in env:
            raise KeyError(f"no value bound for variable '{e.name}'")
        out = env[e.name]
    elif isinstance(e, Neg):
        out = -evaluate(e.arg, env, memo)
    elif isinstance(e, Call):
        out = _FN[e.fn](evaluate(e.arg, env, memo))
    else:
        a = evaluate(e.left, env, memo)
        b = evaluate(e.right, env, memo)
        if e.op == "+":
            out = a + b
        elif e.op == "-":
            out = a - b
        elif e.op == "*":
            out = a * b
        elif e.op == "/":
            out = fn_div(a, b)
        else:
            out = fn_pow(a, b)
    memo[id(e)] = (e, out)
    return out


@dataclass(frozen=True)
class Compiled:
    """A parsed expression bound to an ordered coordinate list."""

    expr: Expr
    coords: tuple[str, ...]
    source: str = field(default="", compare=False)

    def __call__(self, *xs):
        return evaluate(self.expr, dict(zip(self.coords, xs)))

    @property
    def depends_on(self) -> frozenset[str]:
        return free_variables(self.expr)


def compile_expr(text: str | Expr, coords) -> Compiled:
    coords = tuple(coords)
    e = text if isinstance(text, Expr) else parse(text, coords)
    return Compiled(e, coords, text if isinstance(text, str) else to_string(text))
