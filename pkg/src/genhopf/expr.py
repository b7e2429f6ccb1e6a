"""Expression DSL for coefficient functions of one variable ``x``.

Grammar (whitespace ignored, ``^`` right-associative, no implicit
multiplication)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | "x" | "pi" | PARAM | FUNC "(" expr ")"
             | "diff" "(" expr ["," INTEGER] ")" | "(" expr ")"

``FUNC`` is one of sin, cos, tan, exp, ln, sinh, cosh, tanh, sqrt.  Exprs are
immutable trees; they also compose with Python operators so the family modules
can build coefficient functions structurally.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import jet as _jet
from .jet import INTERNAL_MAX_ORDER, MAX_ORDER, DomainError, Jet

__all__ = [
    "Expr",
    "DomainError",
    "ExprSyntaxError",
    "UnboundParameterError",
    "parse_expr",
    "eval_jet",
    "as_expr",
    "const",
    "X",
]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnboundParameterError(KeyError):
    pass


class Expr:
    """Base node.  Subclasses implement ``_jet`` and ``to_text``."""

    __slots__ = ()

    # -- evaluation ---------------------------------------------------------
    def _jet(self, x, order: int, env: Mapping[str, float]) -> Jet:
        raise NotImplementedError

    def jet(self, x, order: int = 0, **bindings) -> Jet:
        if not 0 <= order <= INTERNAL_MAX_ORDER:
            raise ValueError(f"jet order must be in [0, {INTERNAL_MAX_ORDER}]")
        x = np.asarray(x, dtype=float)
        return self._jet(x, order, bindings)

    def _val(self, x, env: Mapping[str, float]):
        return self._jet(np.asarray(x, dtype=float), 0, env).c[0]

    def __call__(self, x, **bindings):
        if np.ndim(x) == 0:
            v = self._val(float(x), bindings)
        else:
            v = self._val(np.asarray(x, dtype=float), bindings)
        if np.ndim(v) == 0:
            return float(v)
        return np.broadcast_to(v, np.shape(x)).astype(float)

    def derivs(self, x, order: int, **bindings) -> np.ndarray:
        """Raw derivatives ``[f, f', ..., f^(order)]`` stacked along axis 0."""
        return self.jet(x, order, **bindings).d

    # -- structure ----------------------------------------------------------
    @property
    def params(self) -> frozenset:
        return frozenset()

    def bind(self, **values) -> "Expr":
        return self

    def diff(self, n: int = 1) -> "Expr":
        if n == 0:
            return self
        if isinstance(self, Const):
            return Const(0.0)
        return Deriv(self, n)

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"Expr({self.to_text()!r})"

    # -- composition --------------------------------------------------------
    def __add__(self, other):
        other = as_expr(other)
        if _is_const(other, 0.0):
            return self
        if _is_const(self, 0.0):
            return other
        if isinstance(self, Const) and isinstance(other, Const):
            return Const(self.value + other.value)
        return Add(self, other)

    def __radd__(self, other):
        return as_expr(other) + self

    def __sub__(self, other):
        other = as_expr(other)
        if _is_const(other, 0.0):
            return self
        if _is_const(self, 0.0):
            return -other
        if isinstance(self, Const) and isinstance(other, Const):
            return Const(self.value - other.value)
        return Sub(self, other)

    def __rsub__(self, other):
        return as_expr(other) - self

    def __mul__(self, other):
        other = as_expr(other)
        if _is_const(self, 0.0) or _is_const(other, 0.0):
            return Const(0.0)
        if _is_const(other, 1.0):
            return self
        if _is_const(self, 1.0):
            return other
        if isinstance(self, Const) and isinstance(other, Const):
            return Const(self.value * other.value)
        return Mul(self, other)

    def __rmul__(self, other):
        return as_expr(other) * self

    def __truediv__(self, other):
        other = as_expr(other)
        if _is_const(other, 1.0):
            return self
        if isinstance(self, Const) and isinstance(other, Const) and other.value != 0:
            return Const(self.value / other.value)
        return Div(self, other)

    def __rtruediv__(self, other):
        return as_expr(other) / self

    def __pow__(self, other):
        other = as_expr(other)
        if _is_const(other, 1.0):
            return self
        if isinstance(self, Const) and isinstance(other, Const):
            b, e = self.value, other.value
            if (b > 0 or float(e).is_integer()) and not (b == 0 and e < 0):
                return Const(float(b**e))
        return Pow(self, other)

    def __neg__(self):
        if isinstance(self, Const):
            return Const(-self.value)
        return Neg(self)


def _is_const(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse_expr(value)
    return Const(float(value))


def const(value: float) -> Expr:
    return Const(float(value))


def _fmt_number(v: float) -> str:
    if v == 0:
        return "0"
    if v == math.pi:
        return "pi"
    text = repr(float(v))
    if text.endswith(".0"):
        text = text[:-2]
    return text


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: float

    def _jet(self, x, order, env):
        return Jet.constant(self.value, order, np.shape(x))

    def _val(self, x, env):
        return self.value

    def to_text(self):
        text = _fmt_number(self.value)
        return f"({text})" if self.value < 0 or "e" in text else text


@dataclass(frozen=True, eq=False)
class Var(Expr):
    def _jet(self, x, order, env):
        return Jet.variable(x, order)

    def _val(self, x, env):
        return x

    def to_text(self):
        return "x"


X = Var()


@dataclass(frozen=True, eq=False)
class Param(Expr):
    name: str

    def _jet(self, x, order, env):
        try:
            value = env[self.name]
        except KeyError:
            raise UnboundParameterError(f"parameter {self.name!r} is not bound") from None
        return Jet.constant(value, order, np.shape(x))

    def _val(self, x, env):
        try:
            return env[self.name]
        except KeyError:
            raise UnboundParameterError(f"parameter {self.name!r} is not bound") from None

    @property
    def params(self):
        return frozenset({self.name})

    def bind(self, **values):
        if self.name in values:
            return Const(float(values[self.name]))
        return self

    def to_text(self):
        return self.name


@dataclass(frozen=True, eq=False)
class _Binary(Expr):
    left: Expr
    right: Expr
    _symbol = "?"

    @property
    def params(self):
        return self.left.params | self.right.params

    def bind(self, **values):
        return type(self)(self.left.bind(**values), self.right.bind(**values))

    def to_text(self):
        return f"({self.left.to_text()} {self._symbol} {self.right.to_text()})"


class Add(_Binary):
    _symbol = "+"

    def _jet(self, x, order, env):
        return self.left._jet(x, order, env) + self.right._jet(x, order, env)

    def _val(self, x, env):
        return self.left._val(x, env) + self.right._val(x, env)


class Sub(_Binary):
    _symbol = "-"

    def _jet(self, x, order, env):
        return self.left._jet(x, order, env) - self.right._jet(x, order, env)

    def _val(self, x, env):
        return self.left._val(x, env) - self.right._val(x, env)


class Mul(_Binary):
    _symbol = "*"

    def _jet(self, x, order, env):
        return self.left._jet(x, order, env) * self.right._jet(x, order, env)

    def _val(self, x, env):
        return self.left._val(x, env) * self.right._val(x, env)


class Div(_Binary):
    _symbol = "/"

    def _jet(self, x, order, env):
        return self.left._jet(x, order, env) / self.right._jet(x, order, env)

    def _val(self, x, env):
        den = self.right._val(x, env)
        if np.any(den == 0):
            raise DomainError("division by zero")
        return self.left._val(x, env) / den


class Pow(_Binary):
    _symbol = "^"

    def _jet(self, x, order, env):
        base = self.left._jet(x, order, env)
        expo = self.right._jet(x, order, env)
        if np.all(expo.c[1:] == 0):
            p = np.asarray(expo.c[0])
            p0 = float(p.flat[0]) if p.size else 0.0
            if np.all(p == p0):
                if p0 == int(p0):
                    return _jet._int_pow(base, int(p0))
                return _jet._real_pow(base, p0)
            return _jet._real_pow(base, p)
        return _jet.exp(expo * _jet.log(base))

    def _val(self, x, env):
        if isinstance(self.right, Deriv) or not isinstance(self.right, Const):
            p = self.right._val(x, env)
        else:
            p = self.right.value
        b = self.left._val(x, env)
        if np.ndim(p) == 0 and float(p) == int(p):
            p = int(p)
            if p < 0 and np.any(b == 0):
                raise DomainError("division by zero")
            return b**p if p >= 0 else 1.0 / b ** (-p)
        if np.any(b <= 0):
            raise DomainError("non-integer power of a non-positive base")
        return b**p


@dataclass(frozen=True, eq=False)
class Neg(Expr):
    arg: Expr

    def _jet(self, x, order, env):
        return -self.arg._jet(x, order, env)

    def _val(self, x, env):
        return -self.arg._val(x, env)

    @property
    def params(self):
        return self.arg.params

    def bind(self, **values):
        return Neg(self.arg.bind(**values))

    def to_text(self):
        return f"(-{self.arg.to_text()})"


@dataclass(frozen=True, eq=False)
class Func(Expr):
    name: str
    arg: Expr

    def _jet(self, x, order, env):
        return _jet.FUNCTIONS[self.name](self.arg._jet(x, order, env))

    def _val(self, x, env):
        return _value_function(self.name, self.arg._val(x, env))

    @property
    def params(self):
        return self.arg.params

    def bind(self, **values):
        return Func(self.name, self.arg.bind(**values))

    def to_text(self):
        return f"{self.name}({self.arg.to_text()})"


@dataclass(frozen=True, eq=False)
class Deriv(Expr):
    arg: Expr
    n: int

    def _jet(self, x, order, env):
        inner = order + self.n
        if inner > INTERNAL_MAX_ORDER:
            raise ValueError("derivative nesting exceeds the internal jet order cap")
        return self.arg._jet(x, inner, env).shift(self.n)

    @property
    def params(self):
        return self.arg.params

    def bind(self, **values):
        return Deriv(self.arg.bind(**values), self.n)

    def diff(self, n: int = 1):
        return Deriv(self.arg, self.n + n) if n else self

    def to_text(self):
        if self.n == 1:
            return f"diff({self.arg.to_text()})"
        return f"diff({self.arg.to_text()}, {self.n})"


def _value_function(name: str, a):
    if name == "ln":
        if np.any(a <= 0):
            raise DomainError("ln of a non-positive number")
        return math.log(a) if isinstance(a, float) else np.log(a)
    if name == "sqrt":
        if np.any(a < 0):
            raise DomainError("sqrt of a negative number")
        return math.sqrt(a) if isinstance(a, float) else np.sqrt(a)
    if name == "tan":
        if np.any(np.abs(np.cos(a)) < _jet.TAN_POLE_TOL):
            raise DomainError("tan evaluated at a pole")
    if isinstance(a, float):
        try:
            return getattr(math, name)(a)
        except OverflowError:
            return math.inf
    return getattr(np, name)(a)


def eval_jet(e: Expr, x, order: int, bindings: Mapping[str, float] | None = None) -> Jet:
    """Value and first ``order`` derivatives of ``e`` at ``x``.

    ``order`` is capped at :data:`~genhopf.jet.MAX_ORDER`.  Raises
    :class:`DomainError` outside the function's real domain and
    :class:`UnboundParameterError` for unbound parameters.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}]")
    return e.jet(x, order, **dict(bindings or {}))


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)
_RESERVED = set(_jet.FUNCTIONS) | {"diff", "x", "pi"}


def _tokenize(text: str):
    pos = 0
    tokens = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, params: Iterable[str]):
        self.text = text
        self.params = set(params)
        clash = self.params & _RESERVED
        if clash:
            raise ValueError(f"parameter names collide with reserved words: {sorted(clash)}")
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val == "x":
                return X
            if val == "pi":
                return Const(math.pi)
            if val in _jet.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if val == "diff":
                self.expect("(")
                arg = self.expr()
                n = 1
                if self.peek()[1] == ",":
                    self.take()
                    k, v, p = self.take()
                    if k != "num" or not v.isdigit() or int(v) < 1:
                        raise ExprSyntaxError("diff order must be a positive integer", p)
                    n = int(v)
                self.expect(")")
                return Deriv(arg, n)
            if val in self.params:
                return Param(val)
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)


def parse_expr(text: str, params: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an :class:`Expr`.

    Identifiers other than ``x``, ``pi``, the function names and ``params``
    are rejected.
    """
    if text is None or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, params).parse()
