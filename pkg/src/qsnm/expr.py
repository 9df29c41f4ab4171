"""Scalar expressions over chart coordinates.

Expressions are immutable trees (in practice DAGs, since derivatives share
subtrees).  They can be parsed from text, printed back canonically,
differentiated exactly and evaluated either at a single point or over a batch
of points with shared-subexpression caching.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Expr", "Constant", "Coordinate", "Negate", "Add", "Sub", "Mul", "Div",
    "Pow", "Sin", "Cos", "Exp", "Ln", "Sqrt",
    "ExprSyntaxError", "DomainError",
    "parse", "to_string", "evaluate", "differentiate", "simplify",
    "Evaluator", "as_expr", "ZERO", "ONE",
]


class ExprSyntaxError(ValueError):
    """Malformed expression text.  ``position`` is the 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class DomainError(ArithmeticError):
    """Evaluation left the real domain of some node (1/0, ln(-1), ...)."""

    def __init__(self, message: str, node: "Expr | None" = None, point=None):
        super().__init__(message)
        self.node = node
        self.point = point


# ---------------------------------------------------------------------------
# Node types
# ---------------------------------------------------------------------------

class Expr:
    __slots__ = ("_hash", "_dcache", "__weakref__")

    children: tuple = ()

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        if self._hash != other._hash:
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        res = self.__eq__(other)
        return res if res is NotImplemented else not res

    def __repr__(self):
        args = ", ".join(repr(a) for a in self._key())
        return f"{type(self).__name__}({args})"

    def __str__(self):
        return to_string(self)

    # arithmetic builds folded nodes so that symbolic tensor algebra
    # (including numpy object-array einsum) stays compact
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("only integer exponents are supported")
        return power(self, int(k))


class Constant(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)
        self._hash = hash(("c", self.value))
        self._dcache = None

    def _key(self):
        return (self.value,)


class Coordinate(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("coordinate index must be non-negative")
        self.index = int(index)
        self._hash = hash(("x", self.index))
        self._dcache = None

    def _key(self):
        return (self.index,)


class _Unary(Expr):
    __slots__ = ("arg", "children")

    def __init__(self, arg: Expr):
        self.arg = arg
        self.children = (arg,)
        self._hash = hash((type(self).__name__, arg._hash))
        self._dcache = None

    def _key(self):
        return (self.arg,)


class _Binary(Expr):
    __slots__ = ("left", "right", "children")

    def __init__(self, left: Expr, right: Expr):
        self.left = left
        self.right = right
        self.children = (left, right)
        self._hash = hash((type(self).__name__, left._hash, right._hash))
        self._dcache = None

    def _key(self):
        return (self.left, self.right)


class Negate(_Unary):
    __slots__ = ()


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Pow(Expr):
    __slots__ = ("base", "exponent", "children")

    def __init__(self, base: Expr, exponent: int):
        if isinstance(exponent, float) and not exponent.is_integer():
            raise TypeError("Pow exponent must be an integer")
        self.base = base
        self.exponent = int(exponent)
        self.children = (base,)
        self._hash = hash(("pow", base._hash, self.exponent))
        self._dcache = None

    def _key(self):
        return (self.base, self.exponent)


class Sin(_Unary):
    __slots__ = ()


class Cos(_Unary):
    __slots__ = ()


class Exp(_Unary):
    __slots__ = ()


class Ln(_Unary):
    __slots__ = ()


class Sqrt(_Unary):
    __slots__ = ()


FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp, "ln": Ln, "sqrt": Sqrt}
_FUNC_NAMES = {cls: name for name, cls in FUNCTIONS.items()}

ZERO = Constant(0.0)
ONE = Constant(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        v = float(value)
        if v == 0.0:
            return ZERO
        if v == 1.0:
            return ONE
        return Constant(v)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# ---------------------------------------------------------------------------
# Folding constructors.  They apply the same local rules as simplify() and are
# what the arithmetic operators and differentiate() use.
# ---------------------------------------------------------------------------

def _is_const(e, value=None):
    return isinstance(e, Constant) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return as_expr(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return as_expr(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return as_expr(a.value * b.value)
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return as_expr(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return as_expr(-a.value)
    if isinstance(a, Negate):
        return a.arg
    return Negate(a)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Constant):
        folded = _fold(Pow, (a.value,), k)
        if folded is not None:
            return folded
    return Pow(a, k)


def _apply(cls, a: Expr) -> Expr:
    if isinstance(a, Constant):
        folded = _fold(cls, (a.value,))
        if folded is not None:
            return folded
    return cls(a)


def _fold(cls, values, exponent=None):
    """Fold a node over constant operands; None if the result is undefined."""
    try:
        if cls is Pow:
            (v,) = values
            if v == 0.0 and exponent < 0:
                return None
            return as_expr(v ** exponent)
        (v,) = values
        if cls is Sin:
            return as_expr(math.sin(v))
        if cls is Cos:
            return as_expr(math.cos(v))
        if cls is Exp:
            return as_expr(math.exp(v))
        if cls is Ln:
            return as_expr(math.log(v)) if v > 0 else None
        if cls is Sqrt:
            return as_expr(math.sqrt(v)) if v >= 0 else None
        if cls is Negate:
            return as_expr(-v)
    except (OverflowError, ValueError):
        return None
    raise AssertionError(cls)


def sin(a) -> Expr:
    return _apply(Sin, as_expr(a))


def cos(a) -> Expr:
    return _apply(Cos, as_expr(a))


def exp(a) -> Expr:
    return _apply(Exp, as_expr(a))


def ln(a) -> Expr:
    return _apply(Ln, as_expr(a))


def sqrt(a) -> Expr:
    return _apply(Sqrt, as_expr(a))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            # only whitespace left, or an unexpected character
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = n - len(stripped)
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, names):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = {name: k for k, name in enumerate(names)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self):
        node = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, text, pos = self.take()
            if kind != "number" or not text.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", pos)
            node = Pow(node, sign * int(text))
        return node

    def atom(self):
        kind, text, pos = self.take()
        if kind == "number":
            return Constant(float(text))
        if kind == "ident":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    if text in self.names:
                        raise ExprSyntaxError(f"coordinate {text!r} is not callable", pos)
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.take()
                if self.peek()[1] == ")":
                    raise ExprSyntaxError(f"{text}() takes exactly one argument", self.peek()[2])
                arg = self.expr()
                nxt = self.peek()
                if nxt[1] == ",":
                    raise ExprSyntaxError(f"{text}() takes exactly one argument", nxt[2])
                self.expect(")")
                return FUNCTIONS[text](arg)
            if text in FUNCTIONS:
                raise ExprSyntaxError(f"{text} must be called with one argument", pos)
            if text not in self.names:
                raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
            return Coordinate(self.names[text])
        if text == "(" and kind == "op":
            node = self.expr()
            self.expect(")")
            return node
        if text == "-" and kind == "op":
            nxt = self.peek()
            if nxt[0] == "number" and nxt[2] == pos + 1:
                self.take()
                return Constant(-float(nxt[1]))
            return Negate(self.atom())
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse(text: str, dimension: int, coordinate_names: Sequence[str]) -> Expr:
    """Parse ``text`` into an expression tree.

    Grammar (whitespace is insignificant)::

        expr   := term (('+'|'-') term)*
        term   := factor (('*'|'/') factor)*
        factor := atom ('^' integer)?
        atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom

    A minus sign written directly in front of a numeric literal produces a
    negative constant rather than a negation node.
    """
    names = list(coordinate_names)
    if len(names) != dimension:
        raise ValueError("coordinate_names must have one name per dimension")
    if len(set(names)) != len(names):
        raise ValueError("coordinate names must be distinct")
    for name in names:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name) or name in FUNCTIONS:
            raise ValueError(f"invalid coordinate name {name!r}")
    p = _Parser(text, names)
    node = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {tok!r}", pos)
    return node


def to_string(e: Expr, coordinate_names: Sequence[str] | None = None) -> str:
    """Fully parenthesized canonical form; parse() reads it back unchanged."""

    def name(i):
        if coordinate_names is None:
            return f"x{i}"
        return coordinate_names[i]

    memo = {}

    def rec(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Constant):
            s = repr(node.value)
            if not math.isfinite(node.value):
                raise ValueError("non-finite constants cannot be printed")
            s = f"({s})" if node.value < 0 or s.startswith("-") else s
        elif isinstance(node, Coordinate):
            s = name(node.index)
        elif isinstance(node, Negate):
            s = f"(-{rec(node.arg)})"
        elif isinstance(node, Pow):
            s = f"({rec(node.base)}^{node.exponent})"
        elif isinstance(node, _Binary):
            op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
            s = f"({rec(node.left)} {op} {rec(node.right)})"
        else:
            s = f"{_FUNC_NAMES[type(node)]}({rec(node.arg)})"
        memo[key] = s
        return s

    return rec(e)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, coord: int) -> Expr:
    """Exact partial derivative with respect to coordinate ``coord``.

    Results are memoized on each node, so repeated and nested derivatives of
    shared subexpressions are built once.
    """
    if coord < 0:
        raise ValueError("coordinate index must be non-negative")
    return _d(e, coord)


def _d(e: Expr, i: int) -> Expr:
    cache = e._dcache
    if cache is not None:
        hit = cache.get(i)
        if hit is not None:
            return hit
    t = type(e)
    if t is Constant:
        r = ZERO
    elif t is Coordinate:
        r = ONE if e.index == i else ZERO
    elif t is Negate:
        r = neg(_d(e.arg, i))
    elif t is Add:
        r = add(_d(e.left, i), _d(e.right, i))
    elif t is Sub:
        r = sub(_d(e.left, i), _d(e.right, i))
    elif t is Mul:
        r = add(mul(_d(e.left, i), e.right), mul(e.left, _d(e.right, i)))
    elif t is Div:
        da, db = _d(e.left, i), _d(e.right, i)
        r = sub(div(da, e.right), div(mul(e.left, db), power(e.right, 2)))
    elif t is Pow:
        db = _d(e.base, i)
        k = e.exponent
        r = mul(mul(as_expr(k), power(e.base, k - 1)), db)
    else:
        da = _d(e.arg, i)
        if _is_const(da, 0.0):
            r = ZERO
        elif t is Sin:
            r = mul(cos(e.arg), da)
        elif t is Cos:
            r = neg(mul(sin(e.arg), da))
        elif t is Exp:
            r = mul(e, da)
        elif t is Ln:
            r = div(da, e.arg)
        elif t is Sqrt:
            r = div(da, mul(Constant(2.0), e))
        else:
            raise TypeError(f"unknown node {t.__name__}")
    if cache is None:
        e._dcache = cache = {}
    cache[i] = r
    return r


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def simplify(e: Expr) -> Expr:
    """Bottom-up light simplification.

    Only constant folding, additive and multiplicative identities, ``x*0``,
    ``x^1``, ``x^0 -> 1`` (also for a zero base) and double negation.
    """
    memo = {}

    def rec(node):
        key = id(node)
        if key in memo:
            return memo[key]
        t = type(node)
        if t is Constant or t is Coordinate:
            r = node
        elif t is Negate:
            r = neg(rec(node.arg))
        elif t is Add:
            r = add(rec(node.left), rec(node.right))
        elif t is Sub:
            r = sub(rec(node.left), rec(node.right))
        elif t is Mul:
            r = mul(rec(node.left), rec(node.right))
        elif t is Div:
            r = div(rec(node.left), rec(node.right))
        elif t is Pow:
            r = power(rec(node.base), node.exponent)
        else:
            r = _apply(t, rec(node.arg))
        memo[key] = r
        return r

    return rec(e)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

class Evaluator:
    """Evaluate expressions over a fixed batch of points.

    Values of every visited node are cached for the lifetime of the
    evaluator, so evaluating many fields that share subexpressions (inverse
    metric, Christoffel symbols, ...) costs one numpy operation per distinct
    node.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2:
            raise ValueError("points must have shape (num_points, dimension)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts
        self.dimension = pts.shape[1]
        # id(node) -> (node, value); the node reference keeps ids stable
        self._memo: dict[int, tuple[Expr, object]] = {}

    def __len__(self):
        return self.points.shape[0]

    def __call__(self, e: Expr) -> np.ndarray:
        v = self._value(e)
        return np.broadcast_to(np.asarray(v, dtype=float), (len(self),))

    def many(self, exprs: Iterable[Expr]) -> np.ndarray:
        """Evaluate an iterable of expressions; result shape (num_points, k)."""
        cols = [self(e) for e in exprs]
        if not cols:
            return np.zeros((len(self), 0))
        return np.stack(cols, axis=-1)

    def _value(self, root: Expr):
        memo = self._memo
        hit = memo.get(id(root))
        if hit is not None:
            return hit[1]
        stack = [root]
        while stack:
            node = stack[-1]
            if id(node) in memo:
                stack.pop()
                continue
            pending = [c for c in node.children if id(c) not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            memo[id(node)] = (node, self._compute(node, [memo[id(c)][1] for c in node.children]))
        return memo[id(root)][1]

    def _fail(self, node, mask, what):
        idx = int(np.flatnonzero(np.broadcast_to(mask, (len(self),)))[0])
        point = tuple(float(v) for v in self.points[idx])
        text = to_string(node)
        if len(text) > 80:
            text = text[:77] + "..."
        raise DomainError(f"{what} in {text} at point {point}", node, point)

    def _compute(self, node, args):
        t = type(node)
        if t is Constant:
            return node.value
        if t is Coordinate:
            if node.index >= self.dimension:
                raise IndexError(
                    f"coordinate index {node.index} out of range for dimension {self.dimension}")
            return self.points[:, node.index]
        if t is Add:
            return args[0] + args[1]
        if t is Sub:
            return args[0] - args[1]
        if t is Mul:
            return args[0] * args[1]
        if t is Negate:
            return -args[0]
        if t is Div:
            den = args[1]
            bad = np.asarray(den) == 0
            if np.any(bad):
                self._fail(node, bad, "division by zero")
            return args[0] / den
        if t is Pow:
            base = args[0]
            k = node.exponent
            if k < 0:
                bad = np.asarray(base) == 0
                if np.any(bad):
                    self._fail(node, bad, "zero to a negative power")
                return 1.0 / np.power(base, -k)
            if k == 2:
                return base * base
            return np.power(base, k)
        a = args[0]
        if t is Sin:
            return np.sin(a)
        if t is Cos:
            return np.cos(a)
        if t is Exp:
            return np.exp(a)
        if t is Ln:
            bad = np.asarray(a) <= 0
            if np.any(bad):
                self._fail(node, bad, "logarithm of a non-positive value")
            return np.log(a)
        if t is Sqrt:
            bad = np.asarray(a) < 0
            if np.any(bad):
                self._fail(node, bad, "square root of a negative value")
            return np.sqrt(a)
        raise TypeError(f"unknown node {t.__name__}")


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """Evaluate ``e`` at a single point."""
    return float(Evaluator(np.asarray(point, dtype=float)[None, :])(e)[0])
