"""Scalar expression engine: parsing, evaluation, symbolic differentiation.

All geometric data in this package (anchor matrices, bracket structure
functions, bivector/vector components, contact forms, radius profiles) is
specified as scalar expressions in named variables.  Expressions are
immutable ASTs; evaluation is pure, so instances can be shared freely
between threads.

Grammar (whitespace-insensitive)::

    expr   := term (("+"|"-") term)*
    term   := unary (("*"|"/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right-associative
    atom   := number | ident | ident "(" expr ")" | "(" expr ")"

Precedence: power > unary minus > "*","/" > "+","-".  Reserved names:
``pi`` and the functions ``sin cos tan exp log sqrt``.
"""

from __future__ import annotations

import math
import re

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class ExprError(ValueError):
    """Base class for expression engine failures."""


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalError(ExprError):
    """Domain error or unbound variable during evaluation."""


class Expression:
    """Immutable AST node.  Subclasses: Num, Var, Neg, BinOp, Call."""

    __slots__ = ("_compiled",)

    def evaluate(self, env):
        """Evaluate at a point given as a dict {name: value}.

        Raises EvalError for unbound variables and for domain errors
        (log of non-positive, division by zero, ...) instead of letting
        NaN/inf propagate.
        """
        raise NotImplementedError

    def diff(self, var):
        """Exact symbolic partial derivative with respect to `var`."""
        raise NotImplementedError

    def variables(self):
        """Set of free variable names."""
        raise NotImplementedError

    def subst(self, mapping):
        """Substitute variables by expressions; constant-folds on the way."""
        raise NotImplementedError

    def _source(self):
        raise NotImplementedError

    def __str__(self):
        return self._source()

    def __repr__(self):
        return f"{type(self).__name__}({self._source()!r})"

    # Arithmetic sugar, used heavily when structures are assembled in code.
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

    def __pow__(self, other):
        return pow_(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def compiled(self, var_order):
        """Return a vectorized callable (ndarray per variable, in order).

        The compiled path is numpy-based and does not raise domain errors;
        callers on hot loops check finiteness afterwards.  Results are
        cached per variable ordering.
        """
        cache = getattr(self, "_compiled", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_compiled", cache)
        key = tuple(var_order)
        fn = cache.get(key)
        if fn is None:
            fn = _compile(self, key)
            cache[key] = fn
        return fn


class Num(Expression):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", float(value))

    def evaluate(self, env):
        return self.value

    def diff(self, var):
        return Num(0.0)

    def variables(self):
        return set()

    def subst(self, mapping):
        return self

    def _source(self):
        v = self.value
        if v == math.pi:
            return "pi"
        if v < 0:
            return f"({v!r})"
        return repr(v)


class Var(Expression):
    __slots__ = ("name",)

    def __init__(self, name):
        object.__setattr__(self, "name", name)

    def evaluate(self, env):
        try:
            return float(env[self.name])
        except KeyError:
            raise EvalError(f"unbound variable '{self.name}'") from None

    def diff(self, var):
        return Num(1.0) if self.name == var else Num(0.0)

    def variables(self):
        return {self.name}

    def subst(self, mapping):
        return mapping.get(self.name, self)

    def _source(self):
        return self.name


class Neg(Expression):
    __slots__ = ("child",)

    def __init__(self, child):
        object.__setattr__(self, "child", child)

    def evaluate(self, env):
        return -self.child.evaluate(env)

    def diff(self, var):
        return neg(self.child.diff(var))

    def variables(self):
        return self.child.variables()

    def subst(self, mapping):
        return neg(self.child.subst(mapping))

    def _source(self):
        return f"(-{self.child._source()})"


class BinOp(Expression):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        op = self.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if b == 0.0:
                raise EvalError("division by zero")
            return a / b
        # power
        try:
            r = a ** b
        except (OverflowError, ValueError, ZeroDivisionError) as exc:
            raise EvalError(f"invalid power {a}^{b}") from exc
        if isinstance(r, complex) or not math.isfinite(r):
            raise EvalError(f"invalid power {a}^{b}")
        return r

    def diff(self, var):
        u, v = self.left, self.right
        du, dv = u.diff(var), v.diff(var)
        op = self.op
        if op == "+":
            return add(du, dv)
        if op == "-":
            return sub(du, dv)
        if op == "*":
            return add(mul(du, v), mul(u, dv))
        if op == "/":
            return div(sub(mul(du, v), mul(u, dv)), mul(v, v))
        # d(u^v): constant exponent and general case treated separately so
        # that polynomial powers stay log-free.
        if isinstance(v, Num):
            n = v.value
            return mul(mul(v, pow_(u, Num(n - 1.0))), du)
        return mul(self, add(mul(dv, Call("log", u)), mul(v, div(du, u))))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def subst(self, mapping):
        return _MAKERS[self.op](self.left.subst(mapping), self.right.subst(mapping))

    def _source(self):
        return f"({self.left._source()} {self.op} {self.right._source()})"


class Call(Expression):
    __slots__ = ("fname", "arg")

    def __init__(self, fname, arg):
        object.__setattr__(self, "fname", fname)
        object.__setattr__(self, "arg", arg)

    def evaluate(self, env):
        x = self.arg.evaluate(env)
        f = self.fname
        if f == "sin":
            return math.sin(x)
        if f == "cos":
            return math.cos(x)
        if f == "tan":
            c = math.cos(x)
            if c == 0.0:
                raise EvalError("tan at a pole")
            return math.tan(x)
        if f == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise EvalError(f"exp overflow at {x}") from None
        if f == "log":
            if x <= 0.0:
                raise EvalError(f"log of non-positive value {x}")
            return math.log(x)
        # sqrt
        if x < 0.0:
            raise EvalError(f"sqrt of negative value {x}")
        return math.sqrt(x)

    def diff(self, var):
        u = self.arg
        du = u.diff(var)
        f = self.fname
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = neg(Call("sin", u))
        elif f == "tan":
            outer = add(Num(1.0), mul(Call("tan", u), Call("tan", u)))
        elif f == "exp":
            outer = self
        elif f == "log":
            return div(du, u)
        else:  # sqrt
            return div(du, mul(Num(2.0), self))
        return mul(outer, du)

    def variables(self):
        return self.arg.variables()

    def subst(self, mapping):
        return call(self.fname, self.arg.subst(mapping))

    def _source(self):
        return f"{self.fname}({self.arg._source()})"


def as_expr(x):
    if isinstance(x, Expression):
        return x
    if isinstance(x, str):
        return parse(x)
    return Num(x)


# Smart constructors: constant folding plus dropping of 0/1 identities.
# No further simplification is attempted.

def _num(x):
    return isinstance(x, Num)


def add(a, b):
    if _num(a) and _num(b):
        return Num(a.value + b.value)
    if _num(a) and a.value == 0.0:
        return b
    if _num(b) and b.value == 0.0:
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if _num(a) and _num(b):
        return Num(a.value - b.value)
    if _num(b) and b.value == 0.0:
        return a
    if _num(a) and a.value == 0.0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if _num(a) and _num(b):
        return Num(a.value * b.value)
    if (_num(a) and a.value == 0.0) or (_num(b) and b.value == 0.0):
        return Num(0.0)
    if _num(a) and a.value == 1.0:
        return b
    if _num(b) and b.value == 1.0:
        return a
    return BinOp("*", a, b)


def div(a, b):
    if _num(b) and b.value == 0.0:
        return BinOp("/", a, b)  # fold would raise; keep node, error at eval
    if _num(a) and _num(b):
        return Num(a.value / b.value)
    if _num(a) and a.value == 0.0:
        return Num(0.0)
    if _num(b) and b.value == 1.0:
        return a
    return BinOp("/", a, b)


def pow_(a, b):
    if _num(b):
        if b.value == 1.0:
            return a
        if b.value == 0.0:
            return Num(1.0)
    if _num(a) and _num(b):
        try:
            r = a.value ** b.value
        except (OverflowError, ValueError, ZeroDivisionError):
            return BinOp("^", a, b)
        if isinstance(r, complex) or not math.isfinite(r):
            return BinOp("^", a, b)
        return Num(r)
    return BinOp("^", a, b)


def neg(a):
    if _num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def call(fname, arg):
    if _num(arg):
        try:
            return Num(Call(fname, arg).evaluate({}))
        except EvalError:
            pass
    return Call(fname, arg)


_MAKERS = {"+": add, "-": sub, "*": mul, "/": div, "^": pow_}

ZERO = Num(0.0)
ONE = Num(1.0)


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, source):
        self.src = source
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip_ws()
        if self.pos >= len(self.src):
            return ""
        return self.src[self.pos]

    def parse(self):
        e = self.expr()
        self._skip_ws()
        if self.pos != len(self.src):
            raise ParseError(f"unexpected character {self.src[self.pos]!r}", self.pos)
        return e

    def expr(self):
        e = self.term()
        while self._peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self._peek() in ("*", "/"):
            op = self.src[self.pos]
            self.pos += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self._peek() == "-":
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self._peek() == "^":
            self.pos += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        ch = self._peek()
        if ch == "":
            raise ParseError("unexpected end of input", self.pos)
        if ch == "(":
            self.pos += 1
            e = self.expr()
            if self._peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return e
        m = _NUMBER_RE.match(self.src, self.pos)
        if m:
            self.pos = m.end()
            return Num(float(m.group()))
        m = _IDENT_RE.match(self.src, self.pos)
        if m:
            name = m.group()
            self.pos = m.end()
            if self._peek() == "(":
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function '{name}'", m.start())
                self.pos += 1
                arg = self.expr()
                if self._peek() != ")":
                    raise ParseError("expected ')'", self.pos)
                self.pos += 1
                return Call(name, arg)
            if name == "pi":
                return Num(math.pi)
            return Var(name)
        raise ParseError(f"unexpected character {ch!r}", self.pos)


def parse(source):
    """Parse a scalar expression string into an Expression AST."""
    if not isinstance(source, str):
        raise ParseError("expression source must be a string", 0)
    return _Parser(source).parse()


def to_source(e):
    """Print an Expression so that parse(to_source(e)) evaluates identically."""
    return e._source()


# ---------------------------------------------------------------------------
# Compilation to vectorized numpy callables

_NP_FUNCS = {
    "sin": "_np.sin", "cos": "_np.cos", "tan": "_np.tan",
    "exp": "_np.exp", "log": "_np.log", "sqrt": "_np.sqrt",
}


def _emit(e, names):
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        try:
            return names[e.name]
        except KeyError:
            raise EvalError(f"unbound variable '{e.name}' in compiled expression") from None
    if isinstance(e, Neg):
        return f"(-{_emit(e.child, names)})"
    if isinstance(e, BinOp):
        a, b = _emit(e.left, names), _emit(e.right, names)
        if e.op == "^":
            return f"({a} ** {b})"
        return f"({a} {e.op} {b})"
    return f"{_NP_FUNCS[e.fname]}({_emit(e.arg, names)})"


def _compile(e, var_order):
    names = {v: f"_a{i}" for i, v in enumerate(var_order)}
    args = ", ".join(names[v] for v in var_order)
    body = _emit(e, names)
    src = f"def _f({args}):\n    return {body}\n" if var_order else \
          f"def _f():\n    return {body}\n"
    ns = {"_np": np}
    exec(src, ns)  # noqa: S102 - generated from a closed AST grammar
    fn = ns["_f"]
    if not var_order:
        const = float(fn())

        def fn_const(*arrays):
            return const

        return fn_const

    def wrapped(*arrays):
        with np.errstate(all="ignore"):
            out = fn(*arrays)
        if np.isscalar(out) or np.ndim(out) == 0:
            out = np.broadcast_to(np.asarray(out, dtype=float),
                                  np.shape(arrays[0])).copy()
        return out

    return wrapped


def evaluate_many(e, var_order, columns):
    """Vectorized evaluation over arrays (one per variable, broadcastable)."""
    return e.compiled(tuple(var_order))(*columns)
