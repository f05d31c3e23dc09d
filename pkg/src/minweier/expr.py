"""Holomorphic expressions w(z): parsing, printing, differentiation, evaluation.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?          # right-associative, exponent must fold to an integer
    atom   := (NUMBER | IMAG) power?    # coefficient juxtaposition: 2z, 3i*z, 2exp(z)
            | 'z' | 'i' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := exp | sin | cos | sinh | cosh

``NUMBER`` is a decimal literal (``2``, ``0.5``, ``1e-3``); ``IMAG`` is a
number with an ``i`` suffix (``3i``, ``0.5i``).  A complex literal ``a+bi``
is the sum of a real and an imaginary literal and folds to one constant.

Subtrees whose operands are all constants fold to a single constant, and
the identities ``x*1``, ``x*0``, ``x+0``, ``x-0``, ``x/1``, ``x^1``,
``x^0`` are applied at construction.  Nothing else is simplified.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprSyntaxError, NonFiniteError, PoleError

FUNCTIONS = ("exp", "sin", "cos", "sinh", "cosh")
_BINARY = {"sum": "+", "difference": "-", "product": "*", "quotient": "/"}
_PRECEDENCE = {"sum": 1, "difference": 1, "product": 2, "quotient": 2, "power": 3}

DEFAULT_POLE_FLOOR = 1e-300


@dataclass(frozen=True)
class Expr:
    """Immutable expression node.

    ``kind`` is one of ``const``, ``var``, ``sum``, ``difference``,
    ``product``, ``quotient``, ``power``, or a name from :data:`FUNCTIONS`.
    ``value`` holds the complex constant for ``const`` nodes and the
    integer exponent for ``power`` nodes.
    """

    kind: str
    args: tuple = ()
    value: complex | int | None = None
    _program: list = field(default_factory=list, compare=False, repr=False, hash=False)

    def __str__(self):
        return to_string(self)

    @property
    def program(self):
        if not self._program:
            self._program.append(compile_program(self))
        return self._program[0]

    def derivative(self):
        return differentiate(self)

    def __call__(self, z, pole_floor=DEFAULT_POLE_FLOOR):
        return evaluate(self, z, pole_floor)


Z = Expr("var")


def _clean(c):
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise NonFiniteError(f"constant folding produced a non-finite value {c!r}")
    # drop negative zeros so printing is stable
    return complex(c.real + 0.0, c.imag + 0.0)


def const(c):
    return Expr("const", value=_clean(c))


def _is_const(e, c=None):
    return e.kind == "const" and (c is None or e.value == c)


def add(a, b):
    if _is_const(a) and _is_const(b):
        return const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return Expr("sum", (a, b))


def sub(a, b):
    if _is_const(a) and _is_const(b):
        return const(a.value - b.value)
    if _is_const(b, 0):
        return a
    return Expr("difference", (a, b))


def mul(a, b):
    if _is_const(a) and _is_const(b):
        return const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return const(0)
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return Expr("product", (a, b))


def div(a, b):
    if _is_const(b, 0):
        raise PoleError("division by the constant 0")
    if _is_const(a) and _is_const(b):
        return const(a.value / b.value)
    if _is_const(b, 1):
        return a
    return Expr("quotient", (a, b))


def neg(a):
    if _is_const(a):
        return const(-a.value)
    return mul(const(-1), a)


def power(a, n):
    n = int(n)
    if _is_const(a):
        if a.value == 0 and n < 0:
            raise PoleError("0 raised to a negative power")
        return const(a.value**n)
    if n == 0:
        return const(1)
    if n == 1:
        return a
    return Expr("power", (a,), n)


def func(name, a):
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if _is_const(a):
        return const(getattr(cmath, name)(a.value))
    return Expr(name, (a,))


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos == len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos + 1)
        if m.group("num") is not None:
            kind = "imag" if m.group("imag") else "num"
            tokens.append((kind, m.group("num"), pos + 1))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), pos + 1))
        else:
            tokens.append(("op", m.group("op"), pos + 1))
        pos = m.end()
    tokens.append(("end", "", len(source) + 1))
    return tokens


class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, text, col = self.take()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}, found {text or 'end of input'!r}", col)

    def parse(self):
        e = self.expr()
        kind, text, col = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", col)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, col = self.take()
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                try:
                    e = div(e, rhs)
                except PoleError:
                    raise ExprSyntaxError("division by the constant 0", col) from None
        return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in "+-":
            self.take()
            e = self.unary()
            return e if text == "+" else neg(e)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            col = self.peek()[2]
            exponent = self.unary()
            if (
                exponent.kind != "const"
                or exponent.value.imag != 0
                or not float(exponent.value.real).is_integer()
            ):
                raise ExprSyntaxError("exponent must be an integer constant", col)
            try:
                return power(base, int(exponent.value.real))
            except PoleError:
                raise ExprSyntaxError("0 raised to a negative power", col) from None
        return base

    def atom(self):
        kind, text, col = self.take()
        if kind in ("num", "imag"):
            c = const(float(text) if kind == "num" else complex(0.0, float(text)))
            nxt = self.peek()
            if nxt[0] == "name" or nxt[:2] == ("op", "("):
                return mul(c, self.power())
            return c
        if kind == "name":
            if text == "z":
                return Z
            if text == "i":
                return const(1j)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(text, arg)
            raise ExprSyntaxError(f"unknown identifier {text!r}", col)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", col)


def parse_expr(source: str) -> Expr:
    """Parse ``source`` into an :class:`Expr`; raises :class:`ExprSyntaxError`."""
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# printing


def _num(x):
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _const_str(c):
    re_, im = c.real, c.imag
    if im == 0:
        return _num(re_) if re_ >= 0 else f"({_num(re_)})"
    if re_ == 0:
        return f"{_num(im)}i" if im > 0 else f"({_num(im)}i)"
    sign = "+" if im > 0 else "-"
    return f"({_num(re_)}{sign}{_num(abs(im))}i)"


def to_string(e: Expr) -> str:
    """Print ``e`` so that ``parse_expr(to_string(e)) == e``."""
    k = e.kind
    if k == "const":
        return _const_str(e.value)
    if k == "var":
        return "z"
    if k in FUNCTIONS:
        return f"{k}({to_string(e.args[0])})"
    if k == "power":
        base = e.args[0]
        b = to_string(base)
        if base.kind not in ("var", "const") and base.kind not in FUNCTIONS:
            b = f"({b})"
        n = e.value
        return f"{b}^{n}" if n >= 0 else f"{b}^({n})"
    prec = _PRECEDENCE[k]
    left, right = e.args
    ls, rs = to_string(left), to_string(right)
    if _PRECEDENCE.get(left.kind, 9) < prec:
        ls = f"({ls})"
    if _PRECEDENCE.get(right.kind, 9) <= prec:
        rs = f"({rs})"
    return f"{ls}{_BINARY[k]}{rs}"


# --------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr) -> Expr:
    """Symbolic d/dz."""
    k = e.kind
    if k == "const":
        return const(0)
    if k == "var":
        return const(1)
    if k in ("sum", "difference"):
        a, b = e.args
        da, db = differentiate(a), differentiate(b)
        return add(da, db) if k == "sum" else sub(da, db)
    if k == "product":
        a, b = e.args
        return add(mul(differentiate(a), b), mul(a, differentiate(b)))
    if k == "quotient":
        a, b = e.args
        if _is_const(b):
            return div(differentiate(a), b)
        num = sub(mul(differentiate(a), b), mul(a, differentiate(b)))
        return div(num, power(b, 2))
    if k == "power":
        (a,) = e.args
        n = e.value
        return mul(mul(const(n), power(a, n - 1)), differentiate(a))
    (a,) = e.args
    da = differentiate(a)
    if k == "exp":
        outer = e
    elif k == "sin":
        outer = func("cos", a)
    elif k == "cos":
        outer = neg(func("sin", a))
    elif k == "sinh":
        outer = func("cosh", a)
    else:
        outer = func("sinh", a)
    return mul(outer, da)


def derivatives(e: Expr, order: int) -> list[Expr]:
    """``[e, e', ..., e^(order)]``."""
    out = [e]
    for _ in range(order):
        out.append(differentiate(out[-1]))
    return out


# --------------------------------------------------------------------------
# compilation to a postfix program shared by both kernel backends

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW = range(7)
OP_EXP, OP_SIN, OP_COS, OP_SINH, OP_COSH = range(7, 12)
_OPCODES = {
    "sum": OP_ADD, "difference": OP_SUB, "product": OP_MUL, "quotient": OP_DIV,
    "exp": OP_EXP, "sin": OP_SIN, "cos": OP_COS, "sinh": OP_SINH, "cosh": OP_COSH,
}
MAX_STACK = 256


@dataclass(frozen=True, eq=False)
class Program:
    """Postfix form of an expression: opcode/argument pairs plus a constant pool."""

    ops: np.ndarray
    args: np.ndarray
    consts_re: np.ndarray
    consts_im: np.ndarray
    depth: int
    cache: dict = field(default_factory=dict, repr=False)


def compile_program(e: Expr) -> Program:
    ops, args, consts = [], [], []
    depth = 0
    cur = 0

    def emit(op, arg, delta):
        nonlocal depth, cur
        ops.append(op)
        args.append(arg)
        cur += delta
        depth = max(depth, cur)

    def walk(node):
        k = node.kind
        if k == "const":
            consts.append(node.value)
            emit(OP_CONST, len(consts) - 1, 1)
        elif k == "var":
            emit(OP_VAR, 0, 1)
        elif k == "power":
            walk(node.args[0])
            emit(OP_POW, node.value, 0)
        elif k in FUNCTIONS:
            walk(node.args[0])
            emit(_OPCODES[k], 0, 0)
        else:
            walk(node.args[0])
            walk(node.args[1])
            emit(_OPCODES[k], 0, -1)

    walk(e)
    if depth > MAX_STACK:
        raise ValueError(f"expression needs stack depth {depth} > {MAX_STACK}")
    c = np.asarray(consts, dtype=complex) if consts else np.zeros(1, dtype=complex)
    return Program(
        ops=np.asarray(ops, dtype=np.int32),
        args=np.asarray(args, dtype=np.int64),
        consts_re=np.ascontiguousarray(c.real),
        consts_im=np.ascontiguousarray(c.imag),
        depth=depth,
    )


def evaluate(e: Expr, z, pole_floor: float = DEFAULT_POLE_FLOOR) -> complex:
    """Evaluate ``e`` at the complex point ``z`` (or elementwise over an array).

    Raises :class:`PoleError` when a denominator magnitude drops below
    ``pole_floor`` and :class:`NonFiniteError` on overflow.
    """
    from ._backend import eval_points

    if np.ndim(z):
        zs = np.asarray(z, dtype=complex)
        values, status = eval_points(e.program, zs, pole_floor)
        if np.any(status):
            k = np.argwhere(status)[0]
            _raise_status(int(status[tuple(k)]), zs[tuple(k)])
        return values
    values, status = eval_points(e.program, np.array([complex(z)]), pole_floor)
    _raise_status(int(status[0]), z)
    return complex(values[0])


def _raise_status(code, z):
    from ._backend import STATUS_NONFINITE, STATUS_POLE

    if code == STATUS_POLE:
        raise PoleError(f"pole encountered at z={complex(z)!r}")
    if code == STATUS_NONFINITE:
        raise NonFiniteError(f"non-finite value at z={complex(z)!r}")
