"""Smooth scalar expressions: parser, tree, and ring-generic evaluator.

Grammar (standard precedence, ``^`` right-associative, unary minus binds
looser than ``^`` so ``-x^2`` is ``-(x^2)``)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # exponent must fold to a constant
    atom    := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``**`` is accepted as a synonym for ``^``.  ``pi`` and ``e`` are predefined.
The same tree evaluates over floats, numpy arrays, :class:`MultiDual` and
:class:`MicroVector` values.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import primitives
from .errors import DimensionError, ExprSyntaxError, NonInvertibleError, UnboundVariableError
from .nilpotent import MicroVector, MultiDual, integer_power

CONSTANTS = {"pi": math.pi, "e": math.e}

# integer exponents up to this size use repeated multiplication
_MAX_INT_POWER = 64


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def free_vars(self):
        raise NotImplementedError

    def evaluate(self, env=None):
        return self._eval(env or {})

    def substitute(self, mapping):
        """Replace variables by expressions, structurally."""
        raise NotImplementedError

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def free_vars(self):
        return frozenset()

    def _eval(self, env):
        return self.value

    def substitute(self, mapping):
        return self

    def format(self):
        s = repr(float(self.value))
        return f"({s})" if self.value < 0 or s.startswith("-") else s


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def free_vars(self):
        return frozenset({self.name})

    def _eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            pass
        if self.name in CONSTANTS:
            return CONSTANTS[self.name]
        raise UnboundVariableError(f"variable {self.name!r} is not bound")

    def substitute(self, mapping):
        return mapping.get(self.name, self)

    def format(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def free_vars(self):
        return self.operand.free_vars()

    def _eval(self, env):
        return -self.operand._eval(env)

    def substitute(self, mapping):
        return neg(self.operand.substitute(mapping))

    def format(self):
        return f"(-{self.operand.format()})"


def _divide(a, b):
    if isinstance(b, (MultiDual, MicroVector)):
        return a / b
    if np.any(np.asarray(b) == 0):
        raise NonInvertibleError("division by zero")
    return a / b


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _divide,
}


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()

    def _eval(self, env):
        return _BINARY[self.op](self.left._eval(env), self.right._eval(env))

    def substitute(self, mapping):
        return BinOp(self.op, self.left.substitute(mapping), self.right.substitute(mapping))

    def format(self):
        return f"({self.left.format()} {self.op} {self.right.format()})"


def _power(x, r):
    if float(r).is_integer() and abs(r) <= _MAX_INT_POWER:
        k = int(r)
        if isinstance(x, (MultiDual, MicroVector)):
            return x ** k
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        one = np.ones_like(x) if np.ndim(x) else 1.0
        if k < 0:
            if np.any(np.asarray(x) == 0):
                raise NonInvertibleError("zero raised to a negative power")
            x = 1.0 / x
        return integer_power(x, abs(k), one)
    return primitives.apply("pow", x, r)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float

    def free_vars(self):
        return self.base.free_vars()

    def _eval(self, env):
        return _power(self.base._eval(env), self.exponent)

    def substitute(self, mapping):
        return Pow(self.base.substitute(mapping), self.exponent)

    def format(self):
        return f"({self.base.format()})^{Num(self.exponent).format()}"


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def free_vars(self):
        return self.arg.free_vars()

    def _eval(self, env):
        return primitives.apply(self.func, self.arg._eval(env))

    def substitute(self, mapping):
        return Call(self.func, self.arg.substitute(mapping))

    def format(self):
        return f"{self.func}({self.arg.format()})"


def _generator_count(env):
    counts = {v.n for v in env.values() if isinstance(v, MultiDual)}
    if len(counts) > 1:
        raise DimensionError(f"environment mixes algebras with generator counts {sorted(counts)}")
    if any(isinstance(v, MicroVector) for v in env.values()):
        raise TypeError("derivative nodes cannot be evaluated over MicroVector inputs")
    return counts.pop() if counts else 0


@dataclass(frozen=True)
class Diff(Expr):
    """Partial derivative of ``arg`` with respect to ``var``, computed by nilpotent evaluation.

    Over an environment living in the n-generator algebra, the variable is
    shifted by a fresh generator e_n and the e_n-part of the result is the
    partial derivative, still an element of the n-generator algebra.  No
    symbolic manipulation happens.
    """

    arg: Expr
    var: str

    def free_vars(self):
        return self.arg.free_vars() | {self.var}

    def _eval(self, env):
        n = _generator_count(env)
        if self.var not in env:
            raise UnboundVariableError(f"variable {self.var!r} is not bound")
        lifted = {
            k: (v.extend(n + 1) if isinstance(v, MultiDual) else MultiDual.constant(v, n + 1))
            for k, v in env.items()
        }
        lifted[self.var] = lifted[self.var] + MultiDual.generator(n, n + 1)
        out = self.arg._eval(lifted)
        if not isinstance(out, MultiDual):
            zero = np.zeros_like(np.asarray(out, dtype=float))
            return MultiDual.constant(zero, n) if n else (zero if zero.ndim else 0.0)
        _, part = out.split_top()
        if n == 0:
            return part.standard_part
        return part

    def substitute(self, mapping):
        if self.var in mapping:
            raise ValueError("cannot substitute the differentiation variable of a Diff node")
        return Diff(self.arg.substitute(mapping), self.var)

    def format(self):
        return f"D[{self.var}]({self.arg.format()})"


def _children(e):
    if isinstance(e, Neg):
        return (e.operand,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (Call, Diff)):
        return (e.arg,)
    return ()


def variables(e, include_constants=False):
    """Free variables in order of first appearance, constants excluded by default."""
    seen = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var) and node.name not in seen:
            if include_constants or node.name not in CONSTANTS:
                seen.append(node.name)
        if isinstance(node, Diff) and node.var not in seen:
            seen.append(node.var)
        stack.extend(reversed(_children(node)))
    return tuple(seen)


def neg(e):
    """Canonical negation: literals fold into a signed literal."""
    if isinstance(e, Num):
        return Num(-e.value)
    return Neg(e)


def is_polynomial(e):
    """True if ``e`` is built from +, -, * and non-negative integer powers only."""
    if isinstance(e, (Num, Var)):
        return True
    if isinstance(e, Neg):
        return is_polynomial(e.operand)
    if isinstance(e, BinOp):
        if e.op == "/":
            return is_polynomial(e.left) and isinstance(e.right, Num)
        return is_polynomial(e.left) and is_polynomial(e.right)
    if isinstance(e, Pow):
        return e.exponent >= 0 and float(e.exponent).is_integer() and is_polynomial(e.base)
    if isinstance(e, Diff):
        return is_polynomial(e.arg)
    return False


def contains_call(e):
    if isinstance(e, Call):
        return True
    if isinstance(e, (Num, Var)):
        return False
    if isinstance(e, Neg):
        return contains_call(e.operand)
    if isinstance(e, BinOp):
        return contains_call(e.left) or contains_call(e.right)
    if isinstance(e, (Pow,)):
        return contains_call(e.base)
    if isinstance(e, Diff):
        return contains_call(e.arg)
    return True


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int  # byte offset


def tokenize(source):
    tokens = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte, source)
        text = m.group()
        if m.lastgroup != "ws":
            kind = m.lastgroup
            if kind == "op" and text == "**":
                text = "^"
            tokens.append(Token(kind, text, byte))
        byte += len(m.group().encode("utf-8"))
        pos = m.end()
    tokens.append(Token("end", "", byte))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        raise ExprSyntaxError(message, tok.offset, self.source)

    def advance(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text):
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self):
        if self.tok.kind == "end":
            self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.tok.text == "-":
            self.advance()
            return neg(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text != "^":
            return base
        caret = self.advance()
        start = self.tok
        exponent = self.unary()
        if exponent.free_vars() or contains_call(exponent):
            self.error("'^' requires a literal exponent", start)
        value = float(exponent.evaluate())
        if not math.isfinite(value):
            self.error("exponent is not finite", caret)
        return Pow(base, value)

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if self.tok.text == "(":
                if tok.text in primitives.NON_SMOOTH:
                    self.error(f"non-smooth function {tok.text!r} is not supported", tok)
                if tok.text not in primitives.PRIMITIVES:
                    self.error(f"unknown primitive {tok.text!r}", tok)
                self.advance()
                arg = self.expr()
                if self.tok.text == ",":
                    self.error(f"{tok.text} takes exactly one argument")
                self.expect(")")
                return Call(tok.text, arg)
            return Var(tok.text)
        if tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {tok.text!r}")


def parse(source):
    """Parse ``source`` into an :class:`Expr` tree.

    >>> sorted(parse("2*pi*r*h + 2*pi*r^2").free_vars())
    ['h', 'pi', 'r']
    """
    if isinstance(source, Expr):
        return source
    return _Parser(source).parse()


def as_expr(e):
    """Accept either source text or an already-built tree (or a bare number)."""
    if isinstance(e, Expr):
        return e
    if isinstance(e, (int, float)):
        return Num(float(e))
    return parse(e)


def evaluate(e, env=None):
    return as_expr(e).evaluate(env)


def format_expr(e):
    return e.format()
