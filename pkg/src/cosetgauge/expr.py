"""Field-expression language for coefficient functions.

Grammar (EBNF, also in docs/grammar.md)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = primary [ "^" unary ] ;          (* right associative *)
    primary = number | name | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "exp" ;

Variable names: ``x<l>`` base coordinates, ``s<m>`` coset coordinates,
``y<i>`` fibre coordinates, ``k<i>_<l>`` formal covariant differentials,
``sj<m>_<l>`` and ``yj<i>_<l>`` jet coordinates. All indices are 1-based.
Exponents must evaluate to integers.
"""

import math
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import CosetGaugeError

DEFAULT_STEP = 1e-4
TINY_DENOMINATOR = 1e-300

FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}

VARIABLE_RE = re.compile(r"^(x|s|y)([1-9][0-9]*)$|^(k|sj|yj)([1-9][0-9]*)_([1-9][0-9]*)$")


class FieldExprError(CosetGaugeError):
    pass


class ExpressionSyntaxError(FieldExprError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}" + (f" (expected {', '.join(sorted(expected))})" if expected else ""))
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownIdentifier(FieldExprError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class ArityError(FieldExprError):
    def __init__(self, name, got, offset):
        super().__init__(f"{name} takes 1 argument, got {got} (offset {offset})")
        self.name = name
        self.got = got


class EvaluationError(FieldExprError):
    pass


class DivisionByZero(EvaluationError):
    pass


class NonFinite(EvaluationError):
    pass


class NonIntegerExponent(EvaluationError):
    pass


class MissingVariable(EvaluationError):
    pass


def _finite(v):
    if not math.isfinite(v):
        raise NonFinite(f"non-finite intermediate value {v!r}")
    return v


# ---------------------------------------------------------------- AST


@dataclass(frozen=True, slots=True)
class Num:
    value: float

    def _eval(self, env):
        return self.value


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def _eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise MissingVariable(f"no value for variable {self.name!r}") from None


@dataclass(frozen=True, slots=True)
class Neg:
    arg: object

    def _eval(self, env):
        return -self.arg._eval(env)


@dataclass(frozen=True, slots=True)
class Add:
    left: object
    right: object

    def _eval(self, env):
        return _finite(self.left._eval(env) + self.right._eval(env))


@dataclass(frozen=True, slots=True)
class Sub:
    left: object
    right: object

    def _eval(self, env):
        return _finite(self.left._eval(env) - self.right._eval(env))


@dataclass(frozen=True, slots=True)
class Mul:
    left: object
    right: object

    def _eval(self, env):
        return _finite(self.left._eval(env) * self.right._eval(env))


@dataclass(frozen=True, slots=True)
class Div:
    left: object
    right: object

    def _eval(self, env):
        num = self.left._eval(env)
        den = self.right._eval(env)
        if abs(den) < TINY_DENOMINATOR:
            raise DivisionByZero(f"division by {den!r}")
        return _finite(num / den)


@dataclass(frozen=True, slots=True)
class Pow:
    base: object
    exponent: object

    def _eval(self, env):
        b = self.base._eval(env)
        e = self.exponent._eval(env)
        if not float(e).is_integer():
            raise NonIntegerExponent(f"exponent {e!r} is not an integer")
        try:
            return _finite(b ** float(e))
        except ZeroDivisionError:
            raise DivisionByZero("zero raised to a negative power") from None
        except OverflowError:
            raise NonFinite("overflow in power") from None


@dataclass(frozen=True, slots=True)
class Func:
    name: str
    arg: object

    def _eval(self, env):
        try:
            return _finite(FUNCTIONS[self.name](self.arg._eval(env)))
        except OverflowError:
            raise NonFinite(f"overflow in {self.name}") from None


FieldExpr = Num | Var | Neg | Add | Sub | Mul | Div | Pow | Func

_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}


# ---------------------------------------------------------------- lexer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


_OPERAND_START = frozenset({"number", "identifier", "'('", "'-'"})


class _Parser:
    def __init__(self, text, variables):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExpressionSyntaxError(f"unexpected {val or 'end of input'!r}", off, {f"'{op}'"})
        self.take()

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {val!r}", off, {"operator", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def primary(self):
        kind, val, off = self.take()
        if kind == "num":
            value = float(val)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"number {val!r} out of range", off)
            return Num(value)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect_op("(")
                args = self.arguments()
                if len(args) != 1:
                    raise ArityError(val, len(args), off)
                return Func(val, args[0])
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                raise UnknownIdentifier(val, off)
            if not VARIABLE_RE.match(val) or (self.variables is not None and val not in self.variables):
                raise UnknownIdentifier(val, off)
            return Var(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"unexpected {val or 'end of input'!r}", off, _OPERAND_START)

    def arguments(self):
        if self.peek()[0] == "op" and self.peek()[1] == ")":
            self.take()
            return []
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect_op(")")
        return args


def parse(text: str, variables=None) -> FieldExpr:
    """Parse ``text``. ``variables``, if given, is the set of admissible variable names."""
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text, None if variables is None else frozenset(variables)).parse()


# ---------------------------------------------------------------- printer

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(node):
    return _PREC.get(type(node), 5)


def to_string(node) -> str:
    t = type(node)
    if t is Num:
        s = repr(node.value)
        return f"({s})" if node.value < 0 or s.startswith("-") else s
    if t is Var:
        return node.name
    if t is Func:
        return f"{node.name}({to_string(node.arg)})"
    if t is Neg:
        inner = to_string(node.arg)
        return f"-({inner})" if _prec(node.arg) < 3 else f"-{inner}"
    if t is Pow:
        base = to_string(node.base)
        if _prec(node.base) <= 4:
            base = f"({base})"
        exp = to_string(node.exponent)
        if _prec(node.exponent) < 3:
            exp = f"({exp})"
        return f"{base}^{exp}"
    p = _PREC[t]
    left = to_string(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = to_string(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {_SYMBOL[t]} {right}"


def variables_of(node) -> frozenset:
    t = type(node)
    if t is Var:
        return frozenset({node.name})
    if t is Num:
        return frozenset()
    if t in (Neg, Func):
        return variables_of(node.arg)
    if t is Pow:
        return variables_of(node.base) | variables_of(node.exponent)
    return variables_of(node.left) | variables_of(node.right)


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EvalPoint:
    x: tuple
    sigma: tuple = ()
    f_labels: tuple = ()  # 1-based algebra indices naming the sigma slots

    def env(self) -> dict:
        env = {f"x{i + 1}": float(v) for i, v in enumerate(self.x)}
        labels = self.f_labels or tuple(range(1, len(self.sigma) + 1))
        env.update({f"s{m}": float(v) for m, v in zip(labels, self.sigma)})
        return env


def evaluate(node, point) -> float:
    """Evaluate in IEEE double precision, children left to right."""
    env = point.env() if isinstance(point, EvalPoint) else point
    return node._eval(env)


def diff_numeric(node, point, variable: str, step=DEFAULT_STEP, richardson=False) -> float:
    """Central difference ``(f(v+h) - f(v-h)) / 2h``; optionally one Richardson pass."""
    env = dict(point.env() if isinstance(point, EvalPoint) else point)
    if variable not in env:
        raise MissingVariable(f"no value for variable {variable!r}")
    v0 = env[variable]

    def central(h):
        env[variable] = v0 + h
        fp = node._eval(env)
        env[variable] = v0 - h
        fm = node._eval(env)
        return (fp - fm) / (2 * h)

    d = central(step)
    if richardson:
        d = (4.0 * central(step / 2) - d) / 3.0
    return _finite(d)


ZERO = Num(0.0)


class ExprArray:
    """A dense array of field expressions with absent entries equal to zero."""

    def __init__(self, shape, entries: Mapping | None = None):
        self.shape = tuple(shape)
        self.entries = {tuple(k): v for k, v in (entries or {}).items() if v != ZERO}

    def evaluate(self, env) -> np.ndarray:
        out = np.zeros(self.shape)
        for idx, node in self.entries.items():
            out[idx] = node._eval(env)
        return out

    def derivative(self, env, variable, step=DEFAULT_STEP, richardson=False) -> np.ndarray:
        out = np.zeros(self.shape)
        for idx, node in self.entries.items():
            out[idx] = diff_numeric(node, env, variable, step, richardson)
        return out

    def variables(self) -> frozenset:
        names = frozenset()
        for node in self.entries.values():
            names |= variables_of(node)
        return names

    def __bool__(self):
        return bool(self.entries)

    def __repr__(self):
        body = ", ".join(f"{k}: {to_string(v)!r}" for k, v in sorted(self.entries.items()))
        return f"ExprArray({self.shape}, {{{body}}})"
