"""Random well-formed expressions with independently computed values.

The generator keeps its own tuple trees, writes text with its own parenthesizer
(plus random redundant parentheses and whitespace) and evaluates bottom-up with
the same IEEE operations the grammar prescribes. It shares no code with
:mod:`cosetgauge.expr`, so it serves as the reference oracle for the parser.
"""

import math
import struct

import numpy as np

from . import expr as fx

_LITERALS = ("0", "1", "2", "3", "0.5", "0.25", "1.5", "2.75", "1e-2", "3.5E1", "0.125", "7", "12.0", ".75")
_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_LEVEL = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
LIMIT = 1e6


class _Reject(Exception):
    pass


def _level(tree):
    return _LEVEL.get(tree[0], 5)


class CorpusGenerator:
    def __init__(self, seed, env):
        self.rng = np.random.default_rng(seed)
        self.env = dict(env)
        self.names = sorted(env)

    def _space(self):
        return " " * int(self.rng.integers(0, 3)) if self.rng.random() < 0.3 else ""

    def _maybe_wrap(self, text, force):
        if force or self.rng.random() < 0.05:
            return f"({self._space()}{text}{self._space()})"
        return text

    def leaf(self):
        if self.rng.random() < 0.5:
            name = self.names[int(self.rng.integers(len(self.names)))]
            return ("var", name), name, self.env[name]
        lit = _LITERALS[int(self.rng.integers(len(_LITERALS)))]
        return ("num", lit), lit, float(lit)

    def exponent(self):
        k = int(self.rng.integers(0, 4))
        if self.rng.random() < 0.2:
            return ("neg", ("num", str(k))), f"-{k}", -float(k)
        return ("num", str(k)), str(k), float(k)

    def node(self, depth):
        for _ in range(50):
            try:
                return self._node(depth)
            except _Reject:
                continue
        return self.leaf()

    def _node(self, depth):
        if depth <= 0 or self.rng.random() < 0.25:
            return self.leaf()
        kind = ("add", "sub", "mul", "div", "neg", "pow", "func")[int(self.rng.integers(7))]
        if kind == "func":
            name = ("sin", "cos", "exp")[int(self.rng.integers(3))]
            tree, text, val = self.node(depth - 1)
            if name == "exp" and val > 20:
                raise _Reject
            out = _FUNCS[name](val)
            return ("func", name, tree), f"{name}({self._space()}{text}{self._space()})", self._check(out)
        if kind == "neg":
            tree, text, val = self.node(depth - 1)
            text = self._maybe_wrap(text, _level(tree) < 3)
            return ("neg", tree), f"-{self._space()}{text}", -val
        if kind == "pow":
            btree, btext, bval = self.node(depth - 1)
            etree, etext, evalue = self.exponent()
            if bval == 0.0 and evalue < 0:
                raise _Reject
            btext = self._maybe_wrap(btext, _level(btree) <= 4)
            out = bval ** float(evalue)
            return ("pow", btree, etree), f"{btext}{self._space()}^{self._space()}{etext}", self._check(out)
        ltree, ltext, lval = self.node(depth - 1)
        rtree, rtext, rval = self.node(depth - 1)
        lvl = _LEVEL[kind]
        ltext = self._maybe_wrap(ltext, _level(ltree) < lvl)
        rtext = self._maybe_wrap(rtext, _level(rtree) <= lvl)
        if kind == "add":
            out = lval + rval
        elif kind == "sub":
            out = lval - rval
        elif kind == "mul":
            out = lval * rval
        else:
            if abs(rval) < 1e-3:
                raise _Reject
            out = lval / rval
        text = f"{ltext}{self._space()}{_OPS[kind]}{self._space()}{rtext}"
        return (kind, ltree, rtree), text, self._check(out)

    @staticmethod
    def _check(v):
        if not math.isfinite(v) or abs(v) > LIMIT:
            raise _Reject
        return v

    def generate(self, depth=5):
        tree, text, value = self.node(depth)
        return text, value


def float_bits(v: float) -> int:
    return struct.unpack("<q", struct.pack("<d", v))[0]


DEFAULT_ENV = {"x1": 0.7, "x2": -1.3, "x3": 0.25, "s1": 0.4, "s2": -0.9}


def run_corpus(n=10_000, seed=0, depth=5, env=None):
    """Parse, evaluate and round-trip ``n`` generated expressions.

    Returns a dict with counts of parse failures, value mismatches (bitwise) and
    round-trip mismatches, plus the first few offending texts.
    """
    env = dict(env or DEFAULT_ENV)
    gen = CorpusGenerator(seed, env)
    parse_fail = value_mismatch = roundtrip_mismatch = 0
    examples = []
    for _ in range(n):
        text, value = gen.generate(depth)
        try:
            tree = fx.parse(text)
        except fx.FieldExprError as exc:
            parse_fail += 1
            if len(examples) < 5:
                examples.append({"text": text, "problem": str(exc)})
            continue
        got = fx.evaluate(tree, env)
        if float_bits(got) != float_bits(value):
            value_mismatch += 1
            if len(examples) < 5:
                examples.append({"text": text, "problem": f"value {got!r} != {value!r}"})
        printed = fx.to_string(tree)
        if fx.parse(printed) != tree or fx.to_string(fx.parse(printed)) != printed:
            roundtrip_mismatch += 1
            if len(examples) < 5:
                examples.append({"text": text, "problem": f"round trip via {printed!r}"})
    return {
        "count": n,
        "parse_failures": parse_fail,
        "value_mismatches": value_mismatch,
        "roundtrip_mismatches": roundtrip_mismatch,
        "examples": examples,
    }
