"""Arithmetic expressions over chart coordinates.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Expressions are immutable trees.  They evaluate to IEEE doubles (``evaluate``)
or to truncated Taylor jets (``evaluate_jet``), the latter giving exact partial
derivatives of every order up to the jet order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .jets import Jet, JetAlgebra

__all__ = [
    "Expression", "Num", "Var", "Const", "Neg", "BinOp", "Call",
    "ExpressionError", "ParseError", "UnknownIdentifierError", "DomainError",
    "parse", "to_text", "evaluate", "evaluate_jet", "eval_jet",
    "variables", "FUNCTIONS", "CONSTANTS",
]

FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "sinh": 1, "cosh": 1, "tanh": 1,
    "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "atan2": 2,
}
CONSTANTS = {"pi": math.pi}


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class DomainError(ExpressionError):
    """Evaluation left the domain of an operation (hard error, never NaN)."""

    def __init__(self, message: str, subexpression: "Expression", point=None):
        self.subexpression = subexpression
        self.point = point
        where = "" if point is None else f" at {point}"
        super().__init__(f"{message} in '{to_text(subexpression)}'{where}")


# --------------------------------------------------------------------------
# tree

class Expression:
    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=True)
class Num(Expression):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expression):
    name: str


@dataclass(frozen=True, eq=True)
class Const(Expression):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    operand: Expression


@dataclass(frozen=True, eq=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Call(Expression):
    func: str
    args: tuple


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.text = text
        self.coords = set(coords)
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.advance()
        if text != value or kind == "end":
            what = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {what}", pos, self.text)

    def parse(self) -> Expression:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos, self.text)
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek() [0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expression:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(text, pos)
                self.advance()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}",
                        pos, self.text)
                return Call(text, tuple(args))
            if text in self.coords:
                return Var(text)
            if text in CONSTANTS:
                return Const(text)
            raise UnknownIdentifierError(text, pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {what}", pos, self.text)


def parse(text: str, coords: Sequence[str]) -> Expression:
    """Parse ``text`` into an expression over the coordinate names ``coords``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    clash = set(coords) & (set(CONSTANTS) | set(FUNCTIONS))
    if clash:
        raise ExpressionError(f"coordinate names shadow builtins: {sorted(clash)}")
    return _Parser(text, coords).parse()


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Expression) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _num_text(v: float) -> str:
    if v < 0 or not math.isfinite(v):
        raise ExpressionError(f"literal {v!r} has no textual form")
    return repr(float(v))


def to_text(node: Expression) -> str:
    """Normal form with the fewest parentheses that still re-parses to ``node``."""
    if isinstance(node, Num):
        if node.value < 0:
            return "-" + _num_text(-node.value)
        return _num_text(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _prec(node.operand) < 3 or (isinstance(node.operand, Num) and node.operand.value < 0):
            inner = f"({inner})"
        return "-" + inner
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left, right = to_text(node.left), to_text(node.right)
        lp, rp = _prec(node.left), _prec(node.right)
        if node.op == "^":
            if lp <= 4 or (isinstance(node.left, Num) and node.left.value < 0):
                left = f"({left})"
            if rp < 3:
                right = f"({right})"
        else:
            if lp < p or (isinstance(node.left, Num) and node.left.value < 0 and p > 1):
                left = f"({left})"
            if rp <= p or (isinstance(node.right, Num) and node.right.value < 0):
                right = f"({right})"
        return f"{left} {node.op} {right}" if p == 1 else f"{left}{node.op}{right}"
    raise TypeError(f"not an expression: {node!r}")


def variables(node: Expression) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= variables(a)
        return out
    return set()


# --------------------------------------------------------------------------
# float evaluation

def _first_bad(mask, point):
    if point is None:
        return None
    idx = np.argwhere(np.atleast_1d(mask))[0][0] if np.ndim(mask) else None
    if idx is None:
        return dict(point) if isinstance(point, Mapping) else point
    return {k: float(np.atleast_1d(v)[idx] if np.ndim(v) else v) for k, v in point.items()}


def evaluate(node: Expression, point: Mapping[str, float]):
    """Evaluate at ``point`` (name -> float or array; arrays evaluate pointwise)."""
    env = {k: np.asarray(v, dtype=float) for k, v in point.items()}
    out = _eval(node, env)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _eval(node, env):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExpressionError(f"point does not supply coordinate {node.name!r}") from None
    if isinstance(node, Const):
        return np.float64(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            bad = b == 0
            if np.any(bad):
                raise DomainError("division by zero", node, _first_bad(bad, env))
            return a / b
        return _float_pow(node, a, b, env)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        return _float_call(node, args, env)
    raise TypeError(f"not an expression: {node!r}")


def _integer_exponent(node: BinOp):
    r = node.right
    if isinstance(r, Neg) and isinstance(r.operand, Num):
        v = -r.operand.value
    elif isinstance(r, Num):
        v = r.value
    else:
        return None
    return int(v) if v == int(v) and abs(v) <= 64 else None


def _float_pow(node, a, b, env):
    k = _integer_exponent(node)
    if k is not None:
        if k < 0 and np.any(a == 0):
            raise DomainError("division by zero", node, _first_bad(a == 0, env))
        with np.errstate(over="raise"):
            return np.power(a, float(k))
    bad = (a < 0) | ((a == 0) & (b <= 0))
    if np.any(bad):
        raise DomainError("power of nonpositive base", node, _first_bad(bad, env))
    return np.power(a, b)


def _float_call(node, args, env):
    f = node.func
    x = args[0]
    if f == "log":
        bad = x <= 0
        if np.any(bad):
            raise DomainError("log of nonpositive value", node, _first_bad(bad, env))
        return np.log(x)
    if f == "sqrt":
        bad = x < 0
        if np.any(bad):
            raise DomainError("sqrt of negative value", node, _first_bad(bad, env))
        return np.sqrt(x)
    if f == "tan":
        bad = np.cos(x) == 0
        if np.any(bad):
            raise DomainError("tan pole", node, _first_bad(bad, env))
        return np.tan(x)
    if f == "atan2":
        y, xx = args
        bad = (y == 0) & (xx == 0)
        if np.any(bad):
            raise DomainError("atan2(0, 0)", node, _first_bad(bad, env))
        return np.arctan2(y, xx)
    return {"sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
            "tanh": np.tanh, "exp": np.exp, "abs": np.abs}[f](x)


# --------------------------------------------------------------------------
# jet evaluation

def evaluate_jet(node: Expression, env: Mapping[str, Jet]) -> Jet:
    """Evaluate with every coordinate bound to a jet (all in one algebra).

    Binding coordinates to the jets of a map composes the expression with that
    map, which is how pullbacks of expression fields are computed.
    """
    return _jeval(node, env, _template(env))


def _template(env):
    for v in env.values():
        return v
    raise ExpressionError("empty evaluation environment")


def _where(mask, env):
    mask = np.atleast_1d(mask)
    idx = np.unravel_index(int(np.argmax(mask)), mask.shape)
    pt = {}
    for k, v in env.items():
        val = v.value
        pt[k] = float(val[idx]) if np.ndim(val) else float(val)
    return pt


def _jeval(node, env, tpl: Jet) -> Jet:
    if isinstance(node, Num):
        return tpl.constant(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExpressionError(f"point does not supply coordinate {node.name!r}") from None
    if isinstance(node, Const):
        return tpl.constant(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_jeval(node.operand, env, tpl)
    if isinstance(node, BinOp):
        a = _jeval(node.left, env, tpl)
        op = node.op
        if op == "^":
            k = _integer_exponent(node)
            if k is not None:
                if k < 0 and np.any(a.value == 0):
                    raise DomainError("division by zero", node, _where(a.value == 0, env))
                return a.ipow(k)
        b = _jeval(node.right, env, tpl)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            bad = b.value == 0
            if np.any(bad):
                raise DomainError("division by zero", node, _where(bad, env))
            return a / b
        # general power a^b = exp(b log a)
        bad = (a.value < 0) | ((a.value == 0) & ((a.order > 0) | (b.value <= 0)))
        if np.any(bad):
            raise DomainError("power of nonpositive base", node, _where(bad, env))
        if b.is_constant_jet():
            return jets.power(a, b.value)
        return jets.exp(b * jets.log(a))
    if isinstance(node, Call):
        args = [_jeval(x, env, tpl) for x in node.args]
        return _jet_call(node, args, env)
    raise TypeError(f"not an expression: {node!r}")


def _jet_call(node, args, env) -> Jet:
    f = node.func
    x = args[0]
    v = x.value
    if f == "log":
        if np.any(v <= 0):
            raise DomainError("log of nonpositive value", node, _where(v <= 0, env))
        return jets.log(x)
    if f == "sqrt":
        bad = (v < 0) | ((v == 0) & (x.order > 0))
        if np.any(bad):
            raise DomainError("sqrt of negative value" if np.any(v < 0)
                              else "sqrt not differentiable at 0", node, _where(bad, env))
        return jets.sqrt(x)
    if f == "abs":
        if x.order > 0 and np.any(v == 0):
            raise DomainError("abs not differentiable at 0", node, _where(v == 0, env))
        return jets.absolute(x)
    if f == "tan":
        c = jets.cos(x)
        if np.any(c.value == 0):
            raise DomainError("tan pole", node, _where(c.value == 0, env))
        return jets.sin(x) / c
    if f == "tanh":
        return jets.sinh(x) / jets.cosh(x)
    if f == "atan2":
        y, xx = args
        bad = (y.value == 0) & (xx.value == 0)
        if np.any(bad):
            raise DomainError("atan2(0, 0)", node, _where(bad, env))
        return jets.atan2(y, xx)
    return {"sin": jets.sin, "cos": jets.cos, "sinh": jets.sinh,
            "cosh": jets.cosh, "exp": jets.exp}[f](x)


def eval_jet(node: Expression, point: Mapping[str, float], order: int = 1) -> Jet:
    """Jet of ``node`` at a single point, differentiating along every coordinate
    of ``point`` in iteration order.  ``order=1`` gives value and gradient."""
    names = list(point)
    alg = JetAlgebra(len(names), order)
    base = np.array([float(point[n]) for n in names])
    coords = alg.coordinates(base)
    env = {n: coords[i] for i, n in enumerate(names)}
    return evaluate_jet(node, env)
