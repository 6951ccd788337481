"""Expression trees used as tree-search selection formulas.

An expression is a small immutable tree over three statistics of a
parent/child pair in the search tree (mean reward ``Q``, parent visit
count ``Np``, child visit count ``Nc``) plus numeric constants.  The
operator set is deliberately tiny and every operator is total: division,
logarithm and square root are protected so that evaluation always yields
a finite float, whatever the expression shape.

Trees serialise to S-expressions, e.g. the classic UCB1 selection rule
with exploration constant sqrt(2)::

    (add Q (mul (k 1.4142135623730951) (sqrt (div (mul (k 2.0) (log Np)) Nc))))

and :func:`parse` / ``str()`` round-trip exactly (constants are printed
with ``repr`` so no precision is lost).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "NodeContext",
    "Expression",
    "Const",
    "Var",
    "Func",
    "K_VALUES",
    "DEFAULT_MAX_DEPTH",
    "protected_div",
    "protected_log",
    "protected_sqrt",
    "evaluate",
    "uct_seed",
    "random_subtree",
    "mutate",
    "parse",
]

#: Values a constant leaf may take when grown or mutated.
K_VALUES = (0.5, 1.0, math.sqrt(2.0), 2.0, 3.0)

#: Global cap on expression depth (a lone leaf has depth 1).
DEFAULT_MAX_DEPTH = 8

# Inputs with magnitude below this threshold trigger the protected
# fallbacks of div and log.
_PROTECT_EPS = 1e-3

# Binary operator results saturate here so that towers of mul/add can
# never overflow to infinity; keeps evaluation total over float64.
_MAX_ABS = 1e300

_VAR_NAMES = ("Q", "Np", "Nc")
_BINARY_OPS = ("add", "sub", "mul", "div")
_UNARY_OPS = ("log", "sqrt")
_OP_NAMES = _BINARY_OPS + _UNARY_OPS


class NodeContext(NamedTuple):
    """Statistics of one parent/child edge, as seen by a selection formula.

    ``q`` is the child's mean rollout reward (in [0, 1] once visited),
    ``n_parent`` the parent's visit count (>= 1) and ``n_child`` the
    child's visit count (>= 1; unvisited children are never scored).
    """

    q: float
    n_parent: float
    n_child: float


def protected_div(x: float, y: float) -> float:
    """x / y, except 1.0 whenever the divisor has magnitude below 0.001."""
    if abs(y) < _PROTECT_EPS:
        return 1.0
    return x / y


def protected_log(x: float) -> float:
    """ln(|x|), except 0.0 whenever |x| is below 0.001."""
    ax = abs(x)
    if ax < _PROTECT_EPS:
        return 0.0
    return math.log(ax)


def protected_sqrt(x: float) -> float:
    """sqrt(|x|)."""
    return math.sqrt(abs(x))


def _saturate(v: float) -> float:
    if v > _MAX_ABS:
        return _MAX_ABS
    if v < -_MAX_ABS:
        return -_MAX_ABS
    return v


@dataclass(frozen=True)
class Const:
    """Constant leaf."""

    value: float

    def _eval(self, q: float, n_parent: float, n_child: float) -> float:
        return self.value

    def _depth(self) -> int:
        return 1

    def _write(self, out: list) -> None:
        out.append(f"(k {self.value!r})")


@dataclass(frozen=True)
class Var:
    """Statistic leaf: one of Q, Np, Nc."""

    name: str

    def __post_init__(self):
        if self.name not in _VAR_NAMES:
            raise ValueError(f"unknown variable {self.name!r}")

    def _eval(self, q: float, n_parent: float, n_child: float) -> float:
        name = self.name
        if name == "Q":
            return q
        if name == "Np":
            return float(n_parent)
        return float(n_child)

    def _depth(self) -> int:
        return 1

    def _write(self, out: list) -> None:
        out.append(self.name)


@dataclass(frozen=True)
class Func:
    """Operator node: add/sub/mul/div (binary) or log/sqrt (unary)."""

    op: str
    args: tuple

    def __post_init__(self):
        if self.op in _BINARY_OPS:
            arity = 2
        elif self.op in _UNARY_OPS:
            arity = 1
        else:
            raise ValueError(f"unknown operator {self.op!r}")
        if len(self.args) != arity:
            raise ValueError(f"{self.op} expects {arity} argument(s), got {len(self.args)}")

    def _eval(self, q: float, n_parent: float, n_child: float) -> float:
        op = self.op
        a = self.args[0]._eval(q, n_parent, n_child)
        if op == "log":
            return protected_log(a)
        if op == "sqrt":
            return protected_sqrt(a)
        b = self.args[1]._eval(q, n_parent, n_child)
        if op == "add":
            return _saturate(a + b)
        if op == "sub":
            return _saturate(a - b)
        if op == "mul":
            return _saturate(a * b)
        return _saturate(protected_div(a, b))

    def _depth(self) -> int:
        return 1 + max(child._depth() for child in self.args)

    def _write(self, out: list) -> None:
        out.append(f"({self.op}")
        for child in self.args:
            out.append(" ")
            child._write(out)
        out.append(")")


@dataclass(frozen=True)
class Expression:
    """Immutable expression tree; ``str()`` yields the S-expression form."""

    root: Const | Var | Func

    def depth(self) -> int:
        return self.root._depth()

    def __str__(self) -> str:
        out: list = []
        self.root._write(out)
        return "".join(out)


def evaluate(expression: Expression, ctx: NodeContext) -> float:
    """Evaluate an expression on one edge context.

    Total over finite inputs: protected operators plus saturation of the
    binary operators at +-1e300 guarantee a finite float for every
    expression built from the declared operator set.
    """
    return expression.root._eval(ctx.q, ctx.n_parent, ctx.n_child)


def uct_seed(c: float) -> Expression:
    """The UCB1 selection rule Q + c*sqrt(2*ln(Np)/Nc) as an expression tree.

    This is the individual every evolutionary run starts from; with the
    statistics produced by the search engine (Np >= 1, Nc >= 1) none of
    the protected fallbacks fire, so the tree evaluates exactly like the
    closed-form rule.
    """
    bonus = Func(
        "sqrt",
        (Func("div", (Func("mul", (Const(2.0), Func("log", (Var("Np"),)))), Var("Nc"))),),
    )
    return Expression(Func("add", (Var("Q"), Func("mul", (Const(float(c)), bonus)))))


def _random_terminal(rng: random.Random):
    # Terminal kinds are uniform over {Q, Np, Nc, constant}; a constant
    # draws its value uniformly from K_VALUES.
    kind = rng.randrange(4)
    if kind == 3:
        return Const(K_VALUES[rng.randrange(len(K_VALUES))])
    return Var(_VAR_NAMES[kind])


def _grow(depth_left: int, rng: random.Random):
    # Below the depth budget, operator vs terminal is a fair coin; at the
    # budget a terminal is forced.  RNG order: coin, operator, children
    # left to right.
    if depth_left > 1 and rng.random() < 0.5:
        op = _OP_NAMES[rng.randrange(len(_OP_NAMES))]
        arity = 2 if op in _BINARY_OPS else 1
        args = tuple(_grow(depth_left - 1, rng) for _ in range(arity))
        return Func(op, args)
    return _random_terminal(rng)


def random_subtree(max_depth: int, rng: random.Random) -> Expression:
    """Grow a random expression of depth at most ``max_depth`` (>= 1)."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    return Expression(_grow(max_depth, rng))


def _collect(node, depth: int, path: tuple, internal: list, leaves: list) -> None:
    if type(node) is Func:
        internal.append((path, depth))
        for i, child in enumerate(node.args):
            _collect(child, depth + 1, path + (i,), internal, leaves)
    else:
        leaves.append((path, depth))


def _replace(node, path: tuple, replacement):
    if not path:
        return replacement
    i = path[0]
    args = list(node.args)
    args[i] = _replace(args[i], path[1:], replacement)
    return Func(node.op, tuple(args))


def mutate(expression: Expression, rng: random.Random, max_depth: int = DEFAULT_MAX_DEPTH) -> Expression:
    """Subtree mutation: regrow a random point, keeping depth <= max_depth.

    The mutation point is an internal (operator) node with probability
    0.9 and a leaf with probability 0.1, uniform within the chosen kind;
    a tree with no internal node mutates a leaf directly (no coin spent).
    The replacement is grown with the depth budget remaining below the
    chosen point, so the result never exceeds ``max_depth``.  The input
    expression is never modified.
    """
    internal: list = []
    leaves: list = []
    _collect(expression.root, 1, (), internal, leaves)
    if internal and rng.random() < 0.9:
        path, depth = internal[rng.randrange(len(internal))]
    else:
        path, depth = leaves[rng.randrange(len(leaves))]
    budget = max_depth - depth + 1
    if budget < 1:
        raise ValueError(f"expression deeper than max_depth={max_depth}")
    replacement = _grow(budget, rng)
    return Expression(_replace(expression.root, path, replacement))


def _tokenise(text: str) -> list:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_tokens(tokens: list, pos: int):
    if pos >= len(tokens):
        raise ValueError("unexpected end of expression")
    tok = tokens[pos]
    if tok == ")":
        raise ValueError("unexpected ')'")
    if tok != "(":
        if tok in _VAR_NAMES:
            return Var(tok), pos + 1
        raise ValueError(f"unexpected token {tok!r}")
    head = tokens[pos + 1] if pos + 1 < len(tokens) else None
    if head == "k":
        if pos + 3 >= len(tokens) or tokens[pos + 3] != ")":
            raise ValueError("malformed constant")
        try:
            value = float(tokens[pos + 2])
        except ValueError:
            raise ValueError(f"bad constant {tokens[pos + 2]!r}") from None
        return Const(value), pos + 4
    if head not in _OP_NAMES:
        raise ValueError(f"unknown operator {head!r}")
    arity = 2 if head in _BINARY_OPS else 1
    args = []
    pos += 2
    for _ in range(arity):
        node, pos = _parse_tokens(tokens, pos)
        args.append(node)
    if pos >= len(tokens) or tokens[pos] != ")":
        raise ValueError(f"missing ')' after {head}")
    return Func(head, tuple(args)), pos + 1


def parse(text: str) -> Expression:
    """Parse the S-expression form produced by ``str(expression)``."""
    tokens = _tokenise(text)
    if not tokens:
        raise ValueError("empty expression")
    node, pos = _parse_tokens(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing tokens: {' '.join(tokens[pos:])}")
    return Expression(node)
