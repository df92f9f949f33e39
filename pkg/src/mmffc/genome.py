"""Fixed-length program strings and the expression trees they decode to.

A position vector has three blocks::

    [mask: L genes in [0, 1]] [ops: one per internal slot] [links: one per non-root slot]

Slots index a full ``arity``-ary tree of depth ``depth`` in breadth-first
order (root is slot 0, the children of slot p are ``p*arity + 1 ..``). Mask
genes threshold at 0.5 to pick the usable features. A link gene below ``L``
makes its slot a terminal; otherwise the slot is an operator node. Slots on
the last level are always terminals. Terminals draw from the selected
features with ``selected[v % len(selected)]``.

Operators with more than two operands fold left: ``(sub a b c)`` is
``(a - b) - c``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._backend import kernels

OPERATORS = ("add", "sub", "mul", "div")
_OPCODES = {"add": -1, "sub": -2, "mul": -3, "div": -4}


class EmptyMask(ValueError):
    """The decoded program selects no feature; treat it as fitness 0."""


def dimension(n_features: int, depth: int, arity: int) -> int:
    if n_features < 1 or depth < 1 or arity < 2:
        raise ValueError("need n_features >= 1, depth >= 1, arity >= 2")
    links = sum(arity**i for i in range(1, depth + 1))
    ops = sum(arity**j for j in range(depth))
    return n_features + links + ops


@dataclass(frozen=True)
class ProgramShape:
    n_features: int
    depth: int = 3
    arity: int = 2
    operators: tuple[str, ...] = OPERATORS

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        if not self.operators:
            raise ValueError("operator set is empty")
        unknown = [op for op in self.operators if op not in _OPCODES]
        if unknown:
            raise ValueError(f"unknown operators: {unknown}")
        dimension(self.n_features, self.depth, self.arity)

    @property
    def n_internal(self) -> int:
        return sum(self.arity**j for j in range(self.depth))

    @property
    def n_links(self) -> int:
        return sum(self.arity**i for i in range(1, self.depth + 1))

    @property
    def dimension(self) -> int:
        return self.n_features + self.n_internal + self.n_links

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        L, n_ops = self.n_features, len(self.operators)
        lower = np.zeros(self.dimension)
        upper = np.concatenate([
            np.ones(L),
            np.full(self.n_internal, float(n_ops)),
            np.full(self.n_links, float(2 * L)),
        ])
        lower.setflags(write=False)
        upper.setflags(write=False)
        return lower, upper

    @cached_property
    def slot_depths(self) -> np.ndarray:
        depths = []
        for d in range(self.depth + 1):
            depths.extend([d] * self.arity**d)
        return np.asarray(depths)


@dataclass(frozen=True, eq=False)
class DecodedProgram:
    mask: np.ndarray
    op_genes: np.ndarray
    link_genes: np.ndarray

    @cached_property
    def key(self) -> np.ndarray:
        """All decoded genes as one integer string (Hamming distance operand)."""
        return np.concatenate([self.mask, self.op_genes, self.link_genes]).astype(np.int64)

    def __eq__(self, other):
        return isinstance(other, DecodedProgram) and np.array_equal(self.key, other.key)

    def __hash__(self):
        return hash(self.key.tobytes())


@dataclass(frozen=True)
class Terminal:
    feature: int


@dataclass(frozen=True)
class Operator:
    op: int
    children: tuple


def random_position(shape: ProgramShape, rng: np.random.Generator) -> np.ndarray:
    lower, upper = shape.bounds
    return lower + rng.random(shape.dimension) * (upper - lower)


def clamp(position: np.ndarray, shape: ProgramShape) -> np.ndarray:
    lower, upper = shape.bounds
    return np.clip(position, lower, upper)


def decode(position, shape: ProgramShape) -> DecodedProgram:
    pos = np.asarray(position, dtype=np.float64)
    if pos.shape != (shape.dimension,):
        raise ValueError(f"position has length {pos.shape}, shape expects {shape.dimension}")
    L, n_int = shape.n_features, shape.n_internal
    mask = (pos[:L] >= 0.5).astype(np.int64)
    ops = np.clip(np.floor(pos[L:L + n_int]), 0, len(shape.operators) - 1).astype(np.int64)
    links = np.clip(np.floor(pos[L + n_int:]), 0, 2 * L - 1).astype(np.int64)
    return DecodedProgram(mask, ops, links)


def build_tree(dp: DecodedProgram, shape: ProgramShape) -> Operator:
    selected = np.flatnonzero(dp.mask)
    if selected.shape[0] == 0:
        raise EmptyMask("no feature selected by the mask")
    n_sel = selected.shape[0]
    L, arity, depths = shape.n_features, shape.arity, shape.slot_depths

    def node(slot):
        if slot > 0:
            v = int(dp.link_genes[slot - 1])
            if depths[slot] == shape.depth or v < L:
                return Terminal(int(selected[v % n_sel]))
        first = slot * arity + 1
        return Operator(int(dp.op_genes[slot]), tuple(node(c) for c in range(first, first + arity)))

    return node(0)


def tree_depth(tree) -> int:
    if isinstance(tree, Terminal):
        return 0
    return 1 + max(tree_depth(c) for c in tree.children)


def terminals(tree) -> list[int]:
    if isinstance(tree, Terminal):
        return [tree.feature]
    return [f for c in tree.children for f in terminals(c)]


def compile_postfix(tree, operators=OPERATORS) -> np.ndarray:
    """Flatten to the opcode stream the evaluation kernels consume."""
    out: list[int] = []

    def walk(t):
        if isinstance(t, Terminal):
            out.append(t.feature)
        else:
            code = _OPCODES[operators[t.op]]
            walk(t.children[0])
            for c in t.children[1:]:
                walk(c)
                out.append(code)

    walk(tree)
    return np.asarray(out, dtype=np.int64)


def evaluate_feature(tree, X, operators=OPERATORS) -> np.ndarray:
    """Constructed-feature values for every row of ``X``; always finite."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    bad = [f for f in terminals(tree) if not 0 <= f < X.shape[1]]
    if bad:
        raise IndexError(f"tree references features {bad} outside [0, {X.shape[1]})")
    return kernels.eval_postfix(compile_postfix(tree, operators), X)


def hamming(a: DecodedProgram, b: DecodedProgram) -> int:
    if a.key.shape != b.key.shape:
        raise ValueError("programs have different shapes")
    return int(np.count_nonzero(a.key != b.key))


def canonical_string(tree, operators=OPERATORS) -> str:
    if isinstance(tree, Terminal):
        return f"f{tree.feature}"
    inner = " ".join(canonical_string(c, operators) for c in tree.children)
    return f"({operators[tree.op]} {inner})"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_canonical(text: str, operators=OPERATORS):
    """Inverse of :func:`canonical_string`."""
    tokens = _TOKEN.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            name = tokens[pos]
            pos += 1
            if name not in operators:
                raise ValueError(f"unknown operator {name!r}")
            children = []
            while tokens[pos] != ")":
                children.append(parse())
            pos += 1
            return Operator(operators.index(name), tuple(children))
        if tok.startswith("f") and tok[1:].isdigit():
            return Terminal(int(tok[1:]))
        raise ValueError(f"unexpected token {tok!r}")

    try:
        tree = parse()
    except IndexError:
        raise ValueError(f"truncated expression {text!r}") from None
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in {text!r}")
    return tree
