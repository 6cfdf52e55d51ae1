"""Truncated automorphisms of spherically homogeneous rooted trees.

A vertex of level n is a word x_1...x_n with x_i < m_i. Words are encoded as
mixed-radix integers with the first letter most significant, so the parent of
an encoded vertex v at level n is v // m_n and its children are v*m_{n+1} + s.

An automorphism truncated at depth N is stored as one permutation table per
level. Composition is functional: compose(u, w) first applies w, then u.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._kernels import cycle_labels

SCHEMA = "treeaut.truncated-automorphism/1"

# Dense tables above this many entries are refused rather than allocated.
MAX_LEVEL_SIZE = 1 << 24


class TreeError(ValueError):
    """Raised for malformed shapes, vertices or automorphism data."""


class DepthError(TreeError):
    """Raised when an operation asks for a level beyond the stored depth."""


class BudgetError(RuntimeError):
    """Raised when a requested computation would exceed the memory budget."""


@dataclass(frozen=True)
class TreeShape:
    """Branching factors m_1..m_N of the tree, truncated at max_depth = N."""

    index: tuple[int, ...]
    max_depth: int

    def __post_init__(self):
        index = tuple(int(m) for m in self.index)
        object.__setattr__(self, "index", index)
        if self.max_depth < 1:
            raise TreeError("max_depth must be positive")
        if len(index) < self.max_depth:
            raise TreeError(
                f"index lists {len(index)} branching factors, depth {self.max_depth} needs more")
        if len(index) > self.max_depth:
            object.__setattr__(self, "index", index[: self.max_depth])
        if any(m < 2 for m in self.index):
            raise TreeError("every branching factor must be at least 2")

    @classmethod
    def constant(cls, d: int, depth: int) -> "TreeShape":
        return cls((d,) * depth, depth)

    @property
    def constant_arity(self) -> int | None:
        """The common branching factor d, or None for a mixed shape."""
        first = self.index[0]
        return first if all(m == first for m in self.index) else None

    def arity(self, n: int) -> int:
        """Branching factor m_n between levels n-1 and n (1-based)."""
        if not 1 <= n <= self.max_depth:
            raise DepthError(f"level {n} outside 1..{self.max_depth}")
        return self.index[n - 1]

    def level_size(self, n: int) -> int:
        """|V_n| as an exact integer."""
        if not 0 <= n <= self.max_depth:
            raise DepthError(f"level {n} outside 0..{self.max_depth}")
        return math.prod(self.index[:n])

    def truncated(self, depth: int) -> "TreeShape":
        if depth > self.max_depth:
            raise DepthError(f"cannot extend a depth-{self.max_depth} shape to {depth}")
        return TreeShape(self.index[:depth], depth)

    def to_dict(self) -> dict:
        d = self.constant_arity
        if d is not None:
            return {"constant": d, "max_depth": self.max_depth}
        return {"index": list(self.index), "max_depth": self.max_depth}

    @classmethod
    def from_dict(cls, data: dict) -> "TreeShape":
        if "constant" in data:
            return cls.constant(int(data["constant"]), int(data["max_depth"]))
        return cls(tuple(data["index"]), int(data["max_depth"]))


@dataclass(frozen=True)
class Vertex:
    word: tuple[int, ...]

    @property
    def level(self) -> int:
        return len(self.word)

    def encode(self, shape: TreeShape) -> int:
        if self.level > shape.max_depth:
            raise DepthError(f"vertex of level {self.level} deeper than {shape.max_depth}")
        code = 0
        for i, letter in enumerate(self.word):
            m = shape.index[i]
            if not 0 <= letter < m:
                raise TreeError(f"letter {letter} at position {i + 1} outside 0..{m - 1}")
            code = code * m + letter
        return code

    @classmethod
    def decode(cls, shape: TreeShape, level: int, code: int) -> "Vertex":
        if not 0 <= code < shape.level_size(level):
            raise TreeError(f"code {code} outside level {level}")
        letters = []
        for i in range(level - 1, -1, -1):
            code, letter = divmod(code, shape.index[i])
            letters.append(letter)
        return cls(tuple(reversed(letters)))

    @classmethod
    def parse(cls, text: str) -> "Vertex":
        """Parse '011' or '0.1.1' (the dotted form allows letters above 9)."""
        text = text.strip()
        if not text:
            return cls(())
        parts = text.split(".") if "." in text else list(text)
        return cls(tuple(int(p) for p in parts))

    def __str__(self) -> str:
        if all(x < 10 for x in self.word):
            return "".join(str(x) for x in self.word)
        return ".".join(str(x) for x in self.word)


@dataclass(frozen=True)
class LevelMap:
    level: int
    table: np.ndarray


def _freeze(table) -> np.ndarray:
    arr = np.array(table, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TruncatedAutomorphism:
    """Level tables pi_1..pi_N; levels[n-1] is the permutation of V_n."""

    shape: TreeShape
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        levels = tuple(_freeze(t) for t in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) != self.shape.max_depth:
            raise TreeError(f"{len(levels)} level tables for a depth-{self.shape.max_depth} shape")
        for n, table in enumerate(levels, start=1):
            if table.shape != (self.shape.level_size(n),):
                raise TreeError(f"level {n} table has wrong size {table.shape}")

    @property
    def depth(self) -> int:
        return self.shape.max_depth

    def table(self, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros(1, dtype=np.int64)
        if not 1 <= n <= self.depth:
            raise DepthError(f"level {n} outside 1..{self.depth}")
        return self.levels[n - 1]

    def level_map(self, n: int) -> LevelMap:
        return LevelMap(n, self.table(n))

    def restrict(self, depth: int) -> "TruncatedAutomorphism":
        return TruncatedAutomorphism(self.shape.truncated(depth), self.levels[:depth])

    def __eq__(self, other):
        if not isinstance(other, TruncatedAutomorphism):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(x, y) for x, y in zip(self.levels, other.levels))

    def __hash__(self):
        return hash((self.shape, self.levels[-1].tobytes()))

    def __repr__(self):
        return f"TruncatedAutomorphism(shape={self.shape.index}, depth={self.depth})"


def check_level_budget(shape: TreeShape, depth: int | None = None) -> None:
    depth = shape.max_depth if depth is None else depth
    if shape.level_size(depth) > MAX_LEVEL_SIZE:
        raise BudgetError(f"|V_{depth}| = {shape.level_size(depth)} exceeds the table budget")


def identity(shape: TreeShape) -> TruncatedAutomorphism:
    check_level_budget(shape)
    return TruncatedAutomorphism(
        shape, tuple(np.arange(shape.level_size(n)) for n in range(1, shape.max_depth + 1)))


def from_local_permutations(shape: TreeShape, local: Sequence[np.ndarray]) -> TruncatedAutomorphism:
    """Build an automorphism from its portrait.

    local[n-1] has shape (|V_{n-1}|, m_n); row x is the permutation applied to the
    letter following x, so u(x s) = u(x) local[x](s).
    """
    check_level_budget(shape)
    levels = []
    prev = np.zeros(1, dtype=np.int64)
    for n in range(1, shape.max_depth + 1):
        m = shape.arity(n)
        rows = np.asarray(local[n - 1], dtype=np.int64)
        if rows.shape != (prev.size, m):
            raise TreeError(f"local permutations at level {n} have shape {rows.shape}")
        table = (prev[:, None] * m + rows).reshape(-1)
        levels.append(table)
        prev = table
    return TruncatedAutomorphism(shape, tuple(levels))


def from_top_level(shape: TreeShape, top: np.ndarray) -> TruncatedAutomorphism:
    """Recover all levels from the deepest table, which must be tree-compatible."""
    top = np.asarray(top, dtype=np.int64)
    levels = [top]
    for n in range(shape.max_depth, 1, -1):
        m = shape.arity(n)
        levels.append(levels[-1][::m] // m)
    fam = TruncatedAutomorphism(shape, tuple(reversed(levels)))
    if not verify_consistency(fam):
        raise TreeError("top-level table does not preserve the tree structure")
    return fam


def verify_consistency(fam: TruncatedAutomorphism) -> bool:
    """True iff every level table is a bijection refining the level above it."""
    shape = fam.shape
    prev = np.zeros(1, dtype=np.int64)
    for n in range(1, fam.depth + 1):
        table = fam.table(n)
        size = shape.level_size(n)
        if table.min(initial=0) < 0 or table.max(initial=0) >= size:
            return False
        if np.unique(table).size != size:
            return False
        m = shape.arity(n)
        parents = np.arange(size) // m
        if not np.array_equal(table // m, prev[parents]):
            return False
        prev = table
    return True


def apply(u: TruncatedAutomorphism, v: Vertex) -> Vertex:
    if v.level > u.depth:
        raise DepthError(f"vertex of level {v.level} beyond depth {u.depth}")
    if v.level == 0:
        return v
    image = int(u.table(v.level)[v.encode(u.shape)])
    return Vertex.decode(u.shape, v.level, image)


def _same_frame(u: TruncatedAutomorphism, w: TruncatedAutomorphism) -> None:
    if u.shape != w.shape:
        raise TreeError(f"shape mismatch: {u.shape} vs {w.shape}")


def compose(u: TruncatedAutomorphism, w: TruncatedAutomorphism) -> TruncatedAutomorphism:
    """The automorphism x -> u(w(x))."""
    _same_frame(u, w)
    return TruncatedAutomorphism(u.shape, tuple(a[b] for a, b in zip(u.levels, w.levels)))


def compose_all(elements: Iterable[TruncatedAutomorphism]) -> TruncatedAutomorphism:
    elements = list(elements)
    if not elements:
        raise TreeError("compose_all needs at least one element")
    out = elements[-1]
    for e in reversed(elements[:-1]):
        out = compose(e, out)
    return out


def invert_table(table: np.ndarray) -> np.ndarray:
    inv = np.empty_like(table)
    inv[table] = np.arange(table.size, dtype=table.dtype)
    return inv


def inverse(u: TruncatedAutomorphism) -> TruncatedAutomorphism:
    return TruncatedAutomorphism(u.shape, tuple(invert_table(t) for t in u.levels))


def conjugate(g: TruncatedAutomorphism, u: TruncatedAutomorphism) -> TruncatedAutomorphism:
    """g u g^-1."""
    return compose(compose(g, u), inverse(g))


def commutator(u: TruncatedAutomorphism, w: TruncatedAutomorphism) -> TruncatedAutomorphism:
    """[u, w] = u w u^-1 w^-1."""
    return compose(conjugate(u, w), inverse(w))


def power(u: TruncatedAutomorphism, k: int) -> TruncatedAutomorphism:
    if k < 0:
        return power(inverse(u), -k)
    result = identity(u.shape)
    base = u
    while k:
        if k & 1:
            result = compose(base, result)
        k >>= 1
        if k:
            base = compose(base, base)
    return result


def is_identity(u: TruncatedAutomorphism, n: int | None = None) -> bool:
    n = u.depth if n is None else n
    table = u.table(n)
    return bool(np.array_equal(table, np.arange(table.size)))


@dataclass(frozen=True)
class Distance:
    """D(u, w) as an exact rational; equal_to_depth marks agreement at every stored level."""

    value: Fraction
    equal_to_depth: int | None = None

    @property
    def equal(self) -> bool:
        return self.equal_to_depth is not None


def distance(u: TruncatedAutomorphism, w: TruncatedAutomorphism) -> Distance:
    """2^-m for the largest level m with u_m = w_m; level 0 always agrees.

    Agreement at level m implies agreement at all shallower levels, so the first
    disagreeing level n gives m = n - 1.
    """
    _same_frame(u, w)
    for n in range(1, u.depth + 1):
        if not np.array_equal(u.table(n), w.table(n)):
            return Distance(Fraction(1, 2 ** (n - 1)))
    return Distance(Fraction(0), equal_to_depth=u.depth)


def cycle_lengths(table: np.ndarray) -> np.ndarray:
    return cycle_labels(np.ascontiguousarray(table, dtype=np.int64))[1]


def sign_at_level(u: TruncatedAutomorphism, n: int) -> int:
    table = u.table(n)
    ncycles = cycle_lengths(table).size
    return -1 if (table.size - ncycles) % 2 else 1


def order_at_level(u: TruncatedAutomorphism, n: int) -> int:
    lengths = np.unique(cycle_lengths(u.table(n)))
    return math.lcm(*(int(x) for x in lengths))


def order_profile(u: TruncatedAutomorphism, N: int | None = None) -> list[int]:
    N = u.depth if N is None else N
    return [order_at_level(u, n) for n in range(1, N + 1)]


def is_transitive(u: TruncatedAutomorphism, n: int) -> bool:
    return cycle_lengths(u.table(n)).size == 1


def to_dict(u: TruncatedAutomorphism) -> dict:
    return {
        "schema": SCHEMA,
        "shape": u.shape.to_dict(),
        "levels": [t.tolist() for t in u.levels],
    }


def from_dict(data: dict) -> TruncatedAutomorphism:
    if data.get("schema") != SCHEMA:
        raise TreeError(f"unsupported schema {data.get('schema')!r}")
    shape = TreeShape.from_dict(data["shape"])
    fam = TruncatedAutomorphism(shape, tuple(np.asarray(t) for t in data["levels"]))
    if not verify_consistency(fam):
        raise TreeError("document does not describe a tree automorphism")
    return fam


def dumps(u: TruncatedAutomorphism) -> str:
    return json.dumps(to_dict(u), separators=(",", ":"))


def loads(text: str) -> TruncatedAutomorphism:
    return from_dict(json.loads(text))
