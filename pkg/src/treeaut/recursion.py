"""Wreath-recursive element definitions and their level-by-level evaluation.

An expression is built from Identity, RootPerm, Tuple, Compose, Inverse and Ref.
Compose(f, g) is the map x -> f(g(x)), so the binary odometer is written
Compose(Tuple(Ref("a"), Identity()), ETA): it swaps the first letter and, when
that letter was 1, recurses into the rest of the word.
"""
from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .tree import (
    BudgetError,
    MAX_LEVEL_SIZE,
    TreeError,
    TreeShape,
    TruncatedAutomorphism,
    invert_table,
)


class RecursionError_(TreeError):
    pass


class UnresolvedRef(RecursionError_):
    def __init__(self, message: str, binding: str | None = None):
        super().__init__(message)
        self.binding = binding


class NonContracting(RecursionError_):
    def __init__(self, message: str, cycle: tuple = ()):
        super().__init__(message)
        self.cycle = tuple(cycle)


class ArityError(RecursionError_):
    pass


@dataclass(frozen=True)
class Identity:
    def __str__(self):
        return "id"


@dataclass(frozen=True)
class RootPerm:
    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(x) for x in self.perm)
        object.__setattr__(self, "perm", perm)
        if sorted(perm) != list(range(len(perm))):
            raise ArityError(f"{perm} is not a permutation")

    def __str__(self):
        if self.perm == (1, 0):
            return "eta"
        return f"perm{self.perm}"


@dataclass(frozen=True)
class Tuple:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.children) + ")"


@dataclass(frozen=True)
class Compose:
    """Functional composition: Compose(f, g, h) maps x to f(g(h(x)))."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ArityError("Compose needs at least one factor")

    def __str__(self):
        return " * ".join(
            f"({f})" if isinstance(f, Compose) else str(f) for f in self.factors)


@dataclass(frozen=True)
class Inverse:
    expr: "ElementExpr"

    def __str__(self):
        return f"{self.expr}^-1" if isinstance(self.expr, (Ref, RootPerm, Identity)) \
            else f"({self.expr})^-1"


@dataclass(frozen=True)
class Ref:
    name: str

    def __str__(self):
        return self.name


ElementExpr = Union[Identity, RootPerm, Tuple, Compose, Inverse, Ref]

ID = Identity()
ETA = RootPerm((1, 0))


def rotation(d: int) -> RootPerm:
    """The cyclic shift i -> i+1 mod d on the level-1 alphabet."""
    return RootPerm(tuple((i + 1) % d for i in range(d)))


def walk(expr: ElementExpr, under_tuple: bool = False) -> Iterator[tuple[ElementExpr, bool]]:
    """Yield every subexpression with a flag telling whether it sits inside a Tuple."""
    yield expr, under_tuple
    if isinstance(expr, Tuple):
        for c in expr.children:
            yield from walk(c, True)
    elif isinstance(expr, Compose):
        for f in expr.factors:
            yield from walk(f, under_tuple)
    elif isinstance(expr, Inverse):
        yield from walk(expr.expr, under_tuple)


@dataclass(frozen=True, eq=False)
class RecursionEnv:
    """Named recursive definitions over a constant-arity tree.

    The memo is shared between an environment and every environment derived
    from it by define/extend. That is safe because bindings are never replaced.
    """

    d: int
    bindings: dict = field(default_factory=dict)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise ArityError("branching factor must be at least 2")

    def shape(self, depth: int) -> TreeShape:
        return TreeShape.constant(self.d, depth)

    def __contains__(self, name):
        return name in self.bindings

    def __getitem__(self, name) -> ElementExpr:
        try:
            return self.bindings[name]
        except KeyError:
            raise UnresolvedRef(f"unresolved reference {name!r}") from None

    def define(self, name: str, expr: ElementExpr) -> "RecursionEnv":
        return self.extend({name: expr})

    def extend(self, new: dict) -> "RecursionEnv":
        """Add several bindings at once, so they may refer to each other."""
        for name in new:
            if name in self.bindings:
                raise RecursionError_(f"{name!r} is already defined")
        merged = {**self.bindings, **new}
        env = RecursionEnv(self.d, merged, self._memo)
        for expr in new.values():
            check_arity(expr, self.d)
        check_contraction(env)
        return env


def check_arity(expr: ElementExpr, d: int) -> None:
    for sub, _ in walk(expr):
        if isinstance(sub, Tuple) and len(sub.children) != d:
            raise ArityError(f"tuple {sub} has {len(sub.children)} entries, the tree has arity {d}")
        if isinstance(sub, RootPerm) and len(sub.perm) != d:
            raise ArityError(f"root permutation {sub} acts on {len(sub.perm)} letters, not {d}")


def same_level_refs(expr: ElementExpr) -> set[str]:
    """Names whose level-n value is needed for the level-n value of expr."""
    return {sub.name for sub, inside in walk(expr) if isinstance(sub, Ref) and not inside}


def check_contraction(env: RecursionEnv) -> None:
    """Reject unresolved names and same-level reference cycles."""
    graph = {}
    for name, expr in env.bindings.items():
        for sub, _ in walk(expr):
            if isinstance(sub, Ref) and sub.name not in env.bindings:
                raise UnresolvedRef(f"{name!r} refers to undefined {sub.name!r}", name)
        graph[name] = same_level_refs(expr)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        cycle = " -> ".join(exc.args[1])
        raise NonContracting(
            f"non-contracting recursion: {cycle} refers to itself at the same level",
            exc.args[1]) from None


def _level_table(expr: ElementExpr, env: RecursionEnv, n: int) -> np.ndarray:
    key = (expr, n)
    memo = env._memo
    hit = memo.get(key)
    if hit is not None:
        return hit
    d = env.d
    size = d ** n
    if n == 0:
        out = np.zeros(1, dtype=np.int64)
    elif isinstance(expr, Identity):
        out = np.arange(size, dtype=np.int64)
    elif isinstance(expr, RootPerm):
        low = d ** (n - 1)
        rho = np.asarray(expr.perm, dtype=np.int64)
        out = (rho[:, None] * low + np.arange(low)).reshape(-1)
    elif isinstance(expr, Tuple):
        low = d ** (n - 1)
        out = np.concatenate([
            i * low + _level_table(c, env, n - 1) for i, c in enumerate(expr.children)])
    elif isinstance(expr, Compose):
        out = _level_table(expr.factors[-1], env, n)
        for f in reversed(expr.factors[:-1]):
            out = _level_table(f, env, n)[out]
    elif isinstance(expr, Inverse):
        out = invert_table(_level_table(expr.expr, env, n))
    elif isinstance(expr, Ref):
        out = _level_table(env[expr.name], env, n)
    else:
        raise TypeError(f"not an element expression: {expr!r}")
    out.setflags(write=False)
    memo[key] = out
    return out


def truncate(expr: ElementExpr, env: RecursionEnv, N: int) -> TruncatedAutomorphism:
    if N < 1:
        raise TreeError("truncation depth must be positive")
    if env.d ** N > MAX_LEVEL_SIZE:
        raise BudgetError(f"|V_{N}| = {env.d ** N} exceeds the table budget")
    check_arity(expr, env.d)
    for sub, _ in walk(expr):
        if isinstance(sub, Ref):
            env[sub.name]
    return TruncatedAutomorphism(
        env.shape(N), tuple(_level_table(expr, env, n) for n in range(1, N + 1)))


def _compose2(f: ElementExpr, g: ElementExpr) -> ElementExpr:
    if isinstance(f, Identity):
        return g
    if isinstance(g, Identity):
        return f
    left = f.factors if isinstance(f, Compose) else (f,)
    right = g.factors if isinstance(g, Compose) else (g,)
    return Compose(left + right)


def _inverse(e: ElementExpr) -> ElementExpr:
    if isinstance(e, Identity):
        return e
    if isinstance(e, Inverse):
        return e.expr
    return Inverse(e)


def normal_form(expr: ElementExpr, env: RecursionEnv) -> tuple[tuple[int, ...], tuple]:
    """Write expr as rho * (s_0, ..., s_{d-1}), i.e. expr(i x) = rho(i) s_i(x)."""
    d = env.d
    ident = tuple(range(d))
    if isinstance(expr, Identity):
        return ident, (ID,) * d
    if isinstance(expr, RootPerm):
        return expr.perm, (ID,) * d
    if isinstance(expr, Tuple):
        return ident, expr.children
    if isinstance(expr, Ref):
        return normal_form(env[expr.name], env)
    if isinstance(expr, Inverse):
        rho, secs = normal_form(expr.expr, env)
        rinv = [0] * d
        for i, j in enumerate(rho):
            rinv[j] = i
        return tuple(rinv), tuple(_inverse(secs[rinv[j]]) for j in range(d))
    if isinstance(expr, Compose):
        rho, secs = normal_form(expr.factors[-1], env)
        for f in reversed(expr.factors[:-1]):
            frho, fsecs = normal_form(f, env)
            secs = tuple(_compose2(fsecs[rho[i]], secs[i]) for i in range(d))
            rho = tuple(frho[rho[i]] for i in range(d))
        return rho, secs
    raise TypeError(f"not an element expression: {expr!r}")


def section(expr: ElementExpr, letter: int, env: RecursionEnv) -> ElementExpr:
    """The element by which expr acts on the subtree below the given letter."""
    if not 0 <= letter < env.d:
        raise TreeError(f"letter {letter} outside 0..{env.d - 1}")
    return normal_form(expr, env)[1][letter]


def odometer(d: int, name: str = "a") -> tuple[Ref, RecursionEnv]:
    """The d-ary adding machine a = (a, 1, ..., 1) * rotation.

    It adds one to the first letter and carries into the rest of the word.
    """
    rot = rotation(d)
    # rotation sends the last letter to 0, which is where the carry happens.
    children = (Ref(name),) + (ID,) * (d - 1)
    env = RecursionEnv(d).define(name, Compose((Tuple(children), rot)))
    return Ref(name), env


def odometer_family(shape: TreeShape) -> TruncatedAutomorphism:
    """Adding machine for an arbitrary (possibly mixed) spherical index."""
    levels = []
    for n in range(1, shape.max_depth + 1):
        size = shape.level_size(n)
        if size > MAX_LEVEL_SIZE:
            raise BudgetError(f"|V_{n}| = {size} exceeds the table budget")
        digits = []
        rest = np.arange(size, dtype=np.int64)
        for i in range(n, 0, -1):
            rest, letter = np.divmod(rest, shape.index[i - 1])
            digits.append(letter)
        digits.reverse()
        carry = np.ones(size, dtype=np.int64)
        out = np.zeros(size, dtype=np.int64)
        for i in range(n):
            m = shape.index[i]
            total = digits[i] + carry
            carry = total // m
            out = out * m + total % m
        levels.append(out)
    return TruncatedAutomorphism(shape, tuple(levels))


@dataclass(frozen=True)
class GrowthProfile:
    """Per-level directives; rule[n-1] governs how cycles grow from V_{n-1} to V_n."""

    rule: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "rule", tuple(self.rule))
        bad = [r for r in self.rule if r not in ("double", "hold")]
        if bad:
            raise TreeError(f"unknown profile directive(s) {bad}")

    @classmethod
    def periodic(cls, pattern, N: int) -> "GrowthProfile":
        pattern = tuple(pattern)
        return cls(tuple(pattern[i % len(pattern)] for i in range(N)))


def splice_level(prev: np.ndarray, d: int, leaders: np.ndarray, cycle_of: np.ndarray) -> np.ndarray:
    """Lift prev to the next level so every cycle becomes one cycle d times longer.

    Child letters are carried along unchanged, except on the step that closes a
    cycle (the step landing on the cycle's smallest vertex), where they advance by
    one mod d.
    """
    image = prev
    closing = (image == leaders[cycle_of[image]]).astype(np.int64)
    s = np.arange(d, dtype=np.int64)
    return (image[:, None] * d + (s[None, :] + closing[:, None]) % d).reshape(-1)


def hold_level(prev: np.ndarray, d: int) -> np.ndarray:
    """Lift prev acting identically on child letters, so every cycle splits into d copies."""
    s = np.arange(d, dtype=np.int64)
    return (prev[:, None] * d + s[None, :]).reshape(-1)


def profile_element(profile: GrowthProfile, N: int) -> TruncatedAutomorphism:
    """A binary element whose cycles double or keep their length level by level."""
    from ._kernels import cycle_labels

    if len(profile.rule) < N:
        raise TreeError(f"profile has {len(profile.rule)} directives, depth {N} needs {N}")
    shape = TreeShape.constant(2, N)
    if shape.level_size(N) > MAX_LEVEL_SIZE:
        raise BudgetError(f"|V_{N}| exceeds the table budget")
    prev = np.zeros(1, dtype=np.int64)
    levels = []
    for n in range(1, N + 1):
        if profile.rule[n - 1] == "double":
            cycle_of, _, leaders = cycle_labels(prev)
            prev = splice_level(prev, 2, leaders, cycle_of)
        else:
            prev = hold_level(prev, 2)
        levels.append(prev)
    return TruncatedAutomorphism(shape, tuple(levels))
