"""Cycle structure, bounded-depth stability and settledness of truncated automorphisms."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import cycle_labels, orbit_order
from .recursion import splice_level
from .tree import (
    DepthError,
    TreeError,
    TreeShape,
    TruncatedAutomorphism,
    check_level_budget,
    from_local_permutations,
    power,
)


@dataclass(frozen=True, eq=False)
class CycleReport:
    """Cycle partition of u|V_n. Cycle ids follow the order of their smallest vertex."""

    level: int
    lengths: np.ndarray
    leaders: np.ndarray
    cycle_of: np.ndarray

    @property
    def count(self) -> int:
        return int(self.lengths.size)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.cycle_of == c)

    @property
    def cycles(self) -> list[tuple[int, np.ndarray]]:
        order = np.argsort(self.cycle_of, kind="stable")
        splits = np.cumsum(self.lengths)[:-1]
        groups = np.split(order, splits)
        return [(int(n), g) for n, g in zip(self.lengths, groups)]

    def length_multiset(self) -> dict[int, int]:
        values, counts = np.unique(self.lengths, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def vertex_lengths(self) -> np.ndarray:
        return self.lengths[self.cycle_of]


def cycle_decomposition(u: TruncatedAutomorphism, n: int) -> CycleReport:
    if n == 0:
        zero = np.zeros(1, dtype=np.int64)
        return CycleReport(0, np.ones(1, dtype=np.int64), zero, zero)
    cycle_of, lengths, leaders = cycle_labels(np.ascontiguousarray(u.table(n)))
    return CycleReport(n, lengths, leaders, cycle_of)


@dataclass(frozen=True)
class StableUpTo:
    budget: int

    def __str__(self):
        return f"StableUpTo({self.budget})"


@dataclass(frozen=True)
class BrokenAt:
    level: int

    def __str__(self):
        return f"BrokenAt({self.level})"


def _check_budget(u: TruncatedAutomorphism, n: int, N: int) -> None:
    if N > u.depth:
        raise DepthError(f"budget {N} exceeds stored depth {u.depth}")
    if not 0 <= n < N:
        raise DepthError(f"need 0 <= n < N, got n={n}, N={N}")


def first_breaks(u: TruncatedAutomorphism, N: int) -> list[np.ndarray]:
    """For each level n < N, the first level m in (n, N] where the cycle through
    each vertex of V_n stops lifting to a single cycle, or 0 if it never does.

    Vertices above a cycle C of V_n form an invariant set, so they make up one
    cycle at level m exactly when the cycle through the first-child descendant
    has length |V_m|/|V_n| * |C|. Checking one descendant path per vertex suffices.
    """
    lengths = [cycle_decomposition(u, n).vertex_lengths() for n in range(N + 1)]
    breaks: list[np.ndarray] = [None] * (N + 1)
    breaks[N] = np.zeros(lengths[N].size, dtype=np.int64)
    for m in range(N, 0, -1):
        d = u.shape.arity(m)
        first_child = np.arange(lengths[m - 1].size, dtype=np.int64) * d
        ok = lengths[m][first_child] == d * lengths[m - 1]
        breaks[m - 1] = np.where(ok, breaks[m][first_child], m)
    return breaks[:N]


@dataclass(frozen=True, eq=False)
class StabilityReport:
    level: int
    budget: int
    cycles: CycleReport
    status: tuple

    def vertex_status(self, v: int):
        return self.status[int(self.cycles.cycle_of[v])]

    @property
    def stable_vertices(self) -> int:
        return int(sum(int(n) for n, s in zip(self.cycles.lengths, self.status)
                       if isinstance(s, StableUpTo)))


def stability_report(u: TruncatedAutomorphism, n: int, N: int) -> StabilityReport:
    _check_budget(u, n, N)
    report = cycle_decomposition(u, n)
    brk = first_breaks(u, N)[n]
    status = tuple(StableUpTo(N) if brk[v] == 0 else BrokenAt(int(brk[v])) for v in report.leaders)
    return StabilityReport(n, N, report, status)


def stable_up_to(u: TruncatedAutomorphism, n: int, v: int, N: int):
    """Status of the cycle of vertex v (encoded) of V_n, judged up to level N."""
    _check_budget(u, n, N)
    size = u.shape.level_size(n)
    if not 0 <= v < size:
        raise TreeError(f"vertex {v} outside V_{n}")
    brk = int(first_breaks(u, N)[n][v])
    return StableUpTo(N) if brk == 0 else BrokenAt(brk)


@dataclass(frozen=True)
class SettledStats:
    budget: int
    fractions: tuple[Fraction, ...]  # fractions[n-1] is the stable share of V_n

    def fraction(self, n: int) -> Fraction:
        return self.fractions[n - 1]

    def rows(self) -> list[tuple[int, int, int]]:
        return [(n, f.numerator, f.denominator) for n, f in enumerate(self.fractions, start=1)]


def settled_stats(u: TruncatedAutomorphism, n0: int, N: int) -> SettledStats:
    _check_budget(u, n0, N)
    brk = first_breaks(u, N)
    fractions = tuple(
        Fraction(int(np.count_nonzero(brk[n] == 0)), u.shape.level_size(n)) for n in range(1, n0 + 1))
    return SettledStats(N, fractions)


def is_minimal_up_to(u: TruncatedAutomorphism, N: int) -> bool:
    """Transitive on V_n for every n <= N. Transitivity on V_N already forces it below."""
    if N > u.depth:
        raise DepthError(f"level {N} beyond stored depth {u.depth}")
    return cycle_decomposition(u, N).count == 1


def strongly_settle(tau: TruncatedAutomorphism, n: int, N: int) -> TruncatedAutomorphism:
    """Agree with tau on V_n, then splice every cycle into one longer cycle at each
    deeper level up to N."""
    if N > tau.depth:
        raise DepthError(f"budget {N} exceeds stored depth {tau.depth}")
    if not 0 <= n < N:
        raise DepthError(f"need 0 <= n < N, got n={n}, N={N}")
    levels = list(tau.levels[:n])
    prev = tau.table(n)
    for m in range(n + 1, N + 1):
        report = cycle_labels(np.ascontiguousarray(prev))
        prev = splice_level(prev, tau.shape.arity(m), report[2], report[0])
        levels.append(prev)
    return TruncatedAutomorphism(tau.shape.truncated(N), tuple(levels))


@dataclass(frozen=True)
class PowerSettledReport:
    k: int
    base: SettledStats
    powered: SettledStats


def power_settled_consistency(u: TruncatedAutomorphism, k: int, n0: int, N: int) -> PowerSettledReport:
    if k == 0:
        raise ValueError("k must be nonzero")
    return PowerSettledReport(k, settled_stats(u, n0, N), settled_stats(power(u, k), n0, N))


class NotMinimal(TreeError):
    pass


def orbit_of_root_path(u: TruncatedAutomorphism, n: int) -> np.ndarray:
    """The u-orbit of the all-zeros vertex of V_n, in orbit order."""
    return orbit_order(np.ascontiguousarray(u.table(n)), 0)


def level_conjugator(u: TruncatedAutomorphism, w: TruncatedAutomorphism, N: int) -> TruncatedAutomorphism:
    """g with g u g^-1 = w on V_1..V_N, sending u^j(0^n) to w^j(0^n)."""
    if u.shape != w.shape:
        raise TreeError("shape mismatch")
    if not is_minimal_up_to(u, N) or not is_minimal_up_to(w, N):
        raise NotMinimal("level_conjugator needs two elements transitive on V_N")
    levels = []
    for n in range(1, N + 1):
        ou = orbit_of_root_path(u, n)
        ow = orbit_of_root_path(w, n)
        g = np.empty_like(ou)
        g[ou] = ow
        levels.append(g)
    return TruncatedAutomorphism(u.shape.truncated(N), tuple(levels))


def _level_rng(seed: int, level: int) -> np.random.Generator:
    # Philox is counter based: the stream for a level is fixed by (seed, level),
    # and vertices consume it in index order.
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, level])))


def haar_sample(shape: TreeShape, N: int, seed: int) -> TruncatedAutomorphism:
    """Uniform element of Aut(T)|V_N: every vertex gets an independent uniform local permutation."""
    shape = shape.truncated(N)
    check_level_budget(shape)
    local = []
    for n in range(1, N + 1):
        rng = _level_rng(seed, n)
        keys = rng.random((shape.level_size(n - 1), shape.arity(n)))
        local.append(np.argsort(keys, axis=1))
    return from_local_permutations(shape, local)


def wreath_sample(H: Sequence[Sequence[int]], N: int, seed: int) -> TruncatedAutomorphism:
    """Every vertex gets a local permutation drawn uniformly from H."""
    if not H:
        raise ValueError("H must contain at least one permutation")
    perms = np.array([list(h) for h in H], dtype=np.int64)
    d = perms.shape[1]
    if d < 2 or any(sorted(row) != list(range(d)) for row in perms.tolist()):
        raise ValueError("H must consist of permutations of one alphabet 0..d-1")
    shape = TreeShape.constant(d, N)
    check_level_budget(shape)
    local = []
    for n in range(1, N + 1):
        rng = _level_rng(seed, n)
        local.append(perms[rng.integers(len(perms), size=shape.level_size(n - 1))])
    return from_local_permutations(shape, local)
