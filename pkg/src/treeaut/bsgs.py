"""Membership testing in finite groups generated by level permutations.

Two stabilizer-chain constructions share one interface:

* SchreierSims is the textbook deterministic algorithm on a base chosen in
  natural point order. It works for any permutation group but slows down on
  large 2-groups, where the base gets long.
* LayeredBinaryGroup handles subgroups of Aut(T)|V_n for the binary tree. It
  stabilizes the levels in order: layer l holds group elements that fix V_{l-1}.
  Such an element swaps the two children of some vertices of V_{l-1}. That swap
  pattern is a vector over F_2, so each layer is an echelon basis and sifting is
  Gaussian elimination. The base is V_0, V_1, ... in natural vertex order.

Permutations are numpy index tables and compose functionally: (g*h)[x] = g[h[x]].
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .tree import DepthError, TreeError, TruncatedAutomorphism, invert_table


def _first_moved(g: np.ndarray) -> int | None:
    moved = np.flatnonzero(g != np.arange(g.size))
    return int(moved[0]) if moved.size else None


class SchreierSims:
    """Base and strong generating set with explicit transversals."""

    def __init__(self, gens: Sequence[np.ndarray], degree: int):
        self.degree = degree
        self.ident = np.arange(degree, dtype=np.int64)
        self.base: list[int] = []
        self.levels: list[list[np.ndarray]] = []   # strong generators fixing base[:i]
        self.transversals: list[dict[int, np.ndarray]] = []
        gens = [np.asarray(g, dtype=np.int64) for g in gens]
        for g in gens:
            if g.shape != (degree,):
                raise TreeError("generator has the wrong degree")
        self._build([g for g in gens if _first_moved(g) is not None])

    def _orbit(self, i: int) -> None:
        point = self.base[i]
        trans = {point: self.ident}
        frontier = [point]
        while frontier:
            nxt = []
            for beta in frontier:
                u = trans[beta]
                for s in self.levels[i]:
                    gamma = int(s[beta])
                    if gamma not in trans:
                        trans[gamma] = s[u]
                        nxt.append(gamma)
            frontier = nxt
        self.transversals[i] = trans

    def _new_level(self, point: int) -> None:
        self.base.append(point)
        self.levels.append([])
        self.transversals.append({})

    def _sift(self, g: np.ndarray, start: int = 0) -> tuple[np.ndarray, int]:
        for i in range(start, len(self.base)):
            beta = int(g[self.base[i]])
            u = self.transversals[i].get(beta)
            if u is None:
                return g, i
            g = invert_table(u)[g]
        return g, len(self.base)

    def _build(self, gens: list[np.ndarray]) -> None:
        for g in gens:
            if all(g[b] == b for b in self.base):
                self._new_level(_first_moved(g))
        for i in range(len(self.base)):
            self.levels[i] = [g for g in gens if all(g[b] == b for b in self.base[:i])]
            self._orbit(i)
        i = len(self.base) - 1
        while i >= 0:
            restarted = False
            trans = self.transversals[i]
            for beta, u in list(trans.items()):
                for s in list(self.levels[i]):
                    h = invert_table(trans[int(s[beta])])[s[u]]
                    res, j = self._sift(h, i + 1)
                    if _first_moved(res) is None:
                        continue
                    if j == len(self.base):
                        self._new_level(_first_moved(res))
                    for level in range(i + 1, j + 1):
                        self.levels[level].append(res)
                        self._orbit(level)
                    i = j
                    restarted = True
                    break
                if restarted:
                    break
            if not restarted:
                i -= 1

    def order(self) -> int:
        out = 1
        for t in self.transversals:
            out *= len(t)
        return out

    def contains(self, g: np.ndarray) -> bool:
        g = np.asarray(g, dtype=np.int64)
        res, _ = self._sift(g)
        return _first_moved(res) is None

    @property
    def strong_generators(self) -> list[np.ndarray]:
        return self.levels[0] if self.levels else []

    def elements(self) -> Iterator[np.ndarray]:
        def rec(i, acc):
            if i < 0:
                yield acc
                return
            for u in self.transversals[i].values():
                yield from rec(i - 1, u[acc])
        yield from rec(len(self.base) - 1, self.ident)


class LayeredBinaryGroup:
    """Stabilizer chain along the levels of the binary tree, truncated at V_n.

    A basis element b of layer l fixes V_{l-1}; its vector has bit w set when b
    swaps the children of w in V_{l-1}. Vectors in a layer are kept in echelon
    form, with pivot = lowest set bit, in insertion order.

    Closure argument: let P_l be the products of basis elements from layers >= l.
    If every generator sifts, every conjugate s*b*s^-1 of a basis element by a
    generator sifts, every b^2 sifts, and every commutator of two basis elements
    of the same layer sifts, then by induction from the deepest layer each P_l is
    a subgroup normalized by the generators, and P_1 is the whole group.
    Commutators across layers never need checking. Squares and commutators in
    layer n are trivial at V_n and are skipped.
    """

    def __init__(self, gens: Sequence[np.ndarray], n: int):
        self.n = n
        self.degree = 1 << n
        self.gens = [np.asarray(g, dtype=np.int64) for g in gens]
        for g in self.gens:
            if g.shape != (self.degree,):
                raise TreeError("generator has the wrong degree")
        self._gen_inv = [invert_table(g) for g in self.gens]
        # probe[l] picks, for each w in V_{l-1}, the leftmost leaf below w*0.
        self._probe = [None] + [np.arange(1 << (l - 1), dtype=np.int64) << (n - l + 1)
                                for l in range(1, n + 1)]
        self.layers: list[list[tuple[int, int, np.ndarray, np.ndarray]]] = [[] for _ in range(n + 1)]
        if not self._preserves_tree():
            raise TreeError("generators do not act as binary tree automorphisms")
        queue = list(self.gens)
        while queue:
            g = queue.pop()
            hit = self._sift(g)
            if hit is not None:
                self._insert(*hit, queue)

    def _preserves_tree(self) -> bool:
        leaves = np.arange(self.degree, dtype=np.int64)
        for g in self.gens:
            for shift in range(1, self.n):
                if not np.array_equal(g[leaves] >> shift, g[(leaves >> shift) << shift] >> shift):
                    return False
        return True

    def _vector(self, h: np.ndarray, l: int) -> int:
        bits = ((h[self._probe[l]] >> (self.n - l)) & 1).astype(np.uint8)
        return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")

    def _sift(self, h: np.ndarray, start: int = 1):
        for l in range(start, self.n + 1):
            x = self._vector(h, l)
            if not x:
                continue
            for pivot, vec, _, binv in self.layers[l]:
                if (x >> pivot) & 1:
                    x ^= vec
                    h = binv[h]
            if x:
                return l, h, x
        return None

    def _insert(self, l: int, h: np.ndarray, x: int, queue: list) -> None:
        pivot = (x & -x).bit_length() - 1
        hinv = invert_table(h)
        if l < self.n:
            queue.append(h[h])
            for _, _, b, binv in self.layers[l]:
                queue.append(h[b[hinv[binv]]])
        for s, sinv in zip(self.gens, self._gen_inv):
            queue.append(s[h[sinv]])
        self.layers[l].append((pivot, x, h, hinv))

    def order(self) -> int:
        return 1 << self.log2_order()

    def log2_order(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def contains(self, g: np.ndarray) -> bool:
        g = np.asarray(g, dtype=np.int64)
        if g.shape != (self.degree,):
            raise TreeError("element has the wrong degree")
        # Elements outside Aut(T) would leave stray bits; the vector test only
        # reads one leaf per vertex, so check the residue at the end instead.
        h = g
        for l in range(1, self.n + 1):
            x = self._vector(h, l)
            for pivot, vec, _, binv in self.layers[l]:
                if (x >> pivot) & 1:
                    x ^= vec
                    h = binv[h]
            if x:
                return False
        return bool(np.array_equal(h, np.arange(self.degree)))

    @property
    def base(self) -> list[tuple[int, int]]:
        """(layer, vertex of V_{layer-1}) for every pivot, in layer order."""
        return [(l, pivot) for l in range(1, self.n + 1) for pivot, *_ in self.layers[l]]

    @property
    def strong_generators(self) -> list[np.ndarray]:
        return [b for layer in self.layers for _, _, b, _ in layer]

    def elements(self) -> Iterator[np.ndarray]:
        basis = self.strong_generators
        for bits in itertools.product((0, 1), repeat=len(basis)):
            g = np.arange(self.degree, dtype=np.int64)
            for b, e in zip(basis, bits):
                if e:
                    g = g[b]
            yield g


@dataclass(eq=False)
class LevelGroup:
    """The finite group generated by generator restrictions to V_level."""

    level: int
    generators: tuple
    method: str
    chain: object = field(repr=False)

    def order(self) -> int:
        return self.chain.order()

    def contains(self, u) -> bool:
        return contains(self, u)

    def elements(self) -> Iterator[np.ndarray]:
        return self.chain.elements()


def _table(u, n: int) -> np.ndarray:
    if isinstance(u, TruncatedAutomorphism):
        if u.depth < n:
            raise DepthError(f"element of depth {u.depth} cannot be restricted to level {n}")
        return u.table(n)
    return np.asarray(u, dtype=np.int64)


def level_group(gens: Sequence, n: int, method: str = "auto", arity: int | None = None) -> LevelGroup:
    """Build the stabilizer chain of <gens restricted to V_n>.

    method is "layered" (binary trees only), "schreier-sims", or "auto", which
    picks the layered chain whenever the tree is binary.
    """
    if n < 1:
        raise DepthError("level must be positive")
    for g in gens:
        if isinstance(g, TruncatedAutomorphism):
            arity = g.shape.constant_arity if arity is None else arity
            if g.shape.constant_arity != arity:
                raise TreeError("generators live on trees with different shapes")
    tables = tuple(_table(g, n) for g in gens)
    if method == "auto":
        method = "layered" if arity == 2 else "schreier-sims"
    if method == "layered":
        if arity not in (2, None) or (tables and tables[0].size != 1 << n):
            raise TreeError("the layered chain needs a binary tree")
        chain = LayeredBinaryGroup(tables, n)
    elif method == "schreier-sims":
        degree = tables[0].size if tables else (arity or 2) ** n
        chain = SchreierSims(tables, degree)
    else:
        raise ValueError(f"unknown method {method!r}")
    return LevelGroup(n, tables, method, chain)


def contains(group: LevelGroup, u) -> bool:
    return group.chain.contains(_table(u, group.level))
