"""Finite-level experiments with the iterated monodromy groups G = <u_1, ..., u_r>.

The generators act on the binary tree by u_1 = eta, u_{s+1} = (u_s, u_r) and
u_i = (u_{i-1}, 1) otherwise. Membership in the closure of G at level n is
decided in the finite group generated by the restrictions u_i|V_n.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .affine import AffineElement, affine_form_of, make_frame, realize_affine, theta_signature
from .bsgs import LevelGroup, contains, level_group
from .cycles import is_minimal_up_to
from .recursion import (
    ETA,
    ID,
    Compose,
    ElementExpr,
    RecursionEnv,
    Ref,
    Tuple,
    truncate,
)
from .tree import TreeError, TruncatedAutomorphism, compose, inverse, power


class NormalizerCase(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    DIHEDRAL = "dihedral"


def normalizer_case(r: int, s: int) -> NormalizerCase:
    _check_rs(r, s)
    if r == 2:
        return NormalizerCase.DIHEDRAL
    if s == 1:
        return NormalizerCase.B
    if r == 3:
        return NormalizerCase.C
    return NormalizerCase.A


def _check_rs(r: int, s: int) -> None:
    if r < 2 or not 1 <= s < r:
        raise TreeError(f"need r >= 2 and 1 <= s < r, got r={r}, s={s}")


@dataclass(frozen=True, eq=False)
class ImgPresentation:
    r: int
    s: int
    env: RecursionEnv

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"u{i}" for i in range(1, self.r + 1))

    @property
    def case(self) -> NormalizerCase:
        return normalizer_case(self.r, self.s)

    def u(self, i: int) -> Ref:
        if not 1 <= i <= self.r:
            raise TreeError(f"generator index {i} outside 1..{self.r}")
        return Ref(f"u{i}")

    def truncations(self, N: int) -> list[TruncatedAutomorphism]:
        return [truncate(Ref(name), self.env, N) for name in self.names]


def img_generators(r: int, s: int) -> ImgPresentation:
    _check_rs(r, s)
    bindings: dict[str, ElementExpr] = {"u1": ETA}
    for i in range(2, r + 1):
        if i == s + 1:
            bindings[f"u{i}"] = Tuple((Ref(f"u{s}"), Ref(f"u{r}")))
        else:
            bindings[f"u{i}"] = Tuple((Ref(f"u{i - 1}"), ID))
    return ImgPresentation(r, s, RecursionEnv(2).extend(bindings))


def product_generator(pres: ImgPresentation) -> ElementExpr:
    """a_0 = u_1 u_2 ... u_r (u_r acts first)."""
    return Compose(tuple(Ref(name) for name in pres.names))


@dataclass(frozen=True, eq=False)
class NormalizerWord:
    case: NormalizerCase
    t: tuple[int, ...]       # t[i] is the exponent of w_i; t[0] only matters in case C
    expr: ElementExpr
    env: RecursionEnv
    s: int

    def truncate(self, N: int) -> TruncatedAutomorphism:
        return truncate(truncated_word(self, N), self.env, N)


def trivial_below(case: NormalizerCase, s: int, i: int) -> int:
    """Number of top levels on which w_i (i >= 1) acts trivially.

    Case A: w_i|V_k = id for k < i + s. Case B: for k < i + 1. Case C: for k < i + 2.
    These are the depths the words are truncated with; tests confirm them.
    """
    if case is NormalizerCase.A:
        return i + s - 1
    if case is NormalizerCase.B:
        return i
    if case is NormalizerCase.C:
        return i + 1
    raise TreeError("the dihedral case has no normalizer words")


def normalizer_env(pres: ImgPresentation, count: int) -> RecursionEnv:
    """The generator bindings extended with w_1..w_count (and w_0 in case C)."""
    if pres.case is NormalizerCase.DIHEDRAL:
        raise TreeError("the dihedral case has no normalizer words")
    # Round up so that nearby counts share one environment and its memo.
    return _normalizer_env(pres.r, pres.s, max(16, 1 << (max(count, 1) - 1).bit_length()))


@lru_cache(maxsize=32)
def _normalizer_env(r: int, s: int, count: int) -> RecursionEnv:
    pres = img_generators(r, s)
    us, ur = Ref(f"u{s}"), Ref(f"u{r}")
    bindings: dict[str, ElementExpr] = {}
    if pres.case is NormalizerCase.A:
        bindings["w1"] = Tuple((us, us))
    else:
        bindings["w1"] = Tuple((ID, Compose((us, ur, us, ur))))
    for i in range(2, count + 1):
        bindings[f"w{i}"] = Tuple((Ref(f"w{i - 1}"), Ref(f"w{i - 1}")))
    if pres.case is NormalizerCase.C:
        bindings["w0"] = Compose((Ref("u3"), Tuple((Ref("w0"), Ref("w0")))))
    return pres.env.extend(bindings)


def normalizer_words(pres: ImgPresentation, t: Sequence[int]) -> NormalizerWord:
    """w = w_0^{t_0} w_1^{t_1} w_2^{t_2} ... for a finite 0/1 sequence t."""
    t = tuple(int(x) for x in t)
    if any(x not in (0, 1) for x in t):
        raise TreeError("t must be a 0/1 sequence")
    case = pres.case
    if case is NormalizerCase.DIHEDRAL:
        raise TreeError("the dihedral case has no normalizer words")
    if t and t[0] and case is not NormalizerCase.C:
        raise TreeError("t_0 = 1 is only meaningful in case C")
    env = normalizer_env(pres, max(len(t) - 1, 1))
    factors = tuple(Ref(f"w{i}") for i, x in enumerate(t) if x)
    expr = Compose(factors) if factors else ID
    return NormalizerWord(case, t, expr, env, pres.s)


def truncated_word(word: NormalizerWord, N: int) -> ElementExpr:
    """Drop the factors w_i that act trivially on V_1..V_N."""
    factors = tuple(
        Ref(f"w{i}") for i, x in enumerate(word.t)
        if x and (i == 0 or trivial_below(word.case, word.s, i) < N))
    return Compose(factors) if factors else ID


@lru_cache(maxsize=64)
def _img_level_group(r: int, s: int, n: int) -> LevelGroup:
    pres = img_generators(r, s)
    return level_group(pres.truncations(n), n)


def img_level_group(pres: ImgPresentation, n: int) -> LevelGroup:
    """G|V_n as a stabilizer chain (cached per (r, s, n))."""
    return _img_level_group(pres.r, pres.s, n)


def coset_representative(pres: ImgPresentation, t: Sequence[int]) -> tuple[ElementExpr, RecursionEnv]:
    """phi(t) in cases A and B; in case C with t_0 = 1 the even-parity u_3 phi(t)."""
    word = normalizer_words(pres, t)
    expr = word.expr
    if word.case is NormalizerCase.C and word.t and word.t[0]:
        expr = Compose((Ref("u3"), expr))
    return expr, word.env


def coset_minimal_element(pres: ImgPresentation, t: Sequence[int],
                          a0: ElementExpr | None = None) -> tuple[ElementExpr, RecursionEnv]:
    """a*w for the case-appropriate representative w of the coset of t."""
    a0 = product_generator(pres) if a0 is None else a0
    w, env = coset_representative(pres, t)
    return Compose((a0, w)), env


@dataclass(frozen=True)
class WeylRow:
    case: str
    r: int
    s: int
    m: int
    k: int
    n: int
    theta1: int
    theta2: int
    member: bool
    first_non_member_level: int | None


WEYL_COLUMNS = ("case", "r", "s", "m", "k", "n", "theta1", "theta2", "member", "firstNonMemberLevel")


def predicted_kernel(case: NormalizerCase, k: int) -> bool:
    """Whether multiplier k lies in the kernel attached to the case."""
    sig = theta_signature(k)
    if case is NormalizerCase.A:
        return sig.theta1 == 0
    if case is NormalizerCase.B:
        return sig.theta2 == 0
    if case is NormalizerCase.C:
        return sig.theta1 == 0 and sig.theta2 == 0
    raise TreeError("the dihedral case has no kernel prediction; use dihedral_audit")


def weyl_index_experiment(pres: ImgPresentation, n_max: int, ms: Sequence[int],
                          ks: Sequence[int]) -> list[WeylRow]:
    """Membership of realized sigma_{m,k}|V_n in G|V_n for every n <= n_max.

    Non-membership at some level is evidence against the multiplier; membership
    at all tested levels is only consistency.
    """
    a0 = truncate(product_generator(pres), pres.env, n_max)
    frame = make_frame(a0)
    groups = [img_level_group(pres, n) for n in range(1, n_max + 1)]
    rows = []
    for k in ks:
        sig = theta_signature(k)
        for m in ms:
            sigma = realize_affine(frame, AffineElement(2, n_max, m, k))
            members = [contains(groups[n - 1], sigma) for n in range(1, n_max + 1)]
            first = next((n for n, ok in enumerate(members, start=1) if not ok), None)
            for n, ok in enumerate(members, start=1):
                rows.append(WeylRow(pres.case.value, pres.r, pres.s, m, k, n,
                                    sig.theta1, sig.theta2, ok, first))
    return rows


@dataclass(frozen=True)
class DihedralLevel:
    n: int
    order: int
    outside_cyclic: int
    outside_all_involutions: bool
    multipliers: frozenset
    all_affine: bool


def dihedral_audit(n_max: int) -> list[DihedralLevel]:
    """Enumerate G|V_n for r = 2, s = 1 and classify every element in the frame of a = u_1 u_2."""
    pres = img_generators(2, 1)
    a = truncate(product_generator(pres), pres.env, n_max)
    frame = make_frame(a)
    out = []
    for n in range(1, n_max + 1):
        group = img_level_group(pres, n)
        outside = 0
        involutions = True
        affine = True
        mults = set()
        ident = np.arange(1 << n)
        for g in group.elements():
            form = affine_form_of(frame, g, n)
            if form is None:
                affine = False
                continue
            mults.add(form[1])
            if form[1] != 1 % (1 << n):
                outside += 1
                involutions &= bool(np.array_equal(g[g], ident))
        out.append(DihedralLevel(n, group.order(), outside, involutions, frozenset(mults), affine))
    return out


@dataclass(frozen=True)
class CosetCheck:
    n: int
    minimal: bool
    same_coset: bool


def conjugation_coset_check(pres: ImgPresentation, z: TruncatedAutomorphism,
                            aw: TruncatedAutomorphism, n_max: int) -> list[CosetCheck]:
    """Is z aw z^-1 minimal on V_n, and does (z aw z^-1)(aw)^-1 lie in G|V_n?"""
    z = z.restrict(n_max)
    aw = aw.restrict(n_max)
    conj = compose(compose(z, aw), inverse(z))
    quotient = compose(conj, inverse(aw))
    return [CosetCheck(n, is_minimal_up_to(conj, n), contains(img_level_group(pres, n), quotient))
            for n in range(1, n_max + 1)]


def involution_product_orders(pres: ImgPresentation, N: int) -> list[int]:
    """Order of u_s u_r on V_1..V_N."""
    from .tree import order_profile

    return order_profile(truncate(Compose((Ref(f"u{pres.s}"), Ref(f"u{pres.r}"))), pres.env, N))


def dihedral_reflection_squares(N: int, k_max: int) -> bool:
    """(b a^k)^2 = 1 on V_1..V_N for b = u_1, a = u_1 u_2 and 0 <= k <= k_max."""
    pres = img_generators(2, 1)
    a = truncate(product_generator(pres), pres.env, N)
    b = truncate(Ref("u1"), pres.env, N)
    ident = np.arange(1 << N)
    for k in range(k_max + 1):
        x = compose(b, power(a, k))
        if not np.array_equal(compose(x, x).table(N), ident):
            return False
    return True
