import random

import numpy as np
import pytest

from treeaut.cycles import is_minimal_up_to
from treeaut.monodromy import (
    NormalizerCase,
    coset_minimal_element,
    coset_representative,
    conjugation_coset_check,
    dihedral_audit,
    dihedral_reflection_squares,
    img_generators,
    img_level_group,
    involution_product_orders,
    normalizer_case,
    normalizer_words,
    predicted_kernel,
    product_generator,
    trivial_below,
    truncated_word,
    weyl_index_experiment,
)
from treeaut.recursion import Ref, truncate
from treeaut.tree import TreeError, is_identity, order_profile, sign_at_level

CASE_PARAMS = {
    NormalizerCase.A: (4, 2),
    NormalizerCase.B: (3, 1),
    NormalizerCase.C: (3, 2),
}


def test_case_classification():
    assert normalizer_case(2, 1) is NormalizerCase.DIHEDRAL
    assert normalizer_case(3, 1) is NormalizerCase.B
    assert normalizer_case(5, 1) is NormalizerCase.B
    assert normalizer_case(3, 2) is NormalizerCase.C
    assert normalizer_case(4, 2) is NormalizerCase.A
    assert normalizer_case(5, 2) is NormalizerCase.A
    for bad in [(1, 1), (3, 3), (3, 0)]:
        with pytest.raises(TreeError):
            img_generators(*bad)


@pytest.mark.parametrize("r,s", [(2, 1), (3, 1), (3, 2), (4, 1), (4, 3), (5, 2)])
def test_generators_are_involutions(r, s):
    pres = img_generators(r, s)
    for u in pres.truncations(10):
        profile = order_profile(u)
        assert set(profile) <= {1, 2} and profile[-1] == 2


@pytest.mark.parametrize("r,s", [(2, 1), (3, 1), (3, 2), (4, 2), (5, 3), (5, 4)])
def test_product_generator_is_minimal_and_odd(r, s):
    pres = img_generators(r, s)
    a0 = truncate(product_generator(pres), pres.env, 10)
    assert is_minimal_up_to(a0, 10)
    assert all(sign_at_level(a0, n) == -1 for n in range(1, 11))


FIRST_NONTRIVIAL = {
    NormalizerCase.A: lambda i, s: i + s,
    NormalizerCase.B: lambda i, s: i + 3,
    NormalizerCase.C: lambda i, s: i + 3,
}


@pytest.mark.parametrize("case", list(CASE_PARAMS))
def test_word_triviality_depths(case):
    r, s = CASE_PARAMS[case]
    env = normalizer_words(img_generators(r, s), (0,) * 6).env
    for i in range(1, 6):
        w = truncate(Ref(f"w{i}"), env, 10)
        first = FIRST_NONTRIVIAL[case](i, s)
        assert is_identity(w, first - 1)
        assert not is_identity(w, first)
        # The truncation bound is never deeper than the observed depth.
        assert trivial_below(case, s, i) <= first - 1


def test_case_a_first_word():
    pres = img_generators(4, 2)
    w1 = truncate(Ref("w1"), normalizer_words(pres, (0, 1)).env, 4)
    assert is_identity(w1, 2)
    assert not is_identity(w1, 3)


@pytest.mark.parametrize("case", list(CASE_PARAMS))
def test_truncation_drops_only_trivial_factors(case):
    r, s = CASE_PARAMS[case]
    pres = img_generators(r, s)
    t = (0,) + (1,) * 10
    word = normalizer_words(pres, t)
    for N in (3, 5, 7):
        full = truncate(word.expr, word.env, N)
        assert word.truncate(N) == full
        kept = truncated_word(word, N)
        expected = sum(1 for i in range(1, 11) if trivial_below(case, s, i) < N)
        assert len(getattr(kept, "factors", (kept,))) == expected


def test_word_validation():
    with pytest.raises(TreeError):
        normalizer_words(img_generators(4, 2), (1, 1))
    with pytest.raises(TreeError):
        normalizer_words(img_generators(3, 1), (0, 2))
    with pytest.raises(TreeError):
        normalizer_words(img_generators(2, 1), (0, 1))
    with pytest.raises(TreeError):
        predicted_kernel(NormalizerCase.DIHEDRAL, 5)
    with pytest.raises(TreeError):
        trivial_below(NormalizerCase.DIHEDRAL, 1, 1)


def test_case_c_even_representative():
    pres = img_generators(3, 2)
    expr, env = coset_representative(pres, (1, 0, 1))
    rep = truncate(expr, env, 8)
    assert all(sign_at_level(rep, n) == 1 for n in range(1, 9))


@pytest.mark.parametrize("case", list(CASE_PARAMS))
def test_coset_minimal_elements(case):
    r, s = CASE_PARAMS[case]
    pres = img_generators(r, s)
    rng = random.Random(5)
    for _ in range(6):
        t = [0] + [rng.randint(0, 1) for _ in range(8)]
        if case is NormalizerCase.C:
            t[0] = rng.randint(0, 1)
        expr, env = coset_minimal_element(pres, t)
        aw = truncate(expr, env, 9)
        assert is_minimal_up_to(aw, 9)


@pytest.mark.parametrize("case", list(CASE_PARAMS))
def test_conjugating_by_generators_keeps_the_coset(case):
    r, s = CASE_PARAMS[case]
    pres = img_generators(r, s)
    expr, env = coset_minimal_element(pres, (0, 1, 0, 1))
    aw = truncate(expr, env, 8)
    for z in (truncate(Ref("u1"), env, 8), truncate(Ref("w1"), env, 8)):
        checks = conjugation_coset_check(pres, z, aw, 8)
        assert all(c.minimal and c.same_coset for c in checks)


def test_involution_products():
    assert involution_product_orders(img_generators(2, 1), 6) == [2, 4, 8, 16, 32, 64]
    orders = involution_product_orders(img_generators(4, 2), 8)
    assert orders == sorted(orders) and orders[-1] > 2


def test_dihedral_audit_level_three():
    levels = dihedral_audit(4)
    third = levels[2]
    assert third.order == 16
    assert third.outside_cyclic == 8
    assert third.outside_all_involutions and third.all_affine
    assert third.multipliers == frozenset({1, 7})
    assert dihedral_reflection_squares(8, 40)


@pytest.mark.parametrize("case", list(CASE_PARAMS))
def test_weyl_rows_follow_the_kernel(case):
    r, s = CASE_PARAMS[case]
    pres = img_generators(r, s)
    rows = weyl_index_experiment(pres, 6, ms=[1, 3], ks=[1, 3, 5, 7, 9, 11, 13, 15])
    for row in rows:
        if predicted_kernel(case, row.k):
            assert row.first_non_member_level is None
        else:
            assert row.first_non_member_level is not None
    assert len(rows) == 6 * 2 * 8


def test_level_groups_grow():
    pres = img_generators(3, 2)
    orders = [img_level_group(pres, n).order() for n in range(1, 7)]
    assert orders[0] == 2
    assert all(b % a == 0 and b > a for a, b in zip(orders, orders[1:]))
    assert np.all(np.diff(np.log2(orders)) >= 1)
