from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import odometer_table
from treeaut.cycles import haar_sample
from treeaut.recursion import ETA, ID, Compose, RecursionEnv, Ref, Tuple, odometer, truncate
from treeaut.tree import (
    BudgetError,
    DepthError,
    TreeError,
    TreeShape,
    TruncatedAutomorphism,
    Vertex,
    apply,
    compose,
    distance,
    dumps,
    from_local_permutations,
    from_top_level,
    identity,
    inverse,
    is_identity,
    loads,
    order_at_level,
    order_profile,
    power,
    sign_at_level,
    verify_consistency,
)


def binary(N):
    return TreeShape.constant(2, N)


def odo(N, d=2):
    ref, env = odometer(d)
    return truncate(ref, env, N)


def eta(N):
    return truncate(ETA, RecursionEnv(2), N)


def test_shape_basics():
    s = TreeShape((2, 3, 5), 3)
    assert [s.level_size(n) for n in range(4)] == [1, 2, 6, 30]
    assert s.arity(2) == 3 and s.constant_arity is None
    assert TreeShape.constant(3, 4).constant_arity == 3
    assert TreeShape.from_dict(s.to_dict()) == s
    with pytest.raises(TreeError):
        TreeShape((2, 1), 2)
    with pytest.raises(DepthError):
        s.arity(4)


def test_big_level_sizes_are_exact():
    s = TreeShape.constant(7, 60)
    assert s.level_size(60) == 7 ** 60


def test_vertex_encoding_round_trip():
    s = TreeShape((2, 3, 4), 3)
    for code in range(24):
        v = Vertex.decode(s, 3, code)
        assert v.encode(s) == code
    assert Vertex.parse("011").word == (0, 1, 1)
    assert Vertex.parse("1.12.3").word == (1, 12, 3)
    assert str(Vertex((1, 12))) == "1.12"
    with pytest.raises(TreeError):
        Vertex((2,)).encode(s)


def test_verify_consistency_examples():
    assert verify_consistency(identity(binary(5)))
    assert verify_consistency(odo(8))
    # pi_1 swaps 0 and 1, pi_2 swaps 00 and 01: the prefix of pi_2(00) is 0, not 1.
    bad = TruncatedAutomorphism(binary(2), (np.array([1, 0]), np.array([1, 0, 2, 3])))
    assert not verify_consistency(bad)


def test_odometer_matches_carry_oracle():
    a = odo(8)
    for n in range(1, 9):
        assert a.table(n).tolist() == odometer_table(2, n)
    a3 = odo(5, 3)
    for n in range(1, 6):
        assert a3.table(n).tolist() == odometer_table(3, n)


def test_apply_examples():
    assert apply(identity(binary(3)), Vertex.parse("011")) == Vertex.parse("011")
    assert apply(odo(2), Vertex.parse("11")) == Vertex.parse("00")
    e = eta(3)
    for x in ("000", "011", "010"):
        assert apply(e, Vertex.parse(x)) == Vertex.parse("1" + x[1:])
    with pytest.raises(DepthError):
        apply(e, Vertex.parse("0000"))


def test_compose_identity_and_involution():
    u = haar_sample(binary(6), 6, 1)
    assert compose(u, identity(binary(6))) == u
    assert is_identity(compose(eta(6), eta(6)))
    assert is_identity(compose(u, inverse(u)))
    with pytest.raises(TreeError):
        compose(u, identity(binary(5)))


def test_tuple_eta_rewrite_on_random_sections():
    # (u0, u1) eta = eta (u1, u0), with u0 and u1 random elements of depth 6.
    for seed in range(5):
        u0 = haar_sample(binary(6), 6, 2 * seed)
        u1 = haar_sample(binary(6), 6, 2 * seed + 1)
        env = RecursionEnv(2)
        lhs = _tuple_of(u0, u1, 7)
        rhs = _tuple_of(u1, u0, 7)
        e = truncate(ETA, env, 7)
        assert compose(lhs, e) == compose(e, rhs)


def _tuple_of(u0, u1, N):
    # Portrait of (u0, u1): identity at the root, then the children's tables side by side.
    levels = [np.array([0, 1])]
    for n in range(1, N):
        half = 1 << n
        levels.append(np.concatenate([u0.table(n), u1.table(n) + half]))
    return TruncatedAutomorphism(binary(N), tuple(levels))


def test_distance_examples():
    a = odo(6)
    ident = identity(binary(6))
    assert distance(a, a).equal and distance(a, a).value == 0
    assert distance(ident, eta(6)).value == Fraction(1)
    assert distance(ident, power(a, 2)).value == Fraction(1, 2)


def test_sign_examples():
    a = odo(10)
    assert all(sign_at_level(identity(binary(4)), n) == 1 for n in range(1, 5))
    assert all(sign_at_level(a, n) == -1 for n in range(1, 11))
    assert sign_at_level(eta(2), 2) == 1


def test_order_examples():
    assert order_at_level(identity(binary(3)), 3) == 1
    assert order_at_level(odo(5), 5) == 32
    assert order_profile(odo(5, 3)) == [3, 9, 27, 81, 243]
    assert order_profile(identity(binary(4))) == [1, 1, 1, 1]


def test_order_of_b_by_brute_force():
    # b = (a, b) restricts to the identity on V_1, so its orders lag one level
    # behind the odometer: (1, 2, 4, 8), computed here by repeated composition.
    env = RecursionEnv(2).extend({"a": Compose((Tuple((Ref("a"), ID)), ETA)), "b": Tuple((Ref("a"), Ref("b")))})
    b = truncate(Ref("b"), env, 4)
    brute = []
    for n in range(1, 5):
        x, k = b.table(n), 1
        while not np.array_equal(x, np.arange(x.size)):
            x, k = b.table(n)[x], k + 1
        brute.append(k)
    assert order_profile(b) == brute == [1, 2, 4, 8]


def test_local_permutations_and_top_level():
    u = haar_sample(TreeShape((2, 3, 2), 3), 3, 5)
    assert verify_consistency(u)
    assert from_top_level(u.shape, u.table(3)) == u
    with pytest.raises(TreeError):
        from_top_level(binary(2), np.array([2, 0, 1, 3]))
    with pytest.raises(TreeError):
        from_local_permutations(binary(2), [np.array([[1, 0]]), np.array([[0, 1]])])


def test_serialization_round_trip():
    u = haar_sample(TreeShape((3, 2, 2), 3), 3, 9)
    assert loads(dumps(u)) == u
    with pytest.raises(TreeError):
        loads('{"schema": "other"}')


def test_budget_guard():
    with pytest.raises(BudgetError):
        identity(binary(30))


def test_tables_are_read_only():
    a = odo(3)
    with pytest.raises(ValueError):
        a.table(2)[0] = 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(-20, 20))
def test_power_matches_repeated_composition(seed, k):
    u = haar_sample(binary(5), 5, seed)
    expected = identity(binary(5))
    step = u if k >= 0 else inverse(u)
    for _ in range(abs(k)):
        expected = compose(step, expected)
    assert power(u, k) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_inverse_of_product(s1, s2):
    u = haar_sample(binary(5), 5, s1)
    w = haar_sample(binary(5), 5, s2)
    assert inverse(compose(u, w)) == compose(inverse(w), inverse(u))
