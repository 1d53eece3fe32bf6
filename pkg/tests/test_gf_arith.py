import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diophfq.gf_arith import (DivisionByZero, EvenCharacteristic, FieldTooLarge, NotPrime,
                              ReducibleModulus, euler_char, fe_arith, field_new, get_field,
                              is_irreducible, parse_field, poly_mul_codes, quad_char)

SMALL_FIELDS = [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2), (3, 3), (7, 2), (11, 2)]


def legendre(x, p):
    return 0 if x % p == 0 else (1 if pow(x, (p - 1) // 2, p) == 1 else -1)


def test_prime_field_squares():
    ctx = field_new(7, 1)
    assert ctx.q == 7
    assert set(np.nonzero(ctx.squares)[0].tolist()) == {x for x in range(1, 7) if pow(x, 3, 7) == 1}
    assert set(np.nonzero(ctx.squares)[0].tolist()) == {1, 2, 4}


def test_f9_with_given_modulus():
    ctx = field_new(3, 2, [1, 0, 1])
    assert ctx.q == 9
    assert ctx.mul(3, 3) == 2
    assert fe_arith(ctx, "mul", 3, 3) == 2


def test_f9_generator_power_ladder():
    ctx = field_new(3, 2, [1, 0, 1])
    x, powers = 1, []
    for _ in range(8):
        x = poly_mul_codes(ctx, x, 4)
        powers.append(x)
    assert powers[-1] == 1
    assert len(set(powers)) == 8  # order exactly 8
    assert fe_arith(ctx, "pow", 4, 8) == 1


@pytest.mark.parametrize("p, k, exc", [(4, 1, EvenCharacteristic), (2, 1, EvenCharacteristic),
                                       (9, 1, NotPrime), (15, 1, NotPrime)])
def test_bad_characteristic(p, k, exc):
    with pytest.raises(exc):
        field_new(p, k)


def test_reducible_modulus_and_cap():
    with pytest.raises(ReducibleModulus):
        field_new(3, 2, [2, 0, 1])  # X^2 - 1
    with pytest.raises(ReducibleModulus):
        field_new(3, 2, [1, 1])
    with pytest.raises(FieldTooLarge):
        field_new(3, 5, table_limit=100)


def test_inverse_and_division_by_zero():
    f7 = get_field(7)
    assert fe_arith(f7, "inv", 3) == 5
    with pytest.raises(DivisionByZero):
        fe_arith(f7, "inv", 0)


def test_quad_char_examples():
    assert quad_char(get_field(7), 3) == -1
    assert pow(3, 3, 7) == 6
    for pk in SMALL_FIELDS:
        assert quad_char(get_field(*pk), 0) == 0
    f9 = field_new(3, 2, [1, 0, 1])
    assert quad_char(f9, 2) == 1
    assert euler_char(f9, 2) == 1


@pytest.mark.parametrize("pk", SMALL_FIELDS)
def test_field_invariants(pk):
    ctx = get_field(*pk)
    assert ctx.q == ctx.p ** ctx.k
    nz = np.arange(1, ctx.q)
    assert np.array_equal(ctx.exp_table[ctx.log_table[nz]], nz)
    assert int(ctx.squares.sum()) == (ctx.q - 1) // 2
    assert is_irreducible(ctx.modulus, ctx.p) or ctx.k == 1


@pytest.mark.parametrize("pk", SMALL_FIELDS)
def test_chi_matches_euler_criterion(pk):
    ctx = get_field(*pk)
    assert [euler_char(ctx, x) for x in range(ctx.q)] == ctx.chi_table.tolist()


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 101])
def test_chi_matches_legendre_prime(p):
    ctx = get_field(p)
    assert [legendre(x, p) for x in range(p)] == ctx.chi_table.tolist()


@pytest.mark.parametrize("pk", SMALL_FIELDS + [(3, 4), (5, 3)])
def test_table_mul_matches_polynomial_mul(pk):
    ctx = get_field(*pk)
    rng = np.random.default_rng(pk[0] * 100 + pk[1])
    xs = rng.integers(0, ctx.q, size=1000)
    ys = rng.integers(0, ctx.q, size=1000)
    for x, y in zip(xs.tolist(), ys.tolist()):
        assert ctx.mul(x, y) == poly_mul_codes(ctx, x, y)
    assert np.array_equal(ctx.mul_arr(xs, ys), [poly_mul_codes(ctx, x, y) for x, y in zip(xs, ys)])


@pytest.mark.parametrize("pk", SMALL_FIELDS)
def test_multiplicativity_and_orthogonality(pk):
    ctx = get_field(*pk)
    for x in range(1, ctx.q):
        for y in range(1, ctx.q):
            assert ctx.chi(ctx.mul(x, y)) == ctx.chi(x) * ctx.chi(y)
    assert int(ctx.chi_table.sum()) == 0


ALL_Q_UP_TO_121 = [(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (17, 1), (19, 1), (23, 1),
                   (5, 2), (3, 3), (29, 1), (31, 1), (37, 1), (41, 1), (43, 1), (47, 1), (7, 2),
                   (53, 1), (59, 1), (61, 1), (67, 1), (71, 1), (73, 1), (79, 1), (3, 4), (83, 1),
                   (89, 1), (97, 1), (101, 1), (103, 1), (107, 1), (109, 1), (113, 1), (11, 2)]


@pytest.mark.parametrize("pk", ALL_Q_UP_TO_121)
def test_shifted_sum_identity(pk):
    ctx = get_field(*pk)
    a = ctx.nonzero()
    for r in range(1, ctx.q):
        assert int(ctx.chi_table[ctx.add_arr(a, r)].sum()) == -ctx.chi(r)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(SMALL_FIELDS), st.integers(0, 10**6), st.integers(0, 10**6),
       st.integers(-20, 20))
def test_field_axioms(pk, x, y, e):
    ctx = get_field(*pk)
    x, y = x % ctx.q, y % ctx.q
    assert ctx.add(x, ctx.neg(x)) == 0
    assert ctx.sub(ctx.add(x, y), y) == x
    assert np.array_equal(ctx.add_arr([x], [y]), [ctx.add(x, y)])
    if x:
        assert ctx.mul(x, ctx.inv(x)) == 1
        assert ctx.mul(ctx.pow(x, e), ctx.pow(x, -e)) == 1


def test_parse_field():
    assert parse_field("3^2").q == 9
    assert parse_field("9").q == 9
    assert parse_field("7").q == 7
    assert parse_field("3^2", modulus=[1, 0, 1]).modulus == (1, 0, 1)
    with pytest.raises(EvenCharacteristic):
        parse_field("4")
    with pytest.raises(NotPrime):
        parse_field("15")


def test_default_modulus_is_smallest_irreducible():
    ctx = get_field(5, 3)
    low = sum(c * 5**i for i, c in enumerate(ctx.modulus[:-1]))
    for smaller in range(low):
        digits = [(smaller // 5**i) % 5 for i in range(3)]
        assert not is_irreducible(digits + [1], 5)
