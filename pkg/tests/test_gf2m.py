import itertools

import numpy as np
import pytest

from bioseal.gf2m import (GF2m, poly_degree, poly_divmod, poly_gcd, poly_lcm,
                          poly_mod, poly_mul, poly_to_str)


@pytest.fixture(scope="module")
def gf16():
    return GF2m(4)


def test_add_is_xor(gf16):
    assert gf16.add(0b0011, 0b0101) == 0b0110
    for x in range(16):
        assert gf16.add(x, x) == 0
        assert gf16.add(x, 0) == x


def test_mul_identity_and_zero(gf16):
    for a in range(16):
        assert gf16.mul(a, 0) == 0
        assert gf16.mul(a, 1) == a


def test_alpha_times_alpha14_is_one(gf16):
    # log/antilog oracle: multiply alpha by itself 13 more times
    a14 = 2
    for _ in range(13):
        a14 = gf16.mul(a14, 2)
    assert a14 == gf16.alpha_pow(14)
    assert gf16.mul(2, a14) == 1


def test_inverse_by_exhaustive_search(gf16):
    for a in range(1, 16):
        brute = next(b for b in range(1, 16) if gf16.mul(a, b) == 1)
        assert gf16.inv(a) == brute
    assert gf16.inv(1) == 1
    assert gf16.inv(2) == gf16.alpha_pow(14)


def test_inverse_of_zero_rejected(gf16):
    with pytest.raises(ZeroDivisionError):
        gf16.inv(0)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_field_axioms_exhaustive(m):
    f = GF2m(m)
    q = 1 << m
    for a, b in itertools.product(range(q), repeat=2):
        assert f.mul(a, b) == f.mul(b, a)
        assert f.add(a, b) == f.add(b, a)
    for a, b, c in itertools.product(range(q), repeat=3):
        assert f.mul(a, f.mul(b, c)) == f.mul(f.mul(a, b), c)
        assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
    for a in range(1, q):
        assert f.mul(a, f.inv(a)) == 1


@pytest.mark.parametrize("m", range(2, 17))
def test_alpha_order_is_full_for_all_default_fields(m):
    f = GF2m(m)
    # table construction enumerates alpha^i; spot-check the cycle closes
    assert f.alpha_pow(f.order) == 1
    assert f.alpha_pow(1) == 2
    if m <= 10:
        seen = {f.alpha_pow(i) for i in range(f.order)}
        assert len(seen) == f.order


def test_non_primitive_polynomial_rejected():
    # x^4 + x^3 + x^2 + x + 1 is irreducible but has order 5, not 15
    with pytest.raises(ValueError):
        GF2m(4, 0b11111)


def test_minimal_polynomial_fixtures(gf16):
    assert gf16.minimal_polynomial(0) == 0b11             # x + 1
    assert gf16.minimal_polynomial(1) == 0b10011          # the primitive poly
    assert gf16.minimal_polynomial(3) == 0b11111          # x^4+x^3+x^2+x+1


def test_minimal_polynomial_product_oracle(gf16):
    # multiply out the conjugacy class of alpha^3 by hand: {3, 6, 12, 9}
    coeffs = [1]
    for c in (3, 6, 12, 9):
        root = gf16.alpha_pow(c)
        nxt = [0] * (len(coeffs) + 1)
        for j, cf in enumerate(coeffs):
            nxt[j + 1] ^= cf
            nxt[j] ^= gf16.mul(cf, root)
        coeffs = nxt
    packed = sum(cf << j for j, cf in enumerate(coeffs))
    assert packed == gf16.minimal_polynomial(3)


@pytest.mark.parametrize("m", [3, 4, 6])
def test_minimal_polynomial_annihilates_its_root(m):
    f = GF2m(m)
    for i in range(f.order):
        p = f.minimal_polynomial(i)
        assert f.eval_poly(p, f.alpha_pow(i)) == 0
        assert poly_degree(p) <= m
        assert m % poly_degree(p) == 0


def test_poly_arithmetic_fixtures():
    assert poly_mul(0b101, 1) == 0b101
    assert poly_mod(0b1101, 0b1101) == 0
    assert poly_lcm(0b11, 0b11) == 0b11
    # (x+1)(x^2+x+1) = x^3+1
    assert poly_mul(0b11, 0b111) == 0b1001
    quot, rem = poly_divmod(0b1001, 0b11)
    assert quot == 0b111 and rem == 0


def test_poly_divmod_random_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = int(rng.integers(0, 1 << 16))
        b = int(rng.integers(1, 1 << 8))
        q, r = poly_divmod(a, b)
        assert poly_mul(q, b) ^ r == a
        assert poly_degree(r) < poly_degree(b)


def test_poly_gcd_divides_both():
    rng = np.random.default_rng(8)
    for _ in range(100):
        a = int(rng.integers(1, 1 << 12))
        b = int(rng.integers(1, 1 << 12))
        g = poly_gcd(a, b)
        assert poly_mod(a, g) == 0
        assert poly_mod(b, g) == 0


def test_poly_division_by_zero_rejected():
    with pytest.raises(ZeroDivisionError):
        poly_divmod(0b101, 0)


def test_poly_to_str():
    assert poly_to_str(0b10011) == "x^4 + x + 1"
    assert poly_to_str(0) == "0"
