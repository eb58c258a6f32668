"""Arithmetic over GF(2^m) and binary polynomials.

Field elements are integers in [0, 2^m): bit i is the coefficient of
alpha^i in the polynomial basis {1, alpha, ..., alpha^(m-1)}.  Binary
polynomials over GF(2) use the same packing (bit i = coefficient of x^i).

Multiplication and inversion go through log/antilog tables built once at
construction, which keeps everything cheap for m up to 16.  Tables are
immutable after construction, so a field instance can be shared freely
between threads.
"""

from __future__ import annotations

import numpy as np

# Standard primitive polynomials per extension degree (bit i = coeff of x^i).
DEFAULT_PRIMITIVE_POLYS = {
    2: 0b111,                  # x^2 + x + 1
    3: 0b1011,                 # x^3 + x + 1
    4: 0b10011,                # x^4 + x + 1
    5: 0b100101,               # x^5 + x^2 + 1
    6: 0b1000011,              # x^6 + x + 1
    7: 0b10001001,             # x^7 + x^3 + 1
    8: 0b100011101,            # x^8 + x^4 + x^3 + x^2 + 1
    9: 0b1000010001,           # x^9 + x^4 + 1
    10: 0b10000001001,         # x^10 + x^3 + 1
    11: 0b100000000101,        # x^11 + x^2 + 1
    12: 0b1000001010011,       # x^12 + x^6 + x^4 + x + 1
    13: 0b10000000011011,      # x^13 + x^4 + x^3 + x + 1
    14: 0b100010001000011,     # x^14 + x^10 + x^6 + x + 1
    15: 0b1000000000000011,    # x^15 + x + 1
    16: 0b10001000000001011,   # x^16 + x^12 + x^3 + x + 1
}


def poly_degree(p: int) -> int:
    """Degree of a binary polynomial; -1 stands in for the zero polynomial."""
    return p.bit_length() - 1


def poly_mul(a: int, b: int) -> int:
    """Product in GF(2)[x] (carry-less multiply)."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        b >>= 1
    return result


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    """Quotient and remainder of a / b in GF(2)[x]."""
    if b == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    db = poly_degree(b)
    quot = 0
    while a.bit_length() - 1 >= db and a:
        shift = poly_degree(a) - db
        quot ^= 1 << shift
        a ^= b << shift
    return quot, a


def poly_mod(a: int, b: int) -> int:
    return poly_divmod(a, b)[1]


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def poly_lcm(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return poly_divmod(poly_mul(a, b), poly_gcd(a, b))[0]


def poly_to_str(p: int) -> str:
    """Human-readable form, e.g. poly_to_str(0b10011) == 'x^4 + x + 1'."""
    if p == 0:
        return "0"
    terms = []
    for i in range(poly_degree(p), -1, -1):
        if (p >> i) & 1:
            terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
    return " + ".join(terms)


class GF2m:
    """Field GF(2^m) defined by a primitive polynomial.

    Parameters
    ----------
    m : int
        Extension degree, 2 <= m <= 16.
    primitive_poly : int, optional
        Primitive polynomial as packed bits (bit i = coeff of x^i).  Must
        have degree exactly m and a nonzero constant term.  Defaults to a
        standard textbook choice for the given m.

    Primitivity is verified at construction by enumerating the powers of
    alpha: they must visit every nonzero element before cycling.
    """

    def __init__(self, m: int, primitive_poly: int | None = None):
        if not 2 <= m <= 16:
            raise ValueError(f"extension degree must be in 2..16, got {m}")
        if primitive_poly is None:
            primitive_poly = DEFAULT_PRIMITIVE_POLYS[m]
        if poly_degree(primitive_poly) != m:
            raise ValueError(
                f"primitive polynomial 0b{primitive_poly:b} does not have degree {m}"
            )
        if not primitive_poly & 1:
            raise ValueError("primitive polynomial must have a nonzero constant term")

        self.m = m
        self.order = (1 << m) - 1  # size of the multiplicative group
        self.primitive_poly = primitive_poly
        self._build_tables()

    def _build_tables(self) -> None:
        order = self.order
        exp = np.zeros(order, dtype=np.int64)
        log = np.full(order + 1, -1, dtype=np.int64)
        x = 1
        for i in range(order):
            if log[x] != -1:
                raise ValueError(
                    f"0b{self.primitive_poly:b} is not primitive: alpha cycles "
                    f"after {i} steps"
                )
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> self.m:
                x ^= self.primitive_poly
        if x != 1:
            raise ValueError(f"0b{self.primitive_poly:b} is not primitive")
        self.exp = exp
        self.log = log

    # -- element arithmetic -------------------------------------------------

    @staticmethod
    def add(a: int, b: int) -> int:
        """Characteristic-2 addition: bitwise XOR."""
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[(self.log[a] + self.log[b]) % self.order])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def pow(self, a: int, e: int) -> int:
        """a raised to an integer power (e may be negative for nonzero a)."""
        if a == 0:
            if e <= 0:
                raise ZeroDivisionError("0 cannot be raised to a nonpositive power")
            return 0
        return int(self.exp[(int(self.log[a]) * e) % self.order])

    def alpha_pow(self, i: int) -> int:
        """alpha^i for any integer exponent."""
        return int(self.exp[i % self.order])

    # -- structure ----------------------------------------------------------

    def minimal_polynomial(self, i: int) -> int:
        """Minimal polynomial of alpha^i over GF(2), as packed bits.

        Built by multiplying out (x - alpha^(i*2^j)) over the conjugacy
        class of i; the result always collapses to 0/1 coefficients.
        """
        if not 0 <= i < (1 << self.m) - 1:
            raise ValueError(f"exponent must be in [0, 2^m - 2], got {i}")
        conjugates = []
        c = i
        while c not in conjugates:
            conjugates.append(c)
            c = (c * 2) % self.order

        # coeffs[j] is the field coefficient of x^j, low degree first
        coeffs = [1]
        for c in conjugates:
            root = self.alpha_pow(c)
            nxt = [0] * (len(coeffs) + 1)
            for j, cf in enumerate(coeffs):
                nxt[j + 1] ^= cf
                nxt[j] ^= self.mul(cf, root)
            coeffs = nxt

        packed = 0
        for j, cf in enumerate(coeffs):
            if cf not in (0, 1):
                raise AssertionError("minimal polynomial left the prime subfield")
            packed |= cf << j
        return packed

    def eval_poly(self, poly: int, at: int) -> int:
        """Evaluate a binary polynomial at a field element (Horner scheme)."""
        acc = 0
        for j in range(poly_degree(poly), -1, -1):
            acc = self.mul(acc, at) ^ ((poly >> j) & 1)
        return acc

    def __repr__(self) -> str:
        return f"GF2m(m={self.m}, primitive_poly=0b{self.primitive_poly:b})"
