"""Narrow-sense primitive binary BCH codes.

Covers construction from (m, t), systematic encoding, syndrome
computation, and hard-decision decoding (Berlekamp-Massey locator
synthesis plus Chien search).  Bit conventions, fixed for the whole
package: bit index i of a word is the coefficient of x^i, and systematic
message bits occupy the high-degree positions n-k..n-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2m import GF2m, poly_degree, poly_lcm, poly_mod

# Named parameter sets; bch63_45 is the desk-scale default.
PRESETS = {
    "bch15_7": (4, 2),
    "bch63_45": (6, 3),
    "bch255_187": (8, 9),
    "bch1023_933": (10, 9),
}


@dataclass(frozen=True)
class BchCode:
    """An (n, k) BCH code correcting up to t errors over GF(2^m)."""

    m: int
    n: int
    k: int
    t: int
    generator: int              # packed binary polynomial of degree n - k
    parity_check: np.ndarray    # (n - k, n) uint8, full row rank
    field: GF2m = field(repr=False)

    @property
    def name(self) -> str:
        return f"bch{self.n}_{self.k}"


@dataclass
class DecodeResult:
    message: np.ndarray    # (k,) uint8
    codeword: np.ndarray   # (n,) uint8
    corrected: int
    success: bool


def construct(m: int, t: int, primitive_poly: int | None = None) -> BchCode:
    """Build the narrow-sense BCH code of length 2^m - 1 correcting t errors.

    The generator is the lcm of the minimal polynomials of
    alpha, alpha^2, ..., alpha^(2t); k follows as n - deg(generator).
    """
    if not 2 <= m <= 10:
        raise ValueError(f"m must be in 2..10, got {m}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    f = GF2m(m, primitive_poly)
    n = f.order
    if 2 * t >= n:
        raise ValueError(f"t={t} leaves no designed distance inside n={n}")

    gen = 1
    for i in range(1, 2 * t + 1):
        gen = poly_lcm(gen, f.minimal_polynomial(i))
    k = n - poly_degree(gen)
    if k <= 0:
        raise ValueError(f"degenerate code: BCH(m={m}, t={t}) leaves no message bits")
    if poly_mod((1 << n) | 1, gen) != 0:
        raise AssertionError("generator does not divide x^n - 1")

    return BchCode(m=m, n=n, k=k, t=t, generator=gen,
                   parity_check=_parity_check(f, n, t, k), field=f)


def from_preset(name: str) -> BchCode:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return construct(*PRESETS[name])


def _parity_check(f: GF2m, n: int, t: int, k: int) -> np.ndarray:
    """Binary parity-check matrix from the GF(2^m) syndrome map.

    Rows come from [alpha^(j*i)] for odd j in 1..2t-1 (even syndromes are
    squares of odd ones, hence GF(2)-dependent), expanded bit-by-bit and
    row-reduced; exactly n - k independent rows must survive.
    """
    cols = np.arange(n, dtype=np.int64)
    blocks = []
    for j in range(1, 2 * t, 2):
        vals = f.exp[(j * cols) % f.order]             # alpha^(j*i) per column
        bits = (vals[None, :] >> np.arange(f.m)[:, None]) & 1
        blocks.append(bits.astype(np.uint8))
    h = np.concatenate(blocks, axis=0)
    h = _row_reduce_gf2(h)
    if h.shape[0] != n - k:
        raise AssertionError(
            f"parity-check rank {h.shape[0]} != n - k = {n - k}"
        )
    return h


def _row_reduce_gf2(a: np.ndarray) -> np.ndarray:
    """Reduced row-echelon form over GF(2), zero rows dropped."""
    a = a.copy()
    rows, cols = a.shape
    pivot_row = 0
    for col in range(cols):
        hits = np.nonzero(a[pivot_row:, col])[0]
        if hits.size == 0:
            continue
        swap = pivot_row + hits[0]
        if swap != pivot_row:
            a[[pivot_row, swap]] = a[[swap, pivot_row]]
        others = np.nonzero(a[:, col])[0]
        others = others[others != pivot_row]
        a[others] ^= a[pivot_row]
        pivot_row += 1
        if pivot_row == rows:
            break
    return a[:pivot_row]


def _bits_to_int(bits: np.ndarray) -> int:
    val = 0
    for i in np.nonzero(bits)[0]:
        val |= 1 << int(i)
    return val


def _int_to_bits(val: int, width: int) -> np.ndarray:
    return np.array([(val >> i) & 1 for i in range(width)], dtype=np.uint8)


def encode(code: BchCode, message: np.ndarray) -> np.ndarray:
    """Systematic encoding: message in the top k bits, parity below."""
    message = np.asarray(message, dtype=np.uint8)
    if message.shape != (code.k,):
        raise ValueError(f"message must have length k={code.k}, got {message.shape}")
    shifted = _bits_to_int(message) << (code.n - code.k)
    word = shifted | poly_mod(shifted, code.generator)
    return _int_to_bits(word, code.n)


def syndromes(code: BchCode, word: np.ndarray) -> list[int]:
    """S_j = word(alpha^j) for j = 1..2t; all zero iff word is a codeword."""
    word = np.asarray(word, dtype=np.uint8)
    if word.shape != (code.n,):
        raise ValueError(f"word must have length n={code.n}, got {word.shape}")
    f = code.field
    pos = np.nonzero(word)[0].astype(np.int64)
    out = []
    for j in range(1, 2 * code.t + 1):
        if pos.size == 0:
            out.append(0)
        else:
            out.append(int(np.bitwise_xor.reduce(f.exp[(j * pos) % f.order])))
    return out


def _berlekamp_massey(f: GF2m, synd: list[int]) -> list[int]:
    """Error-locator coefficients sigma_0..sigma_L, sigma_0 = 1."""
    c = [1]          # current locator estimate
    b = [1]          # copy from the last length change
    el = 0           # current LFSR length
    gap = 1          # steps since the last length change
    disc_b = 1       # discrepancy at the last length change
    for step, s in enumerate(synd):
        d = s
        for i in range(1, el + 1):
            if i < len(c):
                d ^= f.mul(c[i], synd[step - i])
        if d == 0:
            gap += 1
            continue
        coef = f.mul(d, f.inv(disc_b))
        shifted = [0] * gap + [f.mul(coef, bi) for bi in b]
        updated = [0] * max(len(c), len(shifted))
        for i, ci in enumerate(c):
            updated[i] ^= ci
        for i, si in enumerate(shifted):
            updated[i] ^= si
        if 2 * el <= step:
            b, disc_b, el, gap = c, d, step + 1 - el, 1
        else:
            gap += 1
        c = updated
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _chien_roots(code: BchCode, locator: list[int]) -> np.ndarray:
    """Positions p with locator(alpha^-p) == 0, vectorized over p."""
    f = code.field
    p = np.arange(code.n, dtype=np.int64)
    acc = np.full(code.n, locator[0], dtype=np.int64)
    for ell in range(1, len(locator)):
        cf = locator[ell]
        if cf == 0:
            continue
        idx = (int(f.log[cf]) + ell * (f.order - p)) % f.order
        acc ^= f.exp[idx]
    return np.nonzero(acc == 0)[0]


def decode(code: BchCode, word: np.ndarray) -> DecodeResult:
    """Hard-decision decode: locate up to t flipped bits and undo them.

    On failure (no codeword within reach) the word passes through
    unchanged with success=False and corrected=0.
    """
    word = np.asarray(word, dtype=np.uint8)
    if word.shape != (code.n,):
        raise ValueError(f"word must have length n={code.n}, got {word.shape}")

    synd = syndromes(code, word)
    if not any(synd):
        return DecodeResult(message=word[code.n - code.k:].copy(),
                            codeword=word.copy(), corrected=0, success=True)

    failed = DecodeResult(message=word[code.n - code.k:].copy(),
                          codeword=word.copy(), corrected=0, success=False)

    locator = _berlekamp_massey(code.field, synd)
    degree = len(locator) - 1
    if degree == 0 or degree > code.t:
        return failed
    roots = _chien_roots(code, locator)
    if roots.size != degree:
        return failed

    corrected = word.copy()
    corrected[roots] ^= 1
    if any(syndromes(code, corrected)):
        return failed
    return DecodeResult(message=corrected[code.n - code.k:].copy(),
                        codeword=corrected, corrected=int(roots.size), success=True)
