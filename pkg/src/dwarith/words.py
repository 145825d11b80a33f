"""Word-level carry/borrow/widening arithmetic and 128-bit double-words.

Every routine is written with plain operators and masking so it accepts
either Python ints or numpy unsigned arrays (lane-wise).  The word width
defaults to 64 bits; smaller widths are only used for exhaustive checks.
"""

from __future__ import annotations

from typing import NamedTuple

WORD_BITS = 64
WORD_MASK = (1 << WORD_BITS) - 1


def _mask(width):
    return (1 << width) - 1


class DWord(NamedTuple):
    """A double-word ``hi * 2**64 + lo``."""

    hi: int
    lo: int

    @classmethod
    def from_int(cls, x: int, width: int = WORD_BITS) -> "DWord":
        if x < 0 or x >> (2 * width):
            raise ValueError(f"{x} does not fit in a {2 * width}-bit double-word")
        return cls(x >> width, x & _mask(width))

    def value(self, width: int = WORD_BITS) -> int:
        return (int(self.hi) << width) | int(self.lo)


def words_from_int(x: int, n: int, width: int = WORD_BITS) -> tuple:
    """Split ``x`` into ``n`` words, least significant first."""
    if x < 0 or x >> (n * width):
        raise ValueError(f"{x} does not fit in {n} words")
    m = _mask(width)
    return tuple((x >> (width * i)) & m for i in range(n))


def words_to_int(words, width: int = WORD_BITS) -> int:
    return sum(int(w) << (width * i) for i, w in enumerate(words))


def adc_word(a, b, ci, width=WORD_BITS):
    """Add with carry. Returns ``(sum, carry_out)``."""
    m = _mask(width)
    t0 = (a + b) & m
    t1 = (t0 + ci) & m
    # exact carry: overflow of a+b, or overflow of adding the carry-in
    co = (t0 < a) | (t1 < t0)
    return t1, co


def sbb_word(a, b, bi, width=WORD_BITS):
    """Subtract with borrow. Returns ``(diff, borrow_out)``."""
    m = _mask(width)
    t0 = (a - b) & m
    t1 = (t0 - bi) & m
    bo = (a < b) | (t0 < bi)
    return t1, bo


def mul_wide_word(a, b, width=WORD_BITS):
    """Full ``width x width -> 2*width`` product as ``(hi, lo)``.

    Built from half-word products so no intermediate exceeds one word.
    """
    half = width // 2
    hm = (1 << half) - 1
    m = _mask(width)
    al, ah = a & hm, a >> half
    bl, bh = b & hm, b >> half
    ll = al * bl
    lh = al * bh
    hl = ah * bl
    hh = ah * bh
    mid = (ll >> half) + (lh & hm) + (hl & hm)
    lo = ((ll & hm) | ((mid & hm) << half)) & m
    hi = (hh + (lh >> half) + (hl >> half) + (mid >> half)) & m
    return hi, lo


def dw_add(a: DWord, b: DWord, width=WORD_BITS):
    lo, c = adc_word(a.lo, b.lo, 0, width)
    hi, co = adc_word(a.hi, b.hi, c, width)
    return DWord(hi, lo), co


def dw_sub(a: DWord, b: DWord, width=WORD_BITS):
    lo, br = sbb_word(a.lo, b.lo, 0, width)
    hi, bo = sbb_word(a.hi, b.hi, br, width)
    return DWord(hi, lo), bo


def dw_mul_schoolbook(a: DWord, b: DWord, width=WORD_BITS) -> tuple:
    """256-bit product from four word multiplications, least significant word first."""
    m = _mask(width)
    ll_hi, ll_lo = mul_wide_word(a.lo, b.lo, width)
    lh_hi, lh_lo = mul_wide_word(a.lo, b.hi, width)
    hl_hi, hl_lo = mul_wide_word(a.hi, b.lo, width)
    hh_hi, hh_lo = mul_wide_word(a.hi, b.hi, width)

    w1, c1 = adc_word(ll_hi, lh_lo, 0, width)
    w1, c2 = adc_word(w1, hl_lo, 0, width)
    w2, c3 = adc_word(hh_lo, lh_hi, c1, width)
    w2, c4 = adc_word(w2, hl_hi, c2, width)
    w3 = (hh_hi + c3 + c4) & m
    return (ll_lo, w1, w2, w3)


def dw_mul_karatsuba(a: DWord, b: DWord, width=WORD_BITS) -> tuple:
    """256-bit product from three word multiplications.

    The sums ``hi+lo`` may need ``width+1`` bits; their carries are kept as
    separate bits and the cross terms they induce are added back in.
    """
    m = _mask(width)
    hh_hi, hh_lo = mul_wide_word(a.hi, b.hi, width)
    ll_hi, ll_lo = mul_wide_word(a.lo, b.lo, width)
    sa, ca = adc_word(a.hi, a.lo, 0, width)
    sb, cb = adc_word(b.hi, b.lo, 0, width)
    pm_hi, pm_lo = mul_wide_word(sa, sb, width)

    # (sa + ca*2^w)(sb + cb*2^w) as three words m0, m1, m2
    m1, c1 = adc_word(pm_hi, ca * sb, 0, width)
    m1, c2 = adc_word(m1, cb * sa, 0, width)
    # `pm_hi & 0` gives a word-typed zero; bool + bool would be a logical or on arrays
    m2 = (pm_hi & 0) + c1 + c2 + (ca & cb)

    # middle = product_of_sums - hh - ll
    m0, br = sbb_word(pm_lo, hh_lo, 0, width)
    m1, br = sbb_word(m1, hh_hi, br, width)
    m2 = (m2 - br) & m
    m0, br = sbb_word(m0, ll_lo, 0, width)
    m1, br = sbb_word(m1, ll_hi, br, width)
    m2 = (m2 - br) & m

    w1, c = adc_word(ll_hi, m0, 0, width)
    w2, c = adc_word(hh_lo, m1, c, width)
    w3 = (hh_hi + m2 + c) & m
    return (ll_lo, w1, w2, w3)


def mul_words(a: tuple, b: tuple, width=WORD_BITS) -> tuple:
    """Exact product of two little-endian word sequences."""
    n = len(a)
    r = [0] * (n + len(b))
    for j, bj in enumerate(b):
        carry = 0
        for i, ai in enumerate(a):
            hi, lo = mul_wide_word(ai, bj, width)
            s, c1 = adc_word(r[i + j], lo, 0, width)
            s, c2 = adc_word(s, carry, 0, width)
            r[i + j] = s
            # hi <= 2^w - 2, so adding two carry bits cannot wrap
            carry = hi + c1 + c2
        r[n + j] = carry
    return tuple(r)


def wide_mul(a: tuple, b: DWord, width=WORD_BITS) -> tuple:
    """4-word by double-word product, returned as 6 words."""
    if len(a) != 4:
        raise ValueError("wide_mul expects a 4-word operand")
    return mul_words(tuple(a), (b.lo, b.hi), width)


def wide_shr(x: tuple, k: int, width=WORD_BITS) -> tuple:
    """``floor(x / 2**k)`` keeping the word count of ``x``."""
    n = len(x)
    if k < 0 or k > width * n:
        raise ValueError(f"shift {k} exceeds the {width * n}-bit buffer")
    m = _mask(width)
    off, s = divmod(k, width)
    out = []
    for i in range(n):
        src = i + off
        w = x[src] >> s if src < n else 0
        if s and src + 1 < n:
            w = w | ((x[src + 1] << (width - s)) & m)
        out.append(w)
    return tuple(out)


def wide_sub(a: tuple, b: tuple, width=WORD_BITS):
    """Multi-word ``a - b`` of equal length; returns ``(words, borrow_out)``."""
    out = []
    br = 0
    for x, y in zip(a, b):
        d, br = sbb_word(x, y, br, width)
        out.append(d)
    return tuple(out), br
