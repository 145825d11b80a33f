"""Emulated 64-bit-lane vector ISAs and the double-word modular sequences built on them.

Each ISA object exposes intrinsic-level primitives over numpy ``uint64``
arrays.  An array of any multiple of the lane count is treated as a stream
of independent vector registers.  Every primitive call is appended to an
optional :class:`Trace`, so instruction counts and op classes can be
checked directly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

U64 = np.uint64
M32 = U64(0xFFFFFFFF)
SIGN = U64(1 << 63)

LT, LE, EQ = "LT", "LE", "EQ"

# op classes used for trace comparisons; "mask" ops act on mask registers only
OP_CLASSES = ("add", "sub", "mul", "compare", "blend", "logic", "permute", "mask")


@dataclass
class Trace:
    """Per-invocation record of emitted ops."""

    ops: list = field(default_factory=list)
    butterflies: int = 0

    def record(self, name: str, cls: str) -> None:
        self.ops.append((name, cls))

    def classes(self) -> Counter:
        return Counter(cls for _, cls in self.ops)

    def names(self) -> Counter:
        return Counter(name for name, _ in self.ops)

    @property
    def lane_ops(self) -> int:
        """Ops that read or write vector registers (mask-register logic excluded)."""
        return sum(1 for _, cls in self.ops if cls != "mask")

    def __len__(self):
        return len(self.ops)


def _zeros_like(a):
    return np.zeros_like(a, dtype=U64)


class Avx512Isa:
    """512-bit class ISA: 8 lanes, unsigned compares into mask registers.

    ``substitute`` names primitives to replace by their structurally closest
    existing instruction (used to validate proxy timing); results are then
    not meaningful.  ``guard`` adds one mask op per substituted call to keep
    the mask operand live.
    """

    name = "avx512"
    lanes = 8
    has_carry = False
    has_pred = False

    def __init__(self, trace: Trace | None = None, substitute=(), guard: bool = False):
        self.trace = trace
        self.substitute = frozenset(substitute)
        self.guard = guard

    def _rec(self, name, cls):
        if self.trace is not None:
            self.trace.record(name, cls)

    # -- plain arithmetic -------------------------------------------------
    def add(self, a, b):
        self._rec("vpaddq", "add")
        return a + b

    def sub(self, a, b):
        self._rec("vpsubq", "sub")
        return a - b

    def mask_add(self, src, k, a, b):
        if "mask_add" in self.substitute:
            self._rec("vpaddq[proxy:mask_add]", "add")
            if self.guard:
                self.kor(k, k)
            return a + b
        self._rec("vpaddq{k}", "add")
        return np.where(k, a + b, src)

    def mask_sub(self, src, k, a, b):
        if "mask_sub" in self.substitute:
            self._rec("vpsubq[proxy:mask_sub]", "sub")
            if self.guard:
                self.kor(k, k)
            return a - b
        self._rec("vpsubq{k}", "sub")
        return np.where(k, a - b, src)

    def mullo(self, a, b):
        self._rec("vpmullq", "mul")
        return a * b

    def mul_epu32(self, a, b):
        if "mul_epu32" in self.substitute:
            # 32-bit-lane multiply-low: two independent low products per 64-bit lane
            self._rec("vpmulld[proxy:mul_epu32]", "mul")
            lo = ((a & M32) * (b & M32)) & M32
            hi = (((a >> U64(32)) * (b >> U64(32))) & M32) << U64(32)
            return lo | hi
        self._rec("vpmuludq", "mul")
        return (a & M32) * (b & M32)

    def srli(self, a, n):
        self._rec("vpsrlq", "logic")
        return a >> U64(n)

    def slli(self, a, n):
        self._rec("vpsllq", "logic")
        return a << U64(n)

    def and_(self, a, b):
        self._rec("vpandq", "logic")
        return a & b

    def or_(self, a, b):
        self._rec("vporq", "logic")
        return a | b

    # -- compares and masks ----------------------------------------------
    def cmp(self, a, b, rel):
        """Unsigned lane compare into a mask."""
        self._rec(f"vpcmpuq.{rel}", "compare")
        if rel == LT:
            return a < b
        if rel == LE:
            return a <= b
        if rel == EQ:
            return a == b
        raise ValueError(f"unknown relation {rel!r}")

    def cmp_signed(self, a, b, rel):
        self._rec(f"vpcmpq.{rel}", "compare")
        sa, sb = a.view(np.int64), b.view(np.int64)
        if rel == LT:
            return sa < sb
        if rel == LE:
            return sa <= sb
        if rel == EQ:
            return sa == sb
        raise ValueError(f"unknown relation {rel!r}")

    def kor(self, a, b):
        self._rec("korb", "mask")
        return a | b

    def kand(self, a, b):
        self._rec("kandb", "mask")
        return a & b

    def knot(self, a):
        self._rec("knotb", "mask")
        return ~a

    def blend(self, k, a, b):
        """Lane i takes ``b[i]`` where the mask is set, else ``a[i]``."""
        self._rec("vpblendmq", "blend")
        return np.where(k, b, a)

    # -- data movement ---------------------------------------------------
    def unpacklo(self, a, b):
        self._rec("vpunpcklqdq", "permute")
        out = np.empty_like(a)
        out[0::2] = a[0::2]
        out[1::2] = b[0::2]
        return out

    def unpackhi(self, a, b):
        self._rec("vpunpckhqdq", "permute")
        out = np.empty_like(a)
        out[0::2] = a[1::2]
        out[1::2] = b[1::2]
        return out

    def permutex2var(self, idx, a, b):
        self._rec("vpermt2q", "permute")
        w = len(idx)
        both = np.concatenate([a.reshape(-1, w), b.reshape(-1, w)], axis=1)
        return both[:, idx].reshape(-1)

    # -- multi-instruction helpers ---------------------------------------
    def adc(self, a, b, ci=None):
        """Add with carry built from existing instructions (the 6-instruction pattern)."""
        t0 = self.add(a, b)
        q0 = self.cmp(t0, a, LT)
        if ci is None:
            return t0, q0
        one = np.ones_like(a)
        t1 = self.mask_add(t0, ci, t0, one)
        q1 = self.cmp(t1, t0, LT)
        return t1, self.kor(q0, q1)

    def sbb(self, a, b, bi=None):
        t0 = self.sub(a, b)
        q0 = self.cmp(a, b, LT)
        if bi is None:
            return t0, q0
        one = np.ones_like(a)
        t1 = self.mask_sub(t0, bi, t0, one)
        q1 = self.kand(self.cmp(t0, _zeros_like(t0), EQ), bi)
        return t1, self.kor(q0, q1)

    def mul_wide(self, a, b):
        """64x64->128 lane multiply from four 32-bit widening multiplies."""
        ah = self.srli(a, 32)
        bh = self.srli(b, 32)
        ll = self.mul_epu32(a, b)
        lh = self.mul_epu32(a, bh)
        hl = self.mul_epu32(ah, b)
        hh = self.mul_epu32(ah, bh)
        mid = self.add(self.srli(ll, 32), self.and_(lh, M32))
        mid = self.add(mid, self.and_(hl, M32))
        lo = self.mullo(a, b)
        hi = self.add(hh, self.srli(lh, 32))
        hi = self.add(hi, self.srli(hl, 32))
        hi = self.add(hi, self.srli(mid, 32))
        return hi, lo

    def carry_to_word(self, c, like):
        z = _zeros_like(like)
        return self.mask_add(z, c, z, np.ones_like(like))

    def select_word(self, k, w):
        """``k ? w : 0`` lane-wise (zero-masking move)."""
        return self.blend(k, _zeros_like(w), w)


class Avx2Isa(Avx512Isa):
    """256-bit class ISA: 4 lanes, signed compares only, masks live in vectors.

    Unsigned compares are emulated by flipping the sign bit of both operands.
    """

    name = "avx2"
    lanes = 4

    def cmp(self, a, b, rel):
        self._rec("vpxor", "logic")
        self._rec("vpxor", "logic")
        sa = (a ^ SIGN).view(np.int64)
        sb = (b ^ SIGN).view(np.int64)
        if rel == LT:
            self._rec("vpcmpgtq", "compare")
            return sb > sa
        if rel == LE:
            self._rec("vpcmpgtq", "compare")
            self._rec("vpxor", "logic")
            return ~(sa > sb)
        if rel == EQ:
            self._rec("vpcmpeqq", "compare")
            return sa == sb
        raise ValueError(f"unknown relation {rel!r}")

    def mask_add(self, src, k, a, b):
        if "mask_add" in self.substitute:
            return super().mask_add(src, k, a, b)
        self._rec("vpand", "logic")
        self._rec("vpaddq", "add")
        return np.where(k, a + b, src)

    def mask_sub(self, src, k, a, b):
        if "mask_sub" in self.substitute:
            return super().mask_sub(src, k, a, b)
        self._rec("vpand", "logic")
        self._rec("vpsubq", "sub")
        return np.where(k, a - b, src)

    def mullo(self, a, b):
        # no 64-bit multiply-low: three 32-bit products and shifts
        ah = self.srli(a, 32)
        bh = self.srli(b, 32)
        ll = self.mul_epu32(a, b)
        cross = self.add(self.mul_epu32(a, bh), self.mul_epu32(ah, b))
        return self.add(ll, self.slli(cross, 32))

    def kor(self, a, b):
        self._rec("vpor", "logic")
        return a | b

    def kand(self, a, b):
        self._rec("vpand", "logic")
        return a & b

    def knot(self, a):
        self._rec("vpxor", "logic")
        return ~a

    def blend(self, k, a, b):
        self._rec("vpblendvb", "blend")
        return np.where(k, b, a)


# ---------------------------------------------------------------------------
# double-word modular sequences
# ---------------------------------------------------------------------------


def addmod128_avx512(isa, ah, al, bh, bl, mh, ml):
    """Mask-based double-word modular addition for ISAs without vector carries."""
    one = np.ones_like(al)
    t30 = isa.add(al, bl)
    q1 = isa.cmp(t30, al, LT)
    q2 = isa.cmp(t30, bl, LT)
    c1 = isa.kor(q1, q2)
    t28 = isa.add(ah, bh)
    t29 = isa.mask_add(t28, c1, t28, one)
    q3 = isa.cmp(t29, ah, LT)
    q4 = isa.cmp(t29, bh, LT)
    c2 = isa.kor(q3, q4)
    a31 = isa.cmp(mh, t29, LT)
    a35 = isa.cmp(mh, t29, EQ)
    a38 = isa.cmp(ml, t30, LE)
    a34 = isa.kand(a35, a38)
    i27 = isa.kor(a31, a34)
    i28 = isa.kor(c2, i27)
    d1 = isa.sub(t30, ml)
    b1 = isa.knot(a38)
    d2 = isa.sub(t29, mh)
    d3 = isa.mask_sub(d2, b1, d2, one)
    ch = isa.blend(i28, t29, d3)
    cl = isa.blend(i28, t30, d1)
    return ch, cl


def submod128_avx512(isa, ah, al, bh, bl, mh, ml):
    one = np.ones_like(al)
    dl = isa.sub(al, bl)
    b1 = isa.cmp(al, bl, LT)
    d0 = isa.sub(ah, bh)
    dh = isa.mask_sub(d0, b1, d0, one)
    lt_h = isa.cmp(ah, bh, LT)
    eq_h = isa.cmp(ah, bh, EQ)
    neg = isa.kor(lt_h, isa.kand(eq_h, b1))
    el = isa.add(dl, ml)
    c = isa.cmp(el, ml, LT)
    e0 = isa.add(dh, mh)
    eh = isa.mask_add(e0, c, e0, one)
    ch = isa.blend(neg, dh, eh)
    cl = isa.blend(neg, dl, el)
    return ch, cl


def addmod128_carry(isa, ah, al, bh, bl, mh, ml):
    """Double-word modular addition with vector add-with-carry / subtract-with-borrow.

    The keep-or-subtract decision comes from the borrow out of ``(a+b) - q``,
    which also covers lanes whose high word equals the modulus high word.
    """
    el, elc = isa.adc(al, bl)
    eh, ehc = isa.adc(ah, bh, elc)
    dl, clc = isa.sbb(el, ml)
    dh, bo = isa.sbb(eh, mh, clc)
    keep = isa.kand(bo, isa.knot(ehc))
    cl = isa.blend(keep, dl, el)
    ch = isa.blend(keep, dh, eh)
    return ch, cl


def submod128_carry(isa, ah, al, bh, bl, mh, ml):
    dl, b1 = isa.sbb(al, bl)
    dh, neg = isa.sbb(ah, bh, b1)
    el, c = isa.adc(dl, ml)
    cl = isa.blend(neg, dl, el)
    if isa.has_pred:
        ch = isa.adc_pred(dh, mh, c, neg)
    else:
        eh, _ = isa.adc(dh, mh, c)
        ch = isa.blend(neg, dh, eh)
    return ch, cl


def addmod128(isa, ah, al, bh, bl, mh, ml):
    if isa.has_carry:
        return addmod128_carry(isa, ah, al, bh, bl, mh, ml)
    return addmod128_avx512(isa, ah, al, bh, bl, mh, ml)


def submod128(isa, ah, al, bh, bl, mh, ml):
    if isa.has_carry:
        return submod128_carry(isa, ah, al, bh, bl, mh, ml)
    return submod128_avx512(isa, ah, al, bh, bl, mh, ml)


def mul_words(isa, a, b):
    """Exact lane-wise product of little-endian word tuples (operand scanning)."""
    n = len(a)
    z = _zeros_like(a[0])
    r = [z] * (n + len(b))
    for j, bj in enumerate(b):
        prods = [isa.mul_wide(ai, bj) for ai in a]
        c = None
        for i, (_, lo) in enumerate(prods):
            r[i + j], c = isa.adc(r[i + j], lo, c)
        r[n + j] = isa.carry_to_word(c, z)
        c = None
        for i, (hi, _) in enumerate(prods):
            r[i + j + 1], c = isa.adc(r[i + j + 1], hi, c)
    return tuple(r)


def mul_dw_karatsuba(isa, ah, al, bh, bl):
    """Lane-wise 128x128->256 product with three widening multiplies."""
    hh_hi, hh_lo = isa.mul_wide(ah, bh)
    ll_hi, ll_lo = isa.mul_wide(al, bl)
    sa, ca = isa.adc(ah, al)
    sb, cb = isa.adc(bh, bl)
    pm_hi, pm_lo = isa.mul_wide(sa, sb)

    m1, c1 = isa.adc(pm_hi, isa.select_word(ca, sb))
    m1, c2 = isa.adc(m1, isa.select_word(cb, sa))
    m2 = isa.carry_to_word(c1, pm_hi)
    one = np.ones_like(pm_hi)
    m2 = isa.mask_add(m2, c2, m2, one)
    m2 = isa.mask_add(m2, isa.kand(ca, cb), m2, one)

    m0, br = isa.sbb(pm_lo, hh_lo)
    m1, br = isa.sbb(m1, hh_hi, br)
    m2 = isa.mask_sub(m2, br, m2, one)
    m0, br = isa.sbb(m0, ll_lo)
    m1, br = isa.sbb(m1, ll_hi, br)
    m2 = isa.mask_sub(m2, br, m2, one)

    w1, c = isa.adc(ll_hi, m0)
    w2, c = isa.adc(hh_lo, m1, c)
    w3 = isa.add(hh_hi, m2)
    w3 = isa.mask_add(w3, c, w3, one)
    return (ll_lo, w1, w2, w3)


def shr_low2(isa, x, k):
    """Low two words of ``x >> k``."""
    off, s = divmod(k, 64)
    out = []
    for i in range(2):
        src = i + off
        w = isa.srli(x[src], s) if s else x[src]
        if s and src + 1 < len(x):
            w = isa.or_(w, isa.slli(x[src + 1], 64 - s))
        out.append(w)
    return out


def mulmod128(isa, ah, al, bh, bl, m, algo="schoolbook"):
    """Lane-wise Barrett multiplication; one correction suffices since ``k = 2*bitlen(q)``."""
    mh = np.full_like(al, m.q >> 64)
    ml = np.full_like(al, m.q & ((1 << 64) - 1))
    muh = np.full_like(al, m.mu >> 64)
    mul_ = np.full_like(al, m.mu & ((1 << 64) - 1))

    if algo == "schoolbook":
        ab = mul_words(isa, (al, ah), (bl, bh))
    elif algo == "karatsuba":
        ab = mul_dw_karatsuba(isa, ah, al, bh, bl)
    else:
        raise ValueError(f"unknown multiplication algorithm {algo!r}")

    abmu = mul_words(isa, ab, (mul_, muh))
    ql, qh = shr_low2(isa, abmu, m.k)

    # only the low 128 bits of qhat*q are needed since ab - qhat*q < 2q
    pq_hi, pq_lo = isa.mul_wide(ql, ml)
    pq_hi = isa.add(pq_hi, isa.mullo(ql, mh))
    pq_hi = isa.add(pq_hi, isa.mullo(qh, ml))
    tl, br = isa.sbb(ab[0], pq_lo)
    th, _ = isa.sbb(ab[1], pq_hi, br)

    dl, br = isa.sbb(tl, ml)
    dh, keep = isa.sbb(th, mh, br)
    return isa.blend(keep, dh, th), isa.blend(keep, dl, tl)
