"""Scalar double-word modular arithmetic with Barrett multiplication."""

from __future__ import annotations

from dataclasses import dataclass, field

from .words import (
    DWord,
    dw_add,
    dw_mul_karatsuba,
    dw_mul_schoolbook,
    dw_sub,
    wide_mul,
    wide_shr,
    wide_sub,
)

MAX_MODULUS_BITS = 124
ALGORITHMS = ("schoolbook", "karatsuba")

_MULTIPLIERS = {"schoolbook": dw_mul_schoolbook, "karatsuba": dw_mul_karatsuba}


class ModulusError(ValueError):
    pass


@dataclass(frozen=True)
class Modulus:
    """Modulus ``q`` with its Barrett constants ``mu = floor(2**k / q)``, ``k = 2*bitlen(q)``."""

    q: int
    bitlen: int = field(init=False)
    k: int = field(init=False)
    mu: int = field(init=False)

    def __post_init__(self):
        q = int(self.q)
        if q < 2:
            raise ModulusError(f"modulus must be at least 2, got {q}")
        if q.bit_length() > MAX_MODULUS_BITS:
            raise ModulusError(
                f"modulus has {q.bit_length()} bits; Barrett reduction on double-words "
                f"needs at most {MAX_MODULUS_BITS}"
            )
        bitlen = q.bit_length()
        k = 2 * bitlen
        mu = (1 << k) // q
        assert mu <= 1 << (bitlen + 1)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "bitlen", bitlen)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "mu", mu)

    @property
    def q_dw(self) -> DWord:
        return DWord.from_int(self.q)

    @property
    def mu_dw(self) -> DWord:
        return DWord.from_int(self.mu)

    def residue(self, x: int) -> DWord:
        """Wrap an already reduced integer; rejects values outside ``[0, q)``."""
        if not 0 <= x < self.q:
            raise ValueError(f"{x} is not a residue mod {self.q}")
        return DWord.from_int(x)

    def reduce_small(self, x: int) -> DWord:
        """Reduce ``x < 2q`` with one conditional subtraction."""
        if not 0 <= x < 2 * self.q:
            raise ValueError(f"{x} is outside [0, 2q)")
        return DWord.from_int(x - self.q if x >= self.q else x)


def modulus_new(q: int) -> Modulus:
    return Modulus(q)


def _geq(a: DWord, b: DWord) -> bool:
    return a.hi > b.hi or (a.hi == b.hi and a.lo >= b.lo)


def addmod(a: DWord, b: DWord, m: Modulus) -> DWord:
    q = m.q_dw
    t, carry = dw_add(a, b)
    if carry or _geq(t, q):
        t, _ = dw_sub(t, q)
    return t


def submod(a: DWord, b: DWord, m: Modulus) -> DWord:
    t, borrow = dw_sub(a, b)
    if borrow:
        t, _ = dw_add(t, m.q_dw)
    return t


def barrett_estimate(a: DWord, b: DWord, m: Modulus, algo: str = "schoolbook") -> DWord:
    """``ab - floor(ab*mu / 2**k) * q`` before any correction step.

    For residues this lies in ``[0, 2q)``.
    """
    mul = _MULTIPLIERS[algo]
    ab = mul(a, b)
    qhat = wide_shr(wide_mul(ab, m.mu_dw), m.k)
    assert not any(qhat[2:]), "Barrett quotient exceeds a double-word"
    qq = mul(DWord(qhat[1], qhat[0]), m.q_dw)
    t, borrow = wide_sub(ab, qq)
    assert not borrow and not t[2] and not t[3]
    return DWord(t[1], t[0])


def mulmod(a: DWord, b: DWord, m: Modulus, algo: str = "schoolbook") -> DWord:
    if algo not in _MULTIPLIERS:
        raise ValueError(f"unknown multiplication algorithm {algo!r}")
    t = barrett_estimate(a, b, m, algo)
    q = m.q_dw
    steps = 0
    while _geq(t, q):
        t, _ = dw_sub(t, q)
        steps += 1
    assert steps <= 2, "Barrett correction exceeded two subtractions"
    return t
