"""Polynomial kernels over residue vectors: point-wise BLAS operations,
schoolbook multiplication and a constant-geometry (Pease) NTT.

Polynomials are :class:`DWordVec` coefficient vectors.  Every kernel runs
on any backend from :mod:`dwarith.lanes`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .lanes import Backend, DWordVec, default_backend
from .modular import Modulus
from .primes import find_root_of_unity


class SizeError(ValueError):
    pass


def polynomial(values, m: Modulus) -> DWordVec:
    """Coefficient vector from integers, rejecting non-residues."""
    values = [int(v) for v in values]
    for i, v in enumerate(values):
        if not 0 <= v < m.q:
            raise ValueError(f"coefficient {i} = {v} is not a residue mod {m.q}")
    return DWordVec.from_ints(values)


def _pad(x: DWordVec, lanes: int) -> DWordVec:
    extra = -x.size % lanes
    if not extra:
        return x
    z = np.zeros(extra, dtype=np.uint64)
    return DWordVec(np.concatenate([x.hi, z]), np.concatenate([x.lo, z]))


def _check_pair(x: DWordVec, y: DWordVec, lanes: int):
    if x.size != y.size:
        raise SizeError(f"length mismatch: {x.size} vs {y.size}")
    if x.size % lanes:
        raise SizeError(f"length {x.size} is not a multiple of {lanes} lanes")


# ---------------------------------------------------------------------------
# point-wise kernels
# ---------------------------------------------------------------------------


def vadd(x: DWordVec, y: DWordVec, m: Modulus, backend: Backend | None = None) -> DWordVec:
    backend = backend or default_backend()
    _check_pair(x, y, backend.lanes)
    return backend.v_addmod(x, y, m)


def vsub(x: DWordVec, y: DWordVec, m: Modulus, backend: Backend | None = None) -> DWordVec:
    backend = backend or default_backend()
    _check_pair(x, y, backend.lanes)
    return backend.v_submod(x, y, m)


def vpmul(x: DWordVec, y: DWordVec, m: Modulus, backend: Backend | None = None, algo="schoolbook") -> DWordVec:
    backend = backend or default_backend()
    _check_pair(x, y, backend.lanes)
    return backend.v_mulmod(x, y, m, algo)


def axpy(alpha: int, x: DWordVec, y: DWordVec, m: Modulus, backend: Backend | None = None, algo="schoolbook") -> DWordVec:
    """``alpha * x + y`` element-wise mod q."""
    backend = backend or default_backend()
    _check_pair(x, y, backend.lanes)
    m.residue(alpha)
    ax = backend.v_mulmod(DWordVec.full(x.size, alpha), x, m, algo)
    return backend.v_addmod(ax, y, m)


def poly_mul_schoolbook(f: DWordVec, g: DWordVec, m: Modulus, backend: Backend | None = None, algo="schoolbook") -> DWordVec:
    """Full product of two polynomials (``len(f) + len(g) - 1`` coefficients).

    Each coefficient of ``f`` scales all of ``g`` in one vector multiply and
    the row is accumulated into the running product at its offset.
    """
    backend = backend or default_backend()
    nf, ng = f.size, g.size
    if not nf or not ng:
        return DWordVec.zeros(0)
    gp = _pad(g, backend.lanes)
    width = gp.size
    acc = DWordVec.zeros(nf + width)
    for i, (h, l) in enumerate(zip(f.hi, f.lo)):
        coef = DWordVec(np.full(width, h, dtype=np.uint64), np.full(width, l, dtype=np.uint64))
        row = backend.v_mulmod(coef, gp, m, algo)
        window = acc.take(slice(i, i + width))
        s = backend.v_addmod(window, row, m)
        acc.hi[i:i + width] = s.hi
        acc.lo[i:i + width] = s.lo
    return acc.take(slice(0, nf + ng - 1))


def cyclic_fold(p: DWordVec, n: int, m: Modulus, backend: Backend | None = None) -> DWordVec:
    """Reduce a coefficient vector modulo ``x**n - 1``."""
    backend = backend or default_backend()
    out = _pad(p.take(slice(0, n)), n)
    for start in range(n, p.size, n):
        chunk = _pad(p.take(slice(start, start + n)), n)
        out = backend.v_addmod(_pad(out, backend.lanes), _pad(chunk, backend.lanes), m).take(slice(0, n))
    return out


# ---------------------------------------------------------------------------
# NTT
# ---------------------------------------------------------------------------


def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def interleave_indices(block: int) -> tuple:
    """Two-source permute indices that interleave ``a`` and ``b`` blocks.

    The first index vector yields ``a0 b0 a1 b1 ...`` for the lower half of
    the block, the second does the same for the upper half.
    """
    if block == 1:
        return np.array([0], dtype=np.intp), np.array([1], dtype=np.intp)
    lo = [i // 2 + (block if i % 2 else 0) for i in range(block)]
    hi = [block // 2 + x for x in lo]
    return np.array(lo, dtype=np.intp), np.array(hi, dtype=np.intp)


def _stage_twiddles(omega: int, n: int, q: int) -> tuple:
    """Per-stage twiddle vectors: stage ``s`` uses ``omega**((j >> s) << s)`` for butterfly ``j``."""
    h = n // 2
    powers = [1] * max(h, 1)
    for j in range(1, h):
        powers[j] = powers[j - 1] * omega % q
    stages = []
    for s in range(n.bit_length() - 1):
        mask = ~((1 << s) - 1)
        stages.append(DWordVec.from_ints(powers[j & mask] for j in range(h)))
    return tuple(stages)


@dataclass(frozen=True)
class NttPlan:
    """Precomputed constants for an ``n``-point transform over ``m``."""

    n: int
    m: Modulus
    omega: int
    omega_inv: int
    n_inv: int
    twiddles: tuple = field(repr=False)
    inv_twiddles: tuple = field(repr=False)
    bitrev: np.ndarray = field(repr=False)

    @property
    def stages(self) -> int:
        return self.n.bit_length() - 1

    @property
    def butterflies(self) -> int:
        return self.n // 2 * self.stages

    def block(self, lanes: int) -> int:
        return max(1, min(lanes, self.n // 2))

    def permutes(self, lanes: int) -> tuple:
        return interleave_indices(self.block(lanes))

    def with_corrupted_twiddle(self, stage: int, index: int, delta: int = 1) -> "NttPlan":
        """Copy of the plan with one forward twiddle altered (fault injection)."""
        tw = self.twiddles[stage]
        vals = tw.to_ints()
        vals[index] = (vals[index] + delta) % self.m.q
        twiddles = list(self.twiddles)
        twiddles[stage] = DWordVec.from_ints(vals)
        return replace(self, twiddles=tuple(twiddles))


def plan_new(n: int, m: Modulus, omega: int | None = None) -> NttPlan:
    if n < 2 or n & (n - 1):
        raise SizeError(f"transform size must be a power of two >= 2, got {n}")
    q = m.q
    if omega is None:
        omega = find_root_of_unity(q, n)
    elif pow(omega, n, q) != 1 or pow(omega, n // 2, q) == 1:
        raise ValueError(f"{omega} is not a primitive {n}-th root of unity mod {q}")
    omega_inv = pow(omega, -1, q)
    return NttPlan(
        n=n,
        m=m,
        omega=omega,
        omega_inv=omega_inv,
        n_inv=pow(n, -1, q),
        twiddles=_stage_twiddles(omega, n, q),
        inv_twiddles=_stage_twiddles(omega_inv, n, q),
        bitrev=_bitrev(n),
    )


def _pease(x: DWordVec, plan: NttPlan, twiddles, backend: Backend, algo, snapshots):
    n, m, h = plan.n, plan.m, plan.n // 2
    lanes = backend.lanes
    block = plan.block(lanes)
    idx_lo, idx_hi = plan.permutes(lanes)
    for s in range(plan.stages):
        u = _pad(x.take(slice(0, h)), lanes)
        v = _pad(x.take(slice(h, n)), lanes)
        tw = _pad(twiddles[s], lanes)
        a = backend.v_addmod(u, v, m)
        d = backend.v_submod(u, v, m)
        b = backend.v_mulmod(d, tw, m, algo)
        backend.count_butterflies(h)
        a, b = a.take(slice(0, h)), b.take(slice(0, h))
        # out[2j] = a[j], out[2j+1] = b[j]: each block pair becomes two output blocks
        words = []
        for wa, wb in ((a.hi, b.hi), (a.lo, b.lo)):
            lo = backend.v_permute2(idx_lo, wa, wb).reshape(-1, block)
            hi = backend.v_permute2(idx_hi, wa, wb).reshape(-1, block)
            words.append(np.concatenate([lo, hi], axis=1).reshape(-1))
        x = DWordVec(*words)
        if snapshots is not None:
            snapshots.append(x)
    return x.take(plan.bitrev)


def _check_size(x: DWordVec, plan: NttPlan):
    if x.size != plan.n:
        raise SizeError(f"input has {x.size} coefficients but the plan is for n = {plan.n}")


def ntt_forward(x: DWordVec, plan: NttPlan, backend: Backend | None = None, algo="schoolbook", snapshots=None) -> DWordVec:
    """``y_k = sum_j x_j * omega**(j*k) mod q`` in natural order.

    If ``snapshots`` is a list, the state after every stage (before the final
    reordering) is appended to it.
    """
    backend = backend or default_backend()
    _check_size(x, plan)
    return _pease(x, plan, plan.twiddles, backend, algo, snapshots)


def ntt_inverse(y: DWordVec, plan: NttPlan, backend: Backend | None = None, algo="schoolbook") -> DWordVec:
    backend = backend or default_backend()
    _check_size(y, plan)
    x = _pease(y, plan, plan.inv_twiddles, backend, algo, None)
    xp = _pad(x, backend.lanes)
    scale = DWordVec.full(xp.size, plan.n_inv)
    return backend.v_mulmod(xp, scale, plan.m, algo).take(slice(0, plan.n))


def ntt_naive(x, omega: int, q: int) -> list:
    """Direct ``O(n^2)`` evaluation, used as an oracle."""
    x = [int(v) for v in x]
    n = len(x)
    return [sum(xj * pow(omega, j * k, q) for j, xj in enumerate(x)) % q for k in range(n)]


def cyclic_convolution_check(f: DWordVec, g: DWordVec, plan: NttPlan, backend: Backend | None = None) -> bool:
    """True if NTT(f) * NTT(g) equals the NTT of the cyclic product of f and g."""
    backend = backend or default_backend()
    _check_size(f, plan)
    _check_size(g, plan)
    m = plan.m
    prod = poly_mul_schoolbook(f, g, m, backend)
    folded = cyclic_fold(prod, plan.n, m, backend)
    lhs = backend.v_mulmod(
        _pad(ntt_forward(f, plan, backend), backend.lanes),
        _pad(ntt_forward(g, plan, backend), backend.lanes),
        m,
    ).take(slice(0, plan.n))
    rhs = ntt_forward(folded, plan, backend)
    return lhs.equals(rhs)
