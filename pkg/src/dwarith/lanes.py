"""Lane-parallel double-word modular arithmetic in split hi/lo layout.

Vectors are numpy ``uint64`` arrays whose length is a multiple of the
backend's lane count; each run of ``lanes`` elements is one vector register.
Masks are numpy ``bool`` arrays of the same length.
"""

from __future__ import annotations

import copy
import os
from typing import NamedTuple

import numpy as np

from . import modular, simd
from .words import DWord, WORD_MASK, adc_word

LANE_COUNTS = (2, 4, 8, 16)
BACKENDS = ("portable", "native-256", "native-512", "mqx")


class BackendUnavailable(RuntimeError):
    pass


class DWordVec(NamedTuple):
    """Vector of double-words stored as separate high and low word vectors."""

    hi: np.ndarray
    lo: np.ndarray

    @classmethod
    def from_ints(cls, values) -> "DWordVec":
        values = [int(v) for v in values]
        if any(v < 0 or v >> 128 for v in values):
            raise ValueError("value does not fit in a double-word")
        hi = np.array([v >> 64 for v in values], dtype=np.uint64)
        lo = np.array([v & WORD_MASK for v in values], dtype=np.uint64)
        return cls(hi, lo)

    @classmethod
    def from_dwords(cls, dwords) -> "DWordVec":
        return cls(
            np.array([d.hi for d in dwords], dtype=np.uint64),
            np.array([d.lo for d in dwords], dtype=np.uint64),
        )

    @classmethod
    def zeros(cls, n: int) -> "DWordVec":
        return cls(np.zeros(n, dtype=np.uint64), np.zeros(n, dtype=np.uint64))

    @classmethod
    def full(cls, n: int, value: int) -> "DWordVec":
        return cls(np.full(n, value >> 64, dtype=np.uint64), np.full(n, value & WORD_MASK, dtype=np.uint64))

    @property
    def size(self) -> int:
        return len(self.lo)

    def to_ints(self) -> list:
        return [(int(h) << 64) | int(l) for h, l in zip(self.hi, self.lo)]

    def to_dwords(self) -> list:
        return [DWord(int(h), int(l)) for h, l in zip(self.hi, self.lo)]

    def take(self, index) -> "DWordVec":
        return DWordVec(self.hi[index], self.lo[index])

    def equals(self, other: "DWordVec") -> bool:
        return bool(np.array_equal(self.hi, other.hi) and np.array_equal(self.lo, other.lo))


def cpu_flags() -> set:
    """CPU feature flags of the host; ``DWARITH_CPU_FLAGS`` overrides detection."""
    override = os.environ.get("DWARITH_CPU_FLAGS")
    if override is not None:
        return set(override.replace(",", " ").split())
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("flags"):
                    return set(line.split(":", 1)[1].split())
    except OSError:
        pass
    return set()


class Backend:
    """Common contract for every execution backend."""

    name = "abstract"
    lanes = 8
    representative = True

    def __init__(self, trace: simd.Trace | None = None):
        self.trace = trace

    def traced(self, trace: simd.Trace | None = None) -> "Backend":
        """Copy of this backend that records into ``trace`` (a fresh one if omitted)."""
        other = copy.copy(self)
        other.trace = trace if trace is not None else simd.Trace()
        return other

    def _check(self, *vecs):
        for v in vecs:
            if len(v) % self.lanes:
                raise ValueError(f"vector length {len(v)} is not a multiple of {self.lanes} lanes")

    def count_butterflies(self, n: int) -> None:
        if self.trace is not None:
            self.trace.butterflies += n

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} lanes={self.lanes}>"


class PortableBackend(Backend):
    """Reference backend: a per-lane loop over the scalar operations."""

    name = "portable"

    def __init__(self, lanes: int = 8, trace=None):
        if lanes not in LANE_COUNTS:
            raise ValueError(f"lane count must be one of {LANE_COUNTS}")
        super().__init__(trace)
        self.lanes = lanes

    @staticmethod
    def _words(values):
        return np.array(values, dtype=np.uint64)

    def v_add(self, a, b):
        self._check(a, b)
        return self._words([adc_word(int(x), int(y), 0)[0] for x, y in zip(a, b)])

    def v_cmp(self, a, b, rel):
        self._check(a, b)
        ops = {simd.LT: int.__lt__, simd.LE: int.__le__, simd.EQ: int.__eq__}
        op = ops[rel]
        return np.array([op(int(x), int(y)) for x, y in zip(a, b)], dtype=bool)

    def v_blend(self, mask, a, b):
        self._check(a, b)
        return self._words([int(y) if k else int(x) for k, x, y in zip(mask, a, b)])

    def v_unpack_lo(self, a, b):
        self._check(a, b)
        out = []
        for i in range(0, len(a), 2):
            out += [int(a[i]), int(b[i])]
        return self._words(out)

    def v_unpack_hi(self, a, b):
        self._check(a, b)
        out = []
        for i in range(0, len(a), 2):
            out += [int(a[i + 1]), int(b[i + 1])]
        return self._words(out)

    def v_permute2(self, idx, a, b):
        w = len(idx)
        _check_permute(idx)
        out = []
        for base in range(0, len(a), w):
            both = [int(v) for v in a[base:base + w]] + [int(v) for v in b[base:base + w]]
            out += [both[int(i)] for i in idx]
        return self._words(out)

    def _lanewise(self, op, a, b, *args):
        self._check(a.lo, b.lo)
        out = [op(x, y, *args) for x, y in zip(a.to_dwords(), b.to_dwords())]
        return DWordVec.from_dwords(out)

    def v_addmod(self, a, b, m):
        return self._lanewise(modular.addmod, a, b, m)

    def v_submod(self, a, b, m):
        return self._lanewise(modular.submod, a, b, m)

    def v_mulmod(self, a, b, m, algo="schoolbook"):
        return self._lanewise(modular.mulmod, a, b, m, algo)


def _check_permute(idx):
    w = len(idx)
    bad = [int(i) for i in idx if not 0 <= int(i) < 2 * w]
    if bad:
        raise ValueError(f"permute index {bad[0]} out of range for {w} lanes")


class NativeBackend(Backend):
    """Vector backend driving an emulated ISA through its intrinsic sequences."""

    isa_class = simd.Avx512Isa
    feature = "avx512f"

    def __init__(self, trace=None, substitute=(), guard=False):
        super().__init__(trace)
        self.substitute = tuple(substitute)
        self.guard = guard

    def isa(self):
        return self.isa_class(self.trace, self.substitute, self.guard)

    def v_add(self, a, b):
        self._check(a, b)
        return self.isa().add(a, b)

    def v_cmp(self, a, b, rel):
        self._check(a, b)
        return self.isa().cmp(a, b, rel)

    def v_blend(self, mask, a, b):
        self._check(a, b)
        return self.isa().blend(mask, a, b)

    def v_unpack_lo(self, a, b):
        self._check(a, b)
        return self.isa().unpacklo(a, b)

    def v_unpack_hi(self, a, b):
        self._check(a, b)
        return self.isa().unpackhi(a, b)

    def v_permute2(self, idx, a, b):
        _check_permute(idx)
        return self.isa().permutex2var(np.asarray(idx, dtype=np.intp), a, b)

    def _modulus_words(self, m, like):
        return np.full_like(like, m.q >> 64), np.full_like(like, m.q & WORD_MASK)

    def v_addmod(self, a, b, m):
        self._check(a.lo, b.lo)
        mh, ml = self._modulus_words(m, a.lo)
        return DWordVec(*simd.addmod128(self.isa(), a.hi, a.lo, b.hi, b.lo, mh, ml))

    def v_submod(self, a, b, m):
        self._check(a.lo, b.lo)
        mh, ml = self._modulus_words(m, a.lo)
        return DWordVec(*simd.submod128(self.isa(), a.hi, a.lo, b.hi, b.lo, mh, ml))

    def v_mulmod(self, a, b, m, algo="schoolbook"):
        self._check(a.lo, b.lo)
        return DWordVec(*simd.mulmod128(self.isa(), a.hi, a.lo, b.hi, b.lo, m, algo))


class Native512Backend(NativeBackend):
    name = "native-512"
    lanes = 8
    isa_class = simd.Avx512Isa
    feature = "avx512f"


class Native256Backend(NativeBackend):
    name = "native-256"
    lanes = 4
    isa_class = simd.Avx2Isa
    feature = "avx2"


_NATIVE = {"native-256": Native256Backend, "native-512": Native512Backend}


def backend_select(name: str, *, lanes: int | None = None, flags: set | None = None, **options) -> Backend:
    """Resolve a backend by name.

    ``flags`` defaults to the host CPU features.  Extra keyword options are
    passed to the MQX backend (``mode``, ``variant``, ``guard``).
    """
    if name == "portable":
        return PortableBackend(lanes or 8)
    if name in _NATIVE:
        cls = _NATIVE[name]
        flags = cpu_flags() if flags is None else flags
        if cls.feature not in flags:
            raise BackendUnavailable(f"backend {name} needs CPU feature {cls.feature}, which this host lacks")
        return cls(**options)
    if name == "mqx":
        from .mqx import MqxBackend

        return MqxBackend(flags=flags, **options)
    raise BackendUnavailable(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")


def available_backends(flags: set | None = None) -> list:
    flags = cpu_flags() if flags is None else flags
    names = ["portable"]
    names += [n for n, cls in _NATIVE.items() if cls.feature in flags]
    return names + ["mqx"]


def default_backend() -> Backend:
    """Fastest backend the host supports."""
    for name in ("native-512", "native-256"):
        try:
            return backend_select(name)
        except BackendUnavailable:
            pass
    return PortableBackend()
