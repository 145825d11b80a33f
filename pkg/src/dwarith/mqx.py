"""Emulation of the multi-word vector extension: widening multiply, add-with-carry,
subtract-with-borrow, and the ablation variants built from them.

In ``functional`` mode every extension instruction is emulated exactly with
the scalar word routines applied lane-wise.  In ``pisa`` mode each one is
replaced by its closest existing instruction (multiply-low for the widening
multiply, masked add/sub for add-with-carry/subtract-with-borrow); the
instruction stream keeps its shape but results are meaningless.
"""

from __future__ import annotations

import numpy as np

from . import simd
from .lanes import BackendUnavailable, NativeBackend, cpu_flags
from .words import adc_word, mul_wide_word, sbb_word

MODES = ("functional", "pisa")
VARIANTS = ("base", "m", "c", "mc", "mhc", "mcp")

# which instruction groups each variant adds on top of the 512-bit base ISA
_FEATURES = {
    "base": frozenset(),
    "m": frozenset({"mul"}),
    "c": frozenset({"carry"}),
    "mc": frozenset({"mul", "carry"}),
    "mhc": frozenset({"mulhi", "carry"}),
    "mcp": frozenset({"mul", "carry", "pred"}),
}

NON_REPRESENTATIVE = "portable-emulated, non-representative"


class MqxIsa(simd.Avx512Isa):
    name = "mqx"

    def __init__(self, trace=None, substitute=(), guard=False, *, mode="functional", variant="mc"):
        super().__init__(trace, substitute, guard)
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if variant not in _FEATURES:
            raise ValueError(f"unknown variant {variant!r}")
        self.mode = mode
        self.variant = variant
        feats = _FEATURES[variant]
        self.has_mul = "mul" in feats
        self.has_mulhi = "mulhi" in feats
        self.has_carry = "carry" in feats
        self.has_pred = "pred" in feats

    @property
    def proxy(self) -> bool:
        return self.mode == "pisa"

    def _live(self, k):
        # conservative proxy: one extra mask op so the mask operand stays live
        if self.guard:
            return self.kor(k, k)
        return k

    # -- extension instructions -------------------------------------------
    def mqx_mul_wide(self, a, b):
        if self.proxy:
            self._rec("vpmullq[proxy:mqx.mul]", "mul")
            lo = a * b
            return lo, lo
        self._rec("mqx.mul", "mul")
        return mul_wide_word(a, b)

    def mqx_mulhi(self, a, b):
        if self.proxy:
            self._rec("vpmullq[proxy:mqx.mulhi]", "mul")
            return a * b
        self._rec("mqx.mulhi", "mul")
        return mul_wide_word(a, b)[0]

    def mqx_adc(self, a, b, ci=None):
        cin = np.zeros(a.shape, dtype=bool) if ci is None else ci
        if self.proxy:
            self._rec("vpaddq{k}[proxy:mqx.adc]", "add")
            return np.where(cin, a + b, a), self._live(cin)
        self._rec("mqx.adc", "add")
        return adc_word(a, b, cin)

    def mqx_sbb(self, a, b, bi=None):
        bin_ = np.zeros(a.shape, dtype=bool) if bi is None else bi
        if self.proxy:
            self._rec("vpsubq{k}[proxy:mqx.sbb]", "sub")
            return np.where(bin_, a - b, a), self._live(bin_)
        self._rec("mqx.sbb", "sub")
        return sbb_word(a, b, bin_)

    def mqx_adc_pred(self, a, b, ci, pred):
        """``pred ? a + b + ci : a`` with no carry out."""
        if self.proxy:
            self._rec("vpaddq{k}[proxy:mqx.adcp]", "add")
            self._live(ci)
            return np.where(pred, a + b, a)
        self._rec("mqx.adcp", "add")
        return np.where(pred, a + b + ci, a)

    def mqx_sbb_pred(self, a, b, bi, pred):
        if self.proxy:
            self._rec("vpsubq{k}[proxy:mqx.sbbp]", "sub")
            self._live(bi)
            return np.where(pred, a - b, a)
        self._rec("mqx.sbbp", "sub")
        return np.where(pred, a - b - bi, a)

    # -- routing of the generic helpers ------------------------------------
    def adc(self, a, b, ci=None):
        if self.has_carry:
            return self.mqx_adc(a, b, ci)
        return super().adc(a, b, ci)

    def sbb(self, a, b, bi=None):
        if self.has_carry:
            return self.mqx_sbb(a, b, bi)
        return super().sbb(a, b, bi)

    def adc_pred(self, a, b, ci, pred):
        if not self.has_pred:
            raise RuntimeError(f"variant {self.variant} has no predicated instructions")
        return self.mqx_adc_pred(a, b, ci, pred)

    def sbb_pred(self, a, b, bi, pred):
        if not self.has_pred:
            raise RuntimeError(f"variant {self.variant} has no predicated instructions")
        return self.mqx_sbb_pred(a, b, bi, pred)

    def mul_wide(self, a, b):
        if self.has_mul:
            return self.mqx_mul_wide(a, b)
        if self.has_mulhi:
            lo = self.mullo(a, b)
            return self.mqx_mulhi(a, b), lo
        return super().mul_wide(a, b)


class MqxBackend(NativeBackend):
    """Backend over the extension ISA (``--backend mqx``)."""

    name = "mqx"
    lanes = 8
    isa_class = MqxIsa
    feature = "avx512f"

    def __init__(self, mode="functional", variant="mc", guard=False, trace=None, flags=None):
        if mode not in MODES:
            raise BackendUnavailable(f"unknown MQX mode {mode!r}; choose from {', '.join(MODES)}")
        if variant not in VARIANTS:
            raise BackendUnavailable(f"unknown MQX variant {variant!r}; choose from {', '.join(VARIANTS)}")
        super().__init__(trace, (), guard)
        self.mode = mode
        self.variant = variant
        flags = cpu_flags() if flags is None else flags
        self.representative = self.feature in flags

    @property
    def authoritative(self) -> bool:
        """Only functional-mode results may be used for correctness checks."""
        return self.mode == "functional"

    @property
    def label(self) -> str:
        if not self.representative:
            return NON_REPRESENTATIVE
        return "proxy-timed" if self.mode == "pisa" else "functional-emulated"

    def isa(self):
        return MqxIsa(self.trace, (), self.guard, mode=self.mode, variant=self.variant)

    def __repr__(self):
        return f"<MqxBackend mode={self.mode} variant={self.variant}>"


def addmod128_listing_trace(variant="mc", mode="functional") -> simd.Trace:
    """Trace of one double-word modular addition on a single 8-lane register."""
    trace = simd.Trace()
    isa = MqxIsa(trace, mode=mode, variant=variant)
    z = np.zeros(isa.lanes, dtype=np.uint64)
    simd.addmod128(isa, z, z, z, z, z + 1, z)
    return trace


def avx512_addmod_trace() -> simd.Trace:
    trace = simd.Trace()
    isa = simd.Avx512Isa(trace)
    z = np.zeros(isa.lanes, dtype=np.uint64)
    simd.addmod128(isa, z, z, z, z, z + 1, z)
    return trace


def mqx_addmod128(a, b, m, mode="functional", variant="mc", trace=None):
    """Lane-wise ``(a + b) mod q`` with the extension's carry instructions."""
    return MqxBackend(mode, variant, trace=trace).v_addmod(a, b, m)


def mqx_submod128(a, b, m, mode="functional", variant="mc", trace=None):
    return MqxBackend(mode, variant, trace=trace).v_submod(a, b, m)


def mqx_mulmod128(a, b, m, mode="functional", variant="mc", algo="schoolbook", trace=None):
    return MqxBackend(mode, variant, trace=trace).v_mulmod(a, b, m, algo)
