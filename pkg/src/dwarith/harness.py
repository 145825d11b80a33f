"""Benchmark protocol and verification suites."""

from __future__ import annotations

import hashlib
import logging
import os
import platform
import random
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import kernels, modular, words
from .lanes import BACKENDS, BackendUnavailable, DWordVec, PortableBackend, backend_select
from .mqx import VARIANTS
from .primes import NTT_PRIMES
from .records import BenchRecord
from .simd import EQ, LE, LT

log = logging.getLogger(__name__)

KERNELS = ("ntt", "vadd", "vsub", "vpmul", "axpy")
BLAS_KERNELS = KERNELS[1:]
# (total runs, trailing runs averaged)
PROTOCOL = {"ntt": (100, 50), "blas": (1000, 500)}
BLAS_LENGTH = 1024
DEFAULT_SEED = 1234
MAX_NTT_SIZE = 1 << 17


def protocol_for(kernel: str) -> tuple:
    return PROTOCOL["ntt" if kernel == "ntt" else "blas"]


def work_divisor(kernel: str, n: int) -> int:
    """Butterflies in an ``n``-point NTT, or elements for point-wise kernels."""
    if kernel == "ntt":
        return n // 2 * (n.bit_length() - 1)
    return n


@dataclass
class BenchSpec:
    kernel: str = "ntt"
    sizes: tuple = ()
    backend: str = "portable"
    mqx_mode: str = "functional"
    mqx_variant: str = "mc"
    algo: str = "schoolbook"
    modulus_bits: int = 124
    runs: int | None = None
    measured: int | None = None
    seed: int = DEFAULT_SEED
    guard: bool = False
    substitute: tuple = ()
    flags: set | None = None

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; choose from {', '.join(KERNELS)}")
        if self.algo not in modular.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.modulus_bits not in NTT_PRIMES:
            raise ValueError(f"no shipped modulus of {self.modulus_bits} bits; choose from {sorted(NTT_PRIMES)}")
        if not self.sizes:
            self.sizes = (BLAS_LENGTH,)
        self.sizes = tuple(int(s) for s in self.sizes)
        runs, measured = self.iterations()
        if not 0 < measured <= runs:
            raise ValueError(f"measured iterations ({measured}) must be in 1..runs ({runs})")

    def iterations(self) -> tuple:
        runs, measured = protocol_for(self.kernel)
        if self.runs is not None:
            runs = self.runs
            measured = self.measured if self.measured is not None else min(measured, runs)
        elif self.measured is not None:
            measured = self.measured
        return runs, measured

    @property
    def overridden(self) -> bool:
        return self.iterations() != protocol_for(self.kernel)

    def make_backend(self):
        if self.backend == "mqx":
            return backend_select("mqx", flags=self.flags, mode=self.mqx_mode, variant=self.mqx_variant, guard=self.guard)
        if self.substitute:
            if self.backend not in ("native-256", "native-512"):
                raise ValueError("instruction substitution needs a native backend")
            return backend_select(self.backend, flags=self.flags, substitute=self.substitute, guard=self.guard)
        return backend_select(self.backend, flags=self.flags)


def backend_label(backend) -> str:
    if getattr(backend, "substitute", ()):
        return "proxy-timed:" + "+".join(backend.substitute)
    label = getattr(backend, "label", None)
    if label:
        return label
    return "scalar-reference" if backend.name == "portable" else "vector-emulated"


def checksum(x: DWordVec) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(np.ascontiguousarray(x.hi).tobytes())
    h.update(np.ascontiguousarray(x.lo).tobytes())
    return h.hexdigest()


@contextmanager
def pinned_worker():
    """Best effort: pin the process to one CPU; yields a description of the outcome."""
    if not hasattr(os, "sched_setaffinity"):
        yield "pin=unsupported"
        return
    try:
        before = os.sched_getaffinity(0)
        cpu = min(before)
        os.sched_setaffinity(0, {cpu})
    except OSError as e:
        yield f"pin=failed({e.strerror})"
        return
    try:
        yield f"pin=cpu{cpu}"
    finally:
        os.sched_setaffinity(0, before)


def host_descriptor(pin: str) -> str:
    model = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.startswith("model name"):
                    model = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return f"{platform.node()}; {model}; python {platform.python_version()}; numpy {np.__version__}; {pin}"


def random_residues(n: int, q: int, rng: random.Random) -> DWordVec:
    return DWordVec.from_ints(rng.randrange(q) for _ in range(n))


def _kernel_call(spec: BenchSpec, n: int, backend, m: modular.Modulus, rng: random.Random):
    """Build a zero-argument callable running one kernel invocation.

    Operand buffers are copied inside the call so loads and stores are timed.
    """
    q = m.q
    x = random_residues(n, q, rng)
    if spec.kernel == "ntt":
        plan = kernels.plan_new(n, m)

        def call():
            src = DWordVec(x.hi.copy(), x.lo.copy())
            return kernels.ntt_forward(src, plan, backend, spec.algo)

        return call
    y = random_residues(n, q, rng)
    alpha = rng.randrange(q)
    op = {
        "vadd": lambda a, b: kernels.vadd(a, b, m, backend),
        "vsub": lambda a, b: kernels.vsub(a, b, m, backend),
        "vpmul": lambda a, b: kernels.vpmul(a, b, m, backend, spec.algo),
        "axpy": lambda a, b: kernels.axpy(alpha, a, b, m, backend, spec.algo),
    }[spec.kernel]

    def call():
        a = DWordVec(x.hi.copy(), x.lo.copy())
        b = DWordVec(y.hi.copy(), y.lo.copy())
        return op(a, b)

    return call


def _check_size(spec: BenchSpec, n: int, lanes: int):
    if n < 2 or n & (n - 1):
        raise ValueError(f"size {n} is not a power of two")
    if spec.kernel == "ntt" and n > MAX_NTT_SIZE:
        raise ValueError(f"NTT size {n} exceeds the largest supported size {MAX_NTT_SIZE}")
    if spec.kernel != "ntt" and n % lanes:
        raise ValueError(f"vector length {n} is not a multiple of {lanes} lanes")


def run_bench(spec: BenchSpec) -> list:
    """Time each size following the warm-up protocol and return one record per size."""
    backend = spec.make_backend()
    m = modular.Modulus(NTT_PRIMES[spec.modulus_bits])
    runs, measured = spec.iterations()
    for n in spec.sizes:
        _check_size(spec, n, backend.lanes)
    records = []
    for n in spec.sizes:
        rng = random.Random(spec.seed * 1_000_003 + n)
        call = _kernel_call(spec, n, backend, m, rng)
        with pinned_worker() as pin:
            for _ in range(runs - measured):
                out = call()
            t0 = time.perf_counter_ns()
            for _ in range(measured):
                out = call()
            elapsed = time.perf_counter_ns() - t0
        total = elapsed / measured
        div = work_divisor(spec.kernel, n)
        records.append(
            BenchRecord(
                kernel=spec.kernel,
                size=n,
                backend=backend.name,
                mode=spec.mqx_mode if backend.name == "mqx" else "",
                variant=spec.mqx_variant if backend.name == "mqx" else "",
                algo=spec.algo,
                modulus_bits=spec.modulus_bits,
                runs=runs,
                measured=measured,
                total_ns=float(total),
                divisor=div,
                normalized_ns=float(total / div),
                checksum=checksum(out),
                label=backend_label(backend),
                timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
                host=host_descriptor(pin),
            )
        )
        log.info("%s n=%d: %.1f ns/call, checksum %s", spec.kernel, n, total, records[-1].checksum)
    return records


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status}  {c.name}" + (f"  ({c.detail})" if c.detail else ""))
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


@dataclass
class VerifyConfig:
    """What :func:`verify` exercises.  ``corrupt`` is a fault-injection hook:
    ``(stage, index)`` of a forward twiddle to perturb in the staged NTT check."""

    backends: tuple = BACKENDS
    variants: tuple = VARIANTS
    moduli_bits: tuple = tuple(NTT_PRIMES)
    cases: int = 2000
    blocks: int = 256
    ntt_size: int = 1024
    seed: int = DEFAULT_SEED
    corrupt: tuple | None = None
    flags: set | None = None


def _first_mismatch(got, want):
    for i, (g, w) in enumerate(zip(got, want)):
        if g != w:
            return i
    return None


def edge_operands(q: int) -> list:
    """Structured operand pairs: boundaries, word boundaries and carries."""
    cand = (0, 1, 2, q - 1, q - 2, q // 2, (q + 1) // 2, (1 << 64) - 1, 1 << 64, (1 << 64) + 1, q >> 64 << 64)
    vals = sorted({v for v in cand if 0 <= v < q})
    return [(a, b) for a in vals for b in vals]


def _scalar_suite(report: VerifyReport, cfg: VerifyConfig, rng: random.Random):
    mask = words.WORD_MASK
    bad = {}
    for _ in range(cfg.cases):
        a, b, c = rng.getrandbits(64), rng.getrandbits(64), rng.getrandbits(1)
        s, co = words.adc_word(a, b, c)
        if (int(co) << 64 | s) != a + b + c:
            bad.setdefault("adc", (a, b, c))
        d, bo = words.sbb_word(a, b, c)
        if d != (a - b - c) & mask or bool(bo) != (a - b - c < 0):
            bad.setdefault("sbb", (a, b, c))
        hi, lo = words.mul_wide_word(a, b)
        if hi << 64 | lo != a * b:
            bad.setdefault("mul_wide", (a, b))
    for name in ("adc", "sbb", "mul_wide"):
        report.add(f"word {name} vs big-int", name not in bad, f"counterexample {bad[name]}" if name in bad else f"{cfg.cases} cases")

    for bits in cfg.moduli_bits:
        m = modular.Modulus(NTT_PRIMES[bits])
        q = m.q
        pairs = edge_operands(q) + [(rng.randrange(q), rng.randrange(q)) for _ in range(cfg.cases)]
        bad = {}
        for a, b in pairs:
            da, db = m.residue(a), m.residue(b)
            if modular.addmod(da, db, m).value() != (a + b) % q:
                bad.setdefault("addmod", (a, b))
            if modular.submod(da, db, m).value() != (a - b) % q:
                bad.setdefault("submod", (a, b))
            sb = modular.mulmod(da, db, m, "schoolbook").value()
            kb = modular.mulmod(da, db, m, "karatsuba").value()
            if sb != a * b % q:
                bad.setdefault("mulmod", (a, b))
            if sb != kb:
                bad.setdefault("schoolbook == karatsuba", (a, b))
        for name in ("addmod", "submod", "mulmod", "schoolbook == karatsuba"):
            detail = f"counterexample {bad[name]}" if name in bad else f"{len(pairs)} cases"
            report.add(f"{name} ({bits}-bit modulus)", name not in bad, detail)


def _backends(cfg: VerifyConfig) -> list:
    out = []
    for name in cfg.backends:
        if name == "portable":
            continue
        if name == "mqx":
            out += [(f"mqx/{v}", backend_select("mqx", flags=cfg.flags, mode="functional", variant=v)) for v in cfg.variants]
            continue
        try:
            out.append((name, backend_select(name, flags=cfg.flags)))
        except BackendUnavailable as e:
            log.info("skipping %s: %s", name, e)
    return out


def divergent_lanes(q: int, lanes: int, rng: random.Random) -> tuple:
    """Operand blocks where every subset of lanes takes the wrap path of addmod/submod.

    Returns two lists of integers whose length is ``lanes * 2**lanes`` for small
    lane counts (capped at 256 blocks)."""
    a, b = [], []
    patterns = range(min(1 << lanes, 256))
    for p in patterns:
        for i in range(lanes):
            if (p >> i) & 1:
                x = rng.randrange(q // 2, q)
                a.append(x)
                b.append(rng.randrange(q - x, q))
            else:
                x = rng.randrange(0, q // 2)
                a.append(x)
                b.append(rng.randrange(0, q - x))
    return a, b


def _conformance_suite(report: VerifyReport, cfg: VerifyConfig, rng: random.Random):
    for label, be in _backends(cfg):
        for bits in cfg.moduli_bits:
            m = modular.Modulus(NTT_PRIMES[bits])
            q = m.q
            n = cfg.blocks * be.lanes
            xa = [rng.randrange(q) for _ in range(n)]
            xb = [rng.randrange(q) for _ in range(n)]
            da, db = divergent_lanes(q, be.lanes, rng)
            xa += da + [q - 1] * be.lanes
            xb += db + [1] * be.lanes
            A, B = DWordVec.from_ints(xa), DWordVec.from_ints(xb)
            ref = PortableBackend(be.lanes)
            for op in ("v_addmod", "v_submod", "v_mulmod"):
                got = getattr(be, op)(A, B, m).to_ints()
                want = getattr(ref, op)(A, B, m).to_ints()
                i = _first_mismatch(got, want)
                detail = f"{len(got)} lanes" if i is None else f"lane {i}: {got[i]} != {want[i]}"
                report.add(f"{label} {op} == portable ({bits}-bit)", i is None, detail)
        wa = np.array([rng.getrandbits(64) for _ in range(cfg.blocks * be.lanes)], dtype=np.uint64)
        wb = wa.copy()
        wb[::3] = [rng.getrandbits(64) for _ in range(len(wb[::3]))]
        ref = PortableBackend(be.lanes)
        ok = np.array_equal(be.v_add(wa, wb), ref.v_add(wa, wb))
        ok &= all(np.array_equal(be.v_cmp(wa, wb, r), ref.v_cmp(wa, wb, r)) for r in (LT, LE, EQ))
        k = ref.v_cmp(wa, wb, LT)
        ok &= np.array_equal(be.v_blend(k, wa, wb), ref.v_blend(k, wa, wb))
        ok &= np.array_equal(be.v_unpack_lo(wa, wb), ref.v_unpack_lo(wa, wb))
        ok &= np.array_equal(be.v_unpack_hi(wa, wb), ref.v_unpack_hi(wa, wb))
        idx = np.array([rng.randrange(2 * be.lanes) for _ in range(be.lanes)])
        ok &= np.array_equal(be.v_permute2(idx, wa, wb), ref.v_permute2(idx, wa, wb))
        report.add(f"{label} word ops == portable", ok, "add, cmp, blend, unpack, permute")


def _reference_stages(x: list, plan: kernels.NttPlan) -> list:
    """Pease stage outputs computed directly from the root of unity."""
    n, q, h = plan.n, plan.m.q, plan.n // 2
    out = []
    for s in range(plan.stages):
        y = [0] * n
        for j in range(h):
            u, v = x[j], x[j + h]
            tw = pow(plan.omega, (j >> s) << s, q)
            y[2 * j] = (u + v) % q
            y[2 * j + 1] = (u - v) * tw % q
        out.append(y)
        x = y
    return out


def _ntt_suite(report: VerifyReport, cfg: VerifyConfig, rng: random.Random):
    vector = _backends(cfg)
    main_label, main = vector[0] if vector else ("portable", PortableBackend())
    for q in (17, 97, NTT_PRIMES[124]):
        m = modular.Modulus(q)
        for n in (8, 16, 64):
            if (q - 1) % n:
                continue
            plan = kernels.plan_new(n, m)
            x = [rng.randrange(q) for _ in range(n)]
            got = kernels.ntt_forward(DWordVec.from_ints(x), plan, main).to_ints()
            report.add(f"ntt n={n} q={q.bit_length()}-bit vs direct summation", got == kernels.ntt_naive(x, plan.omega, q))

    m = modular.Modulus(NTT_PRIMES[124])
    n = cfg.ntt_size
    plan = kernels.plan_new(n, m)
    x = [rng.randrange(m.q) for _ in range(n)]
    X = DWordVec.from_ints(x)
    traced = main.traced()
    y = kernels.ntt_forward(X, plan, traced)
    report.add(f"ntt n={n} butterfly count", traced.trace.butterflies == plan.butterflies,
               f"{traced.trace.butterflies} vs {plan.butterflies}")
    report.add(f"ntt n={n} inverse round trip ({main_label})", kernels.ntt_inverse(y, plan, main).equals(X))
    g = random_residues(n, m.q, rng)
    report.add(f"ntt n={n} cyclic convolution ({main_label})", kernels.cyclic_convolution_check(X, g, plan, main))

    ref = kernels.ntt_forward(X, plan, PortableBackend())
    for label, be in vector:
        report.add(f"ntt n={n} {label} == portable", kernels.ntt_forward(X, plan, be).equals(ref))

    # staged check; localizes a fault to a stage and lane
    run_plan = plan if cfg.corrupt is None else plan.with_corrupted_twiddle(*cfg.corrupt)
    snaps = []
    kernels.ntt_forward(X, run_plan, main, snapshots=snaps)
    want = _reference_stages(x, plan)
    where = None
    for s, (snap, w) in enumerate(zip(snaps, want)):
        i = _first_mismatch(snap.to_ints(), w)
        if i is not None:
            where = f"first mismatch at stage {s}, lane {i}"
            break
    report.add(f"ntt n={n} per-stage trace vs reference", where is None, where or f"{plan.stages} stages")


def verify(cfg: VerifyConfig | None = None) -> VerifyReport:
    cfg = cfg or VerifyConfig()
    rng = random.Random(cfg.seed)
    report = VerifyReport()
    _scalar_suite(report, cfg, rng)
    _conformance_suite(report, cfg, rng)
    _ntt_suite(report, cfg, rng)
    return report
