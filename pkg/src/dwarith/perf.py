"""Performance models over measured data: proxy-timing relative error and
speed-of-light (SOL) projection to many-core CPUs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .records import SchemaError, read_rows

SOL_NOTE = "speed-of-light (idealized)"

# (target instruction, proxy substitution, backend) for validating proxy timing
# on instructions that exist: the target runs as-is, the proxy swaps it out.
PISA_PAIRS = (
    ("mul_epu32", "mullo_epi32", "native-256"),
    ("mask_add_epi64", "add_epi64", "native-512"),
    ("mask_sub_epi64", "sub_epi64", "native-512"),
)
_SUBSTITUTE_KEY = {"mul_epu32": "mul_epu32", "mask_add_epi64": "mask_add", "mask_sub_epi64": "mask_sub"}


def pisa_error(t_target: float, t_proxy: float) -> float:
    """Relative error of a proxy timing in percent; negative means the proxy ran slower."""
    if not t_target > 0:
        raise ValueError(f"target runtime must be positive, got {t_target}")
    if not t_proxy > 0:
        raise ValueError(f"proxy runtime must be positive, got {t_proxy}")
    return (t_target - t_proxy) / t_target * 100.0


def sol_project(t_m: float, c1: float, c2: float, f_m: float, f_max: float) -> float:
    """``t_m * (c1 / c2) * (f_m / f_max)``.

    ``c1``/``f_m`` are cores used and frequency during measurement; ``c2``/``f_max``
    are the target's core count and all-core boost frequency.
    """
    for name, v in (("t_m", t_m), ("c1", c1), ("c2", c2), ("f_m", f_m), ("f_max", f_max)):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive and finite, got {v}")
    if c1 > c2:
        warnings.warn(f"measurement used more cores ({c1}) than the target has ({c2})", stacklevel=2)
    return t_m * (c1 / c2) * (f_m / f_max)


# ---------------------------------------------------------------------------
# CPU descriptions
# ---------------------------------------------------------------------------

_NUMERIC = {"cores": int, "base_ghz": float, "max_ghz": float, "all_core_boost_ghz": float, "l3_cache_mb": float}


@dataclass(frozen=True)
class CpuSpec:
    name: str
    cores: int | None = None
    base_ghz: float | None = None
    max_ghz: float | None = None
    all_core_boost_ghz: float | None = None
    l3_cache_mb: float | None = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def target_ghz(self) -> float | None:
        """Frequency used when this CPU is a projection target."""
        return self.all_core_boost_ghz or self.max_ghz

    @property
    def measured_ghz(self) -> float | None:
        """Frequency assumed for a single-core measurement on this CPU."""
        return self.max_ghz or self.all_core_boost_ghz


def parse_cpu_spec(text: str, source: str = "cpu spec") -> CpuSpec:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values, info = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{source}: expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key in _NUMERIC:
            try:
                v = _NUMERIC[key](value)
            except ValueError:
                raise SchemaError(f"{source}: {value!r} is not a number", line=lineno, column=key)
            if not v > 0:
                raise SchemaError(f"{source}: must be positive", line=lineno, column=key)
            values[key] = v
        elif key == "name":
            values["name"] = value
        else:
            info[key] = value
    if "name" not in values:
        raise SchemaError(f"{source}: missing required key", column="name")
    return CpuSpec(info=info, **values)


def shipped_cpu_specs() -> list:
    return sorted(p.name[:-4] for p in resources.files("dwarith").joinpath("specs").iterdir() if p.name.endswith(".txt"))


def load_cpu_spec(path) -> CpuSpec:
    """Read a CPU description from a file, falling back to the shipped ones.

    ``specs/epyc-9965s.txt``, ``epyc-9965s.txt`` and ``epyc-9965s`` all resolve
    to the shipped file when no such file exists on disk.
    """
    p = Path(path)
    if p.is_file():
        return parse_cpu_spec(p.read_text(), str(p))
    stem = p.name[:-4] if p.name.endswith(".txt") else p.name
    shipped = resources.files("dwarith").joinpath("specs", f"{stem}.txt")
    if shipped.is_file():
        return parse_cpu_spec(shipped.read_text(), f"specs/{stem}.txt")
    raise FileNotFoundError(f"no CPU spec at {path}; shipped specs: {', '.join(shipped_cpu_specs())}")


# ---------------------------------------------------------------------------
# analysis over harness CSV
# ---------------------------------------------------------------------------

BASELINE_COLUMNS = ("name", "kernel", "size", "runtime_ns")
SOL_COLUMNS = [
    "kernel", "size", "backend", "variant", "algo", "measured_ns", "target", "c1", "c2", "f_m", "f_max",
    "sol_ns", "sol_normalized_ns", "baseline", "baseline_ns", "ratio", "direction", "note",
]


def load_baselines(stream, source="baselines") -> list:
    """Baseline rows: ``name,kernel,size,runtime_ns`` (runtime of one kernel call)."""
    out = []
    for lineno, row in read_rows(stream, BASELINE_COLUMNS, source):
        try:
            size = int(row["size"])
        except ValueError:
            raise SchemaError(f"cannot parse {row['size']!r} as int", line=lineno, column="size")
        try:
            ns = float(row["runtime_ns"])
        except ValueError:
            raise SchemaError(f"cannot parse {row['runtime_ns']!r} as float", line=lineno, column="runtime_ns")
        if not ns > 0:
            raise SchemaError("runtime must be positive", line=lineno, column="runtime_ns")
        out.append({"name": row["name"], "kernel": row["kernel"], "size": size, "runtime_ns": ns})
    return out


def compare(projected_ns: float, baseline_ns: float) -> tuple:
    """``(ratio, direction)`` where ratio = baseline / projected.

    The direction reads as "projection is <factor>x faster/slower than baseline".
    """
    ratio = baseline_ns / projected_ns
    if ratio > 1:
        return ratio, f"{ratio:.3g}x faster"
    if ratio < 1:
        return ratio, f"{1 / ratio:.3g}x slower"
    return ratio, "equal"


def analyze(records, targets, f_m: float, c1: int = 1, baselines=()) -> list:
    """One row per (record, target CPU, matching baseline) with SOL projection."""
    rows = []
    for r in records:
        for cpu in targets:
            if cpu.cores is None or cpu.target_ghz is None:
                raise ValueError(f"target CPU {cpu.name} needs cores and an all-core boost or max frequency")
            sol = sol_project(r.total_ns, c1, cpu.cores, f_m, cpu.target_ghz)
            base = {
                "kernel": r.kernel, "size": r.size, "backend": r.backend, "variant": r.variant, "algo": r.algo,
                "measured_ns": r.total_ns, "target": cpu.name, "c1": c1, "c2": cpu.cores, "f_m": f_m,
                "f_max": cpu.target_ghz, "sol_ns": sol, "sol_normalized_ns": sol / r.divisor,
                "baseline": "", "baseline_ns": "", "ratio": "", "direction": "", "note": SOL_NOTE,
            }
            matches = [b for b in baselines if b["kernel"] == r.kernel and b["size"] == r.size]
            if not matches:
                rows.append(base)
            for b in matches:
                ratio, direction = compare(sol, b["runtime_ns"])
                rows.append(dict(base, baseline=b["name"], baseline_ns=b["runtime_ns"], ratio=ratio, direction=direction))
    return rows


def pair_records(target, proxy) -> list:
    """Match target and proxy records on (kernel, size, algo, modulus_bits) and compute the error."""
    index = {(r.kernel, r.size, r.algo, r.modulus_bits): r for r in proxy}
    out = []
    for t in target:
        key = (t.kernel, t.size, t.algo, t.modulus_bits)
        p = index.get(key)
        if p is None:
            continue
        out.append({
            "kernel": t.kernel, "size": t.size, "algo": t.algo, "modulus_bits": t.modulus_bits,
            "t_target": t.total_ns, "t_proxy": p.total_ns, "epsilon_pct": pisa_error(t.total_ns, p.total_ns),
        })
    return out


def pisa_validation(size: int = 1 << 14, runs: int | None = None, measured: int | None = None,
                    guard: bool = True, flags=None, algo: str = "schoolbook") -> list:
    """Time an NTT with each existing target instruction and with its proxy substitute.

    Skips pairs whose backend the host lacks.
    """
    from .harness import BenchSpec, run_bench
    from .lanes import BackendUnavailable

    out = []
    for target, proxy, backend in PISA_PAIRS:
        common = dict(kernel="ntt", sizes=(size,), backend=backend, runs=runs, measured=measured, flags=flags, algo=algo)
        try:
            t_rec = run_bench(BenchSpec(**common))[0]
        except BackendUnavailable as e:
            warnings.warn(f"skipping {target}: {e}", stacklevel=2)
            continue
        p_rec = run_bench(BenchSpec(substitute=(_SUBSTITUTE_KEY[target],), guard=guard, **common))[0]
        out.append({
            "target": target, "proxy": proxy, "backend": backend, "size": size,
            "t_target": t_rec.total_ns, "t_proxy": p_rec.total_ns,
            "epsilon_pct": pisa_error(t_rec.total_ns, p_rec.total_ns),
        })
    return out
