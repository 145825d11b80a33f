"""Command line interface: ``dwarith {bench,verify,roofline,pisa-error,pisa-validate}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import sys

from . import harness, perf, plots, records
from .lanes import BACKENDS, BackendUnavailable
from .modular import ALGORITHMS
from .mqx import MODES, VARIANTS
from .primes import NTT_PRIMES
from .records import SchemaError


def parse_size(text: str) -> int:
    text = text.strip()
    m = re.fullmatch(r"(\d+)\^(\d+)", text)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    return int(text)


def parse_sizes(text: str) -> list:
    """``2^10..2^16`` (powers of two, inclusive), ``1024,4096`` or a single size."""
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = (parse_size(p) for p in part.split("..", 1))
            if lo < 1 or lo & (lo - 1):
                raise argparse.ArgumentTypeError(f"range start {lo} is not a power of two")
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
        else:
            out.append(parse_size(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no sizes in {text!r}")
    return out


def _sizes_arg(text):
    try:
        return parse_sizes(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _stage_index(text):
    try:
        stage, index = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected STAGE:INDEX")
    return stage, index


def cmd_bench(args) -> int:
    spec = harness.BenchSpec(
        kernel=args.kernel,
        sizes=tuple(args.sizes or (harness.BLAS_LENGTH,)),
        backend=args.backend,
        mqx_mode=args.mqx_mode,
        mqx_variant=args.mqx_variant,
        algo=args.algo,
        modulus_bits=args.modulus_bits,
        runs=args.runs,
        measured=args.measured,
        seed=args.seed,
        guard=args.guard,
        substitute=tuple(args.substitute or ()),
    )
    runs, measured = spec.iterations()
    source = "override" if spec.overridden else "protocol default"
    print(f"protocol: {runs} runs, mean of final {measured} ({source}); seed {spec.seed}")
    recs = harness.run_bench(spec)
    rows = [r.__dict__ for r in recs]
    unit = "ns/butterfly" if spec.kernel == "ntt" else "ns/element"
    print(records.format_table(
        rows, ["kernel", "size", "backend", "variant", "algo", "total_ns", "normalized_ns", "checksum", "label"],
        ["kernel", "size", "backend", "variant", "algo", "ns/call", unit, "checksum", "label"],
    ))
    if args.out:
        records.save_csv(recs, args.out)
        print(f"wrote {args.out}")
        if not args.no_plot:
            print(f"wrote {plots.plot_bench(recs, args.out)}")
    return 0


def cmd_verify(args) -> int:
    if args.all:
        cfg = harness.VerifyConfig(seed=args.seed, corrupt=args.corrupt_twiddle)
    else:
        cfg = harness.VerifyConfig(
            backends=("portable", args.backend),
            variants=(args.mqx_variant,),
            moduli_bits=(args.modulus_bits,),
            seed=args.seed,
            corrupt=args.corrupt_twiddle,
        )
    if args.cases:
        cfg.cases = args.cases
    report = harness.verify(cfg)
    print(report.render())
    return 0 if report.ok else 1


def cmd_roofline(args) -> int:
    recs = records.load_csv(args.input)
    targets = [perf.load_cpu_spec(p) for p in args.cpu]
    f_m = args.fm
    if f_m is None:
        measured = perf.load_cpu_spec(args.measured_cpu)
        f_m = measured.measured_ghz
        if f_m is None:
            raise ValueError(f"{measured.name} has no max_ghz; pass --fm")
    baselines = []
    if args.baselines:
        with open(args.baselines, newline="") as f:
            baselines = perf.load_baselines(f, args.baselines)
    rows = perf.analyze(recs, targets, f_m=f_m, c1=args.c1, baselines=baselines)
    print(f"{perf.SOL_NOTE}: t_sol = t_m * (c1/c2) * (f_m/f_max), f_m = {f_m} GHz, c1 = {args.c1}")
    print(records.format_table(rows, ["kernel", "size", "target", "c2", "f_max", "measured_ns", "sol_ns", "baseline", "direction"]))
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=perf.SOL_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        print(f"wrote {args.out}")
        if not args.no_plot:
            print(f"wrote {plots.plot_sol(rows, args.out)}")
    return 0


def cmd_pisa_error(args) -> int:
    pairs = perf.pair_records(records.load_csv(args.target), records.load_csv(args.proxy))
    if not pairs:
        print("no matching (kernel, size, algo, modulus_bits) rows between target and proxy", file=sys.stderr)
        return 1
    print("epsilon = (t_target - t_proxy) / t_target * 100; negative means the proxy is slower")
    print(records.format_table(pairs, ["kernel", "size", "algo", "t_target", "t_proxy", "epsilon_pct"]))
    return 0


def cmd_pisa_validate(args) -> int:
    rows = perf.pisa_validation(size=args.size, runs=args.runs, measured=args.measured, guard=not args.no_guard)
    if not rows:
        print("no native vector backend on this host; nothing to validate", file=sys.stderr)
        return 1
    print(records.format_table(rows, ["target", "proxy", "backend", "size", "t_target", "t_proxy", "epsilon_pct"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dwarith", description="Double-word modular arithmetic kernels, benchmarks and projections.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def backend_opts(sp):
        sp.add_argument("--backend", choices=BACKENDS, default=os.environ.get("DWARITH_BACKEND", "portable"))
        sp.add_argument("--mqx-mode", choices=MODES, default="functional")
        sp.add_argument("--mqx-variant", choices=VARIANTS, default="mc")
        sp.add_argument("--modulus-bits", type=int, choices=sorted(NTT_PRIMES), default=124)
        sp.add_argument("--seed", type=int, default=harness.DEFAULT_SEED)

    b = sub.add_parser("bench", help="time a kernel and write CSV")
    b.add_argument("--kernel", choices=harness.KERNELS, default="ntt")
    b.add_argument("--sizes", type=_sizes_arg, help="e.g. 2^10..2^16 or 1024,4096 (default 1024)")
    backend_opts(b)
    b.add_argument("--algo", choices=ALGORITHMS, default="schoolbook")
    b.add_argument("--runs", type=int, help="override total iterations")
    b.add_argument("--measured", type=int, help="override trailing iterations averaged")
    b.add_argument("--substitute", action="append", choices=("mul_epu32", "mask_add", "mask_sub"),
                   help="time with a proxy instruction in place of this one (native backends)")
    b.add_argument("--guard", action="store_true", help="keep proxy mask operands live with an extra mask op")
    b.add_argument("--out", help="CSV output path; a .png figure is written next to it")
    b.add_argument("--no-plot", action="store_true")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run differential and oracle suites")
    v.add_argument("--all", action="store_true", help="every backend, variant and shipped modulus")
    backend_opts(v)
    v.add_argument("--cases", type=int, help="random cases per scalar suite")
    v.add_argument("--corrupt-twiddle", type=_stage_index, metavar="STAGE:INDEX",
                   help="fault injection: perturb one forward twiddle in the staged NTT check")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("roofline", help="speed-of-light projection of measured runtimes")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--cpu", action="append", required=True, help="target CPU spec (repeatable)")
    r.add_argument("--measured-cpu", default="specs/epyc-9654.txt", help="CPU the measurements ran on")
    r.add_argument("--fm", type=float, help="measurement frequency in GHz (overrides --measured-cpu)")
    r.add_argument("--c1", type=int, default=1, help="cores used in the measurement")
    r.add_argument("--baselines", help="CSV with name,kernel,size,runtime_ns")
    r.add_argument("--out")
    r.add_argument("--no-plot", action="store_true")
    r.set_defaults(func=cmd_roofline)

    e = sub.add_parser("pisa-error", help="relative error between target and proxy timings")
    e.add_argument("--target", required=True)
    e.add_argument("--proxy", required=True)
    e.set_defaults(func=cmd_pisa_error)

    pv = sub.add_parser("pisa-validate", help="time NTTs with existing instructions swapped for proxies")
    pv.add_argument("--size", type=parse_size, default=1 << 14)
    pv.add_argument("--runs", type=int)
    pv.add_argument("--measured", type=int)
    pv.add_argument("--no-guard", action="store_true")
    pv.set_defaults(func=cmd_pisa_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SchemaError, BackendUnavailable, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
