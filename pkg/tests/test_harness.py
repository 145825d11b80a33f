import io
import random

import pytest

from dwarith import harness, records
from dwarith.harness import BenchSpec, VerifyConfig, run_bench, verify
from dwarith.primes import NTT_PRIMES


def small_spec(**kw):
    kw.setdefault("runs", 3)
    kw.setdefault("measured", 2)
    return BenchSpec(**kw)


def test_protocol_defaults():
    assert BenchSpec(kernel="ntt").iterations() == (100, 50)
    for k in harness.BLAS_KERNELS:
        spec = BenchSpec(kernel=k)
        assert spec.iterations() == (1000, 500)
        assert spec.sizes == (1024,)
        assert not spec.overridden
    assert BenchSpec(kernel="ntt", runs=10).iterations() == (10, 10)
    assert BenchSpec(kernel="ntt", runs=10, measured=4).overridden


def test_bad_specs():
    with pytest.raises(ValueError):
        BenchSpec(kernel="fft")
    with pytest.raises(ValueError):
        BenchSpec(runs=4, measured=5)
    with pytest.raises(ValueError):
        BenchSpec(modulus_bits=64)
    with pytest.raises(ValueError):
        run_bench(small_spec(kernel="ntt", sizes=(1000,)))
    with pytest.raises(ValueError):
        run_bench(small_spec(kernel="ntt", sizes=(1 << 18,)))
    with pytest.raises(ValueError):
        small_spec(backend="portable", substitute=("mask_add",)).make_backend()


def test_divisors():
    assert harness.work_divisor("ntt", 1024) == 5120
    assert harness.work_divisor("ntt", 1 << 16) == (1 << 15) * 16
    assert harness.work_divisor("vadd", 1024) == 1024


def test_bench_record_fields():
    (rec,) = run_bench(small_spec(kernel="ntt", sizes=(1024,), backend="native-512", flags={"avx512f"}))
    assert (rec.kernel, rec.size, rec.backend, rec.runs, rec.measured) == ("ntt", 1024, "native-512", 3, 2)
    assert rec.divisor == 5120
    assert rec.normalized_ns == pytest.approx(rec.total_ns / 5120)
    assert rec.total_ns > 0
    assert rec.label == "vector-emulated"
    assert "pin=" in rec.host
    assert rec.mode == "" and rec.variant == ""


def test_bench_mqx_labels():
    (rec,) = run_bench(small_spec(kernel="vadd", sizes=(64,), backend="mqx", mqx_mode="pisa", flags=set()))
    assert rec.label == "portable-emulated, non-representative"
    assert (rec.mode, rec.variant) == ("pisa", "mc")
    (rec,) = run_bench(small_spec(kernel="vadd", sizes=(64,), backend="native-512", substitute=("mask_add",),
                                  flags={"avx512f"}))
    assert rec.label == "proxy-timed:mask_add"


@pytest.mark.parametrize("kernel", harness.KERNELS)
def test_checksums_deterministic_across_backends(kernel):
    sizes = (64,)
    a = run_bench(small_spec(kernel=kernel, sizes=sizes, backend="portable"))[0]
    b = run_bench(small_spec(kernel=kernel, sizes=sizes, backend="native-512", flags={"avx512f"}))[0]
    c = run_bench(small_spec(kernel=kernel, sizes=sizes, backend="mqx", flags={"avx512f"}, algo="karatsuba"))[0]
    assert a.checksum == b.checksum == c.checksum
    d = run_bench(small_spec(kernel=kernel, sizes=sizes, backend="portable", seed=99))[0]
    assert d.checksum != a.checksum


def test_csv_empty_and_round_trip():
    text = records.to_csv([])
    assert text.strip() == ",".join(records.COLUMNS)
    assert records.from_csv(text) == []
    recs = run_bench(small_spec(kernel="vpmul", sizes=(16, 32)))
    assert records.from_csv(records.to_csv(recs)) == recs
    (one,) = recs[:1]
    assert records.from_csv(records.to_csv([one])) == [one]


def test_csv_schema_errors():
    (rec,) = run_bench(small_spec(kernel="vadd", sizes=(8,)))
    text = records.to_csv([rec])
    header, row = text.strip().split("\n")
    with pytest.raises(records.SchemaError, match="line 1.*column 'total_ns'"):
        records.from_csv(header.replace("total_ns", "total") + "\n" + row)
    cells = row.split(",")
    cells[records.COLUMNS.index("size")] = "big"
    with pytest.raises(records.SchemaError, match="line 2.*column 'size'"):
        records.from_csv(header + "\n" + ",".join(cells))
    with pytest.raises(records.SchemaError, match="line 2"):
        records.from_csv(header + "\n" + row + ",extra")
    with pytest.raises(records.SchemaError, match="line 1"):
        records.read_csv(io.StringIO(""))
    cells = row.split(",")
    cells[0] = "2"
    with pytest.raises(records.SchemaError, match="schema version"):
        records.from_csv(header + "\n" + ",".join(cells))


def test_edge_operands_in_range():
    q = NTT_PRIMES[124]
    pairs = harness.edge_operands(q)
    assert all(0 <= a < q and 0 <= b < q for a, b in pairs)
    assert (q - 1, 1) in pairs


def test_divergent_lanes_cover_patterns():
    q = 97
    a, b = harness.divergent_lanes(q, 4, random.Random(1))
    assert len(a) == 4 * 16
    wraps = [x + y >= q for x, y in zip(a, b)]
    patterns = {tuple(wraps[i:i + 4]) for i in range(0, len(wraps), 4)}
    assert len(patterns) == 16


def test_verify_small_config_passes():
    cfg = VerifyConfig(backends=("portable", "native-512", "mqx"), variants=("mc", "base"), moduli_bits=(60, 124),
                       cases=200, blocks=16, ntt_size=64, flags={"avx512f"})
    report = verify(cfg)
    assert report.ok, report.render()
    assert "checks passed" in report.render()


def test_verify_localizes_corrupted_twiddle():
    cfg = VerifyConfig(backends=("portable", "native-512"), moduli_bits=(124,), cases=10, blocks=4,
                       ntt_size=64, corrupt=(3, 5), flags={"avx512f"})
    report = verify(cfg)
    assert not report.ok
    (fail,) = report.failures
    assert "stage 3" in fail.detail
    assert "lane" in fail.detail
