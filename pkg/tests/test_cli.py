import argparse
import csv

import pytest

from dwarith import cli, records


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_sizes():
    assert cli.parse_sizes("2^10..2^12") == [1024, 2048, 4096]
    assert cli.parse_sizes("8,16") == [8, 16]
    assert cli.parse_sizes("2^3") == [8]
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_sizes("3..16")


def test_bench_writes_csv_and_figure(tmp_path, capsys):
    out = tmp_path / "results.csv"
    code, text, _ = run(capsys, "bench", "--kernel", "ntt", "--sizes", "2^3..2^5", "--backend", "native-512",
                        "--mqx-variant", "mc", "--algo", "schoolbook", "--runs", "2", "--measured", "1",
                        "--out", str(out))
    assert code == 0
    assert "protocol: 2 runs, mean of final 1 (override)" in text
    recs = records.load_csv(out)
    assert [r.size for r in recs] == [8, 16, 32]
    assert out.with_suffix(".png").stat().st_size > 0


def test_bench_echoes_default_protocol(capsys, monkeypatch):
    monkeypatch.setattr(cli.harness, "run_bench", lambda spec: [])
    code, text, _ = run(capsys, "bench", "--kernel", "vadd")
    assert code == 0
    assert "protocol: 1000 runs, mean of final 500 (protocol default)" in text
    code, text, _ = run(capsys, "bench", "--kernel", "ntt", "--sizes", "2^10")
    assert "protocol: 100 runs, mean of final 50 (protocol default)" in text


def test_verify_single_backend(capsys):
    code, text, _ = run(capsys, "verify", "--backend", "mqx", "--mqx-variant", "c", "--modulus-bits", "60",
                        "--cases", "50")
    assert code == 0, text
    assert "checks passed" in text


def test_verify_fault_injection_exits_nonzero(capsys):
    code, text, _ = run(capsys, "verify", "--backend", "native-512", "--cases", "10",
                        "--corrupt-twiddle", "2:7")
    assert code == 1
    assert "first mismatch at stage 2" in text


def test_roofline_round_trip(tmp_path, capsys):
    res = tmp_path / "results.csv"
    assert cli.main(["bench", "--kernel", "vadd", "--sizes", "64", "--runs", "2", "--measured", "1",
                     "--out", str(res), "--no-plot"]) == 0
    base = tmp_path / "asic.csv"
    base.write_text("name,kernel,size,runtime_ns\nasic,vadd,64,0.5\n")
    sol = tmp_path / "sol.csv"
    code, text, _ = run(capsys, "roofline", "--in", str(res), "--cpu", "specs/epyc-9965s.txt",
                        "--cpu", "xeon-6980p", "--baselines", str(base), "--out", str(sol))
    assert code == 0
    assert "speed-of-light (idealized)" in text
    rows = list(csv.DictReader(open(sol)))
    assert sorted(r["target"] for r in rows) == ["AMD EPYC 9965S", "Intel Xeon 6980P"]
    assert all(r["baseline"] == "asic" for r in rows)
    assert sol.with_suffix(".png").exists()


def test_roofline_schema_diagnostic(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("schema,kernel,size\n1,ntt,8\n")
    code, _, err = run(capsys, "roofline", "--in", str(bad), "--cpu", "epyc-9965s")
    assert code == 2
    assert "line 1" in err and "column 'backend'" in err


def test_pisa_error_command(tmp_path, capsys):
    def rec(total, label):
        return records.BenchRecord("ntt", 1024, "native-512", "", "", "schoolbook", 124, 100, 50, total, 5120,
                                   total / 5120, "00", label, "t", "h")

    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    records.save_csv([rec(100.0, "x")], a)
    records.save_csv([rec(92.0, "y")], b)
    code, text, _ = run(capsys, "pisa-error", "--target", str(a), "--proxy", str(b))
    assert code == 0
    assert "8.000" in text
    records.save_csv([], b)
    code, _, _ = run(capsys, "pisa-error", "--target", str(a), "--proxy", str(b))
    assert code == 1


def test_unavailable_backend_message(capsys, monkeypatch):
    monkeypatch.setenv("DWARITH_CPU_FLAGS", "sse2")
    code, _, err = run(capsys, "bench", "--kernel", "vadd", "--backend", "native-512", "--runs", "1")
    assert code == 2
    assert "avx512f" in err


def test_bad_arguments_exit_with_usage():
    with pytest.raises(SystemExit) as e:
        cli.main(["bench", "--backend", "sve"])
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["bench", "--mqx-variant", "z"])
