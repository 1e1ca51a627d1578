import csv
import io

import numpy as np
import pytest

from fastmp.cli import main
from fastmp.cost_model import cosamp_relative_cost
from fastmp.sensing import parse_instance
from fastmp.solvers import parse_result


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--max-n", "64")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().endswith("checks passed")


def test_verify_reports_corruption(capsys):
    code, out, _ = run(capsys, "verify", "--max-n", "64", "--corrupt")
    assert code == 1
    assert any(line.startswith("FAIL") for line in out.splitlines())


def test_verify_smallest_size(capsys):
    code, _, _ = run(capsys, "verify", "--max-n", "2")
    assert code == 0


def test_solve_k0_empty_support(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--n", "64", "--m", "16", "--k", "0", "--out", str(tmp_path))
    assert code == 0
    assert "support=[]" in out
    for mode in ("conventional", "fast"):
        assert parse_result((tmp_path / f"result_{mode}.txt").read_text())["support"] == []


def test_solve_modes_agree(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--kind", "fourier", "--n", "4096", "--m", "64",
                       "--k", "5", "--seed", "3", "--out", str(tmp_path))
    assert code == 0
    conv = parse_result((tmp_path / "result_conventional.txt").read_text())
    fast = parse_result((tmp_path / "result_fast.txt").read_text())
    assert conv["support"] == fast["support"]
    np.testing.assert_allclose(conv["x_hat"], fast["x_hat"], atol=1e-8)
    inst = parse_instance((tmp_path / "instance.txt").read_text())
    assert set(conv["support"]) == set(inst.support.tolist())
    cost = read_csv((tmp_path / "cost_fast.csv").read_text())
    assert [r["mode"] for r in cost] == ["fast"] * len(cost)
    assert float(cost[0]["relative_vs_conventional"]) == 1.0


def test_solve_is_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        run(capsys, "solve", "--kind", "hadamard", "--n", "256", "--m", "64", "--k", "4",
            "--noise", "0.01", "--seed", "7", "--mode", "conventional,fast,adaptive",
            "--out", str(tmp_path / sub))
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 7
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bench_omp_anchor(capsys):
    code, out, _ = run(capsys, "bench", "--kind", "fourier", "--n", "4096", "--m", "64")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["kind", "N", "M", "t", "relative_cost"]
    assert len(rows) == 13
    assert float(rows[10]["relative_cost"]) == 1.0 and rows[10]["t"] == "11"
    assert float(rows[0]["relative_cost"]) == 1.0


def test_bench_cosamp_anchor(capsys):
    code, out, _ = run(capsys, "bench", "--solver", "cosamp", "--n", "8192", "--k", "4",
                       "--tmax", "6")
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["kind", "N", "K", "t", "relative_cost"]
    assert float(rows[0]["relative_cost"]) == 1.0
    for row in rows[1:]:
        assert float(row["relative_cost"]) == cosamp_relative_cost(8192, 4)
    assert abs(float(rows[4]["relative_cost"]) - 0.369) < 1e-3


def test_bench_lists_and_file_output(tmp_path, capsys):
    target = tmp_path / "bench.csv"
    code, out, _ = run(capsys, "bench", "--kind", "fourier,hadamard", "--n", "64,128",
                       "--m", "16,32", "--tmax", "3", "--out", str(target))
    assert code == 0 and out == ""
    rows = read_csv(target.read_text())
    assert len(rows) == 2 * 2 * 2 * 3
    assert all(float(r["relative_cost"]) == 1.0 for r in rows if r["t"] == "1")


@pytest.mark.parametrize("kind", ["fourier", "hadamard"])
def test_equiv_small_campaign(capsys, tmp_path, kind):
    target = tmp_path / "trials.csv"
    code, out, _ = run(capsys, "equiv", "--kind", kind, "--n", "256", "--m", "64", "--k", "5",
                       "--trials", "25", "--seed", "1", "--out", str(target))
    assert code == 0
    assert "trials=25 mismatches=0" in out
    rows = read_csv(target.read_text())
    assert [int(r["trial"]) for r in rows] == list(range(25))
    assert all(r["identical"] == "1" for r in rows)


def test_equiv_single_trivial_trial(capsys):
    code, out, _ = run(capsys, "equiv", "--n", "64", "--m", "16", "--k", "0", "--trials", "1")
    assert code == 0
    assert "trials=1 mismatches=0" in out


def test_equiv_cosamp_parallel_matches_serial(capsys):
    args = ["equiv", "--solver", "cosamp", "--n", "256", "--m", "64", "--k", "4",
            "--trials", "8", "--seed", "5"]
    _, serial, _ = run(capsys, *args)
    _, parallel, _ = run(capsys, *args, "--workers", "2")
    assert serial == parallel


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bench config\nkind = hadamard\nn = 1024\nm = 64\ntmax = 4\n")
    _, out, _ = run(capsys, "bench", "--config", str(cfg))
    rows = read_csv(out)
    assert {r["kind"] for r in rows} == {"hadamard"} and len(rows) == 4
    assert float(rows[2]["relative_cost"]) == 0.2
    _, out, _ = run(capsys, "bench", "--config", str(cfg), "--tmax", "2")
    assert len(read_csv(out)) == 2


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "64", "--m", "128"],
    ["solve", "--kind", "wavelet"],
    ["bench", "--n", "100"],
    ["equiv", "--mode", "fast"],
    ["equiv", "--n", "abc"],
    ["solve", "--mode", "telepathic"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("fastmp: error:")


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, _ = run(capsys, "bench", "--config", str(cfg))
    assert code == 2


def test_help_documents_csv_schema(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bench", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "kind,N,M,t,relative_cost" in out and "kind,N,K,t,relative_cost" in out
    with pytest.raises(SystemExit):
        main(["solve", "--help"])
    assert "t,mode,analytic_flops,counted_flops,relative_vs_conventional" in capsys.readouterr().out
