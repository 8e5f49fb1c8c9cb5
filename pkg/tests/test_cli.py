import csv
import json

import numpy as np
import pytest

from phsplit import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_schemes_list(capsys):
    code, out, _ = run(capsys, "schemes", "list")
    assert code == 0
    lines = out.splitlines()
    assert "ea5-a | a | 5 | 4 | yes | yes" in lines
    assert "tj4 | — | 7 | 4 | no | no" in lines
    assert "ea6gen-ii | a | 11 | 6 | yes | yes" in lines


def test_run_csv_rows(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, _, _ = run(capsys, "run", "--model", "oscillator", "--scheme", "ea5-a", "--h", "0.01", "--t-end", "5",
                     "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 502
    assert rows[0] == ["t", "x_1", "x_2", "H", "dH_per_h"]
    assert rows[1][-1] == ""
    for r in rows[1:]:
        x = np.array([float(v) for v in r[1:3]])
        assert abs(0.5 * x @ x - float(r[3])) <= 1e-12


def test_run_rigidbody_energy_nonincreasing(capsys):
    code, out, _ = run(capsys, "run", "--model", "rigidbody", "--scheme", "ea9-a", "--h", "0.01", "--t-end", "1")
    assert code == 0
    H = np.array([float(r[4]) for r in list(csv.reader(out.splitlines()))[1:]])
    assert np.all(np.diff(H) <= 0)


def test_unknown_scheme_exit_code(capsys):
    code, _, err = run(capsys, "run", "--scheme", "nope", "--h", "0.1")
    assert code == 2 and "unknown scheme" in err


def test_config_errors(capsys):
    assert run(capsys, "run", "--scheme", "ea5-a", "--h", "-0.1")[0] == 2
    assert run(capsys, "run", "--scheme", "ea5-a", "--h", "0.1", "--t-end", "0")[0] == 2
    assert run(capsys, "run", "--scheme", "ea5-a", "--h", "0.1", "--driven")[0] == 2
    assert run(capsys, "run", "--model", "rigidbody", "--driven", "--scheme", "pbs4-a", "--h", "0.1")[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["converge", "--scheme", "ea5-a", "--h-grid", "3..1"])
    assert info.value.code == 2


def test_converge_csv(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, _, _ = run(capsys, "converge", "--scheme", "ea5-a", "--scheme", "ea7-a", "--h-grid", "0..5",
                     "--out", str(out), "--plot")
    assert code == 0
    assert (tmp_path / "c.svg").exists()
    lines = out.read_text().splitlines()
    assert lines[0] == "scheme,h,error,pairwise_order"
    foot = lines[lines.index("scheme,fitted_slope") + 1:]
    slopes = {s: float(v) for s, v in (ln.split(",") for ln in foot)}
    assert all(3.7 <= v <= 4.3 for v in slopes.values())
    body = [ln.split(",") for ln in lines[1:13]]
    e5 = [float(r[2]) for r in body if r[0] == "ea5-a"]
    e7 = [float(r[2]) for r in body if r[0] == "ea7-a"]
    assert all(b < a for a, b in zip(e5[1:], e7[1:]))


def test_converge_strang(capsys):
    code, out, _ = run(capsys, "converge", "--scheme", "strang-a", "--h-grid", "0..5")
    assert code == 0
    assert float(out.splitlines()[-1].split(",")[1]) == pytest.approx(2.0, abs=0.3)


def test_dissipation_summary(tmp_path, capsys):
    code, out, _ = run(capsys, "dissipation", "--scheme", "tj4", "--h", "0.09", "--out", str(tmp_path / "t.csv"))
    assert code == 0 and "first violation: t =" in out
    summary = (tmp_path / "t.csv").read_text().splitlines()[-1]
    assert float(summary.split("first_violation=")[1]) == pytest.approx(0.45)
    code, out, _ = run(capsys, "dissipation", "--scheme", "ea5-a", "--h", "0.09")
    assert out.splitlines()[-1].endswith("first_violation=none")


def test_dissipation_driven_columns(capsys):
    code, out, _ = run(capsys, "dissipation", "--driven", "--scheme", "pbs4-a", "--h", "0.01", "--t-end", "1")
    rows = [r for r in csv.reader(out.splitlines()) if not r[0].startswith("#")]
    assert rows[0][-2:] == ["d_est_per_h", "supplied_rate"]
    gap = max(abs(float(r[-2]) - float(r[-1])) for r in rows[2:])
    assert gap < 0.05


def test_json_mirrors_csv(capsys):
    _, out_csv, _ = run(capsys, "run", "--scheme", "ea5-a", "--h", "0.1", "--t-end", "1")
    _, out_json, _ = run(capsys, "run", "--scheme", "ea5-a", "--h", "0.1", "--t-end", "1", "--format", "json")
    obj = json.loads(out_json)
    rows = list(csv.reader(out_csv.splitlines()))
    assert obj["columns"] == rows[0]
    assert [float(v) for v in rows[-1]] == obj["rows"][-1]


def test_output_deterministic(tmp_path, capsys):
    paths = [tmp_path / f"{i}.csv" for i in range(2)]
    for p in paths:
        run(capsys, "dissipation", "--driven", "--scheme", "esq-tilde3", "--h", "0.05", "--out", str(p), "--plot")
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].with_suffix(".svg").read_bytes() == paths[1].with_suffix(".svg").read_bytes()


def test_model_file(tmp_path, capsys):
    f = tmp_path / "m.txt"
    f.write_text("2 1\n0 2\n-2 0\n0 0\n0 0.5\n0\n1\n")
    code, out, _ = run(capsys, "run", "--model-file", str(f), "--scheme", "pbs4-a", "--h", "0.25", "--t-end", "1")
    assert code == 0 and len(out.splitlines()) == 6
    f.write_text("2 0\n0 2\n2 0\n0 0\n0 0.5\n")
    assert run(capsys, "run", "--model-file", str(f), "--scheme", "ea5-a", "--h", "0.25")[0] == 2


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", "3")
    assert code == 0 and "FAIL" not in out


def test_numeric_failure_exit(monkeypatch, capsys):
    from phsplit import diagnostics
    from phsplit.errors import StepError

    def boom(*a, **k):
        raise StepError("overflow", 4)

    monkeypatch.setattr(diagnostics, "dissipation_study", boom)
    assert run(capsys, "run", "--scheme", "ea5-a", "--h", "0.1")[0] == 3
