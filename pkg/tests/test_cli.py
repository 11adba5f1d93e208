import csv
import io
import json

import pytest

from ruinkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_params(capsys):
    code, out, _ = run(capsys, "params")
    assert code == 0
    vals = {r["name"]: float(r["value"]) for r in rows(out)}
    assert vals["p"] == pytest.approx(3.414214, rel=1e-6)
    assert vals["w_l"] == pytest.approx(14.6447, abs=1e-4)
    code, out, _ = run(capsys, "params", "--format", "json")
    assert json.loads(out)["B2"] == pytest.approx(-1.414214, rel=1e-6)


@pytest.mark.parametrize(
    "criterion, w, m, expected",
    [("psi", 25, 25, 0.0938036), ("V", 25, 25, 1.9427353), ("V", 50, 10, 0.0), ("phi", 0, 0, None)],
)
def test_value(capsys, criterion, w, m, expected):
    code, out, _ = run(capsys, "value", "--criterion", criterion, "--w", str(w), "--m", str(m))
    assert code == 0
    rec = json.loads(out)
    if expected is not None:
        assert rec["value"] == pytest.approx(expected, abs=1e-7)
    else:
        assert 0 < rec["value"] < 1


def test_value_no_borrow(capsys):
    code, out, _ = run(capsys, "value", "--criterion", "psi", "--w", "25", "--no-borrow")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.11066, abs=5e-5)
    code, _, err = run(capsys, "value", "--criterion", "V", "--w", "25", "--no-borrow")
    assert code == 3 and "mode" in json.loads(err)["message"]


def test_exit_codes(capsys):
    code, _, err = run(capsys, "bogus")
    assert code == 2
    assert json.loads(err)["error"] == "usage"
    code, _, err = run(capsys, "value", "--criterion", "psi", "--w", "25", "--mu", "0.01")
    assert code == 3
    assert "mu > r" in json.loads(err)["message"]
    code, _, err = run(capsys, "value", "--criterion", "psi", "--w", "1", "--m", "2")
    assert code == 3


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("mu = 0.06\nr = 0.02\nsigma = 0.2\nlambda = 0.04\nc = 1\nx = 10\n")
    _, out, _ = run(capsys, "value", "--config", str(cfg), "--criterion", "psi", "--w", "25")
    from_file = json.loads(out)["value"]
    _, out, _ = run(capsys, "value", "--config", str(cfg), "--x", "0", "--criterion", "psi", "--w", "25")
    assert json.loads(out)["value"] == pytest.approx(0.0938036, abs=1e-7)
    assert from_file > 0.0938036
    bad = tmp_path / "bad.cfg"
    bad.write_text("mu = abc\n")
    code, _, err = run(capsys, "params", "--config", str(bad))
    assert code == 3 and "mu" in json.loads(err)["message"]


def test_figure1_shape(capsys):
    code, out, _ = run(capsys, "figure1")
    assert code == 0
    data = [(float(r["w"]), float(r["pi_phi"]), float(r["pi_psi"])) for r in rows(out)]
    for w, a, b in data:
        if -200 < w < 0:
            assert a > b
        elif 0 <= w <= 49.5:
            assert a == b
    left = [a for w, a, _ in data if -1e-3 < w < 0]
    right = [a for w, a, _ in data if w == 0]
    assert left and right and left[-1] - right[0] > 100


def test_csv_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["strategy", "--criterion", "U", "-o", str(a)]) == 0
    assert main(["strategy", "--criterion", "U", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().startswith(b"w,pi_U,pi_psi")


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--criterion", "V", "--w-min", "0", "--w-max", "10", "--w-step", "5")
    assert code == 0
    assert len(rows(out)) == 3
    code, out, _ = run(
        capsys, "sweep", "--criterion", "V", "--no-borrow", "--mode", "borrow",
        "--w-min", "0", "--w-max", "10", "--w-step", "5", "--m-min", "-5", "--m-max", "0", "--m-step", "5",
    )
    assert code == 0
    table = rows(out)
    assert {"w", "m", "psi_nb", "V_nb", "pi_nb"} <= set(table[0])
    assert all(float(r["m"]) <= float(r["w"]) for r in table)


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--criterion", "psi", "--w", "25", "--paths", "2000", "--dt", "0.1")
    assert code == 0
    rec = json.loads(out)
    assert set(rec) == {"estimate", "se", "benchmark", "z_score"}
    assert rec["benchmark"] == pytest.approx(0.0938036, abs=1e-7)


def test_simulate_strategy_file(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("w,pi\n-100,10\n50,10\n")
    code, out, _ = run(
        capsys, "simulate", "--criterion", "psi", "--w", "25", "--paths", "2000", "--dt", "0.1",
        "--strategy", "file", "--strategy-file", str(f),
    )
    assert code == 0
    assert json.loads(out)["benchmark"] is None
