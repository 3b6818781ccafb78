import json
import math

import pytest

from casimir_pfa import cli, specfun
from casimir_pfa.core import ConfigurationError

FIG2_HEADER = "# x,f0_te_exact_per_kBT,f0_te_asympt_per_kBT,difference"


def _run(tmp_path, argv, name="out.csv"):
    out = tmp_path / name
    code = cli.main(list(argv) + ["--out", str(out)])
    return code, out.read_text()


def _data(text):
    return [[float(v) for v in ln.split(",")] for ln in text.splitlines()
            if ln and not ln.startswith("#")]


@pytest.fixture(scope="module")
def fig2_text(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2") / "fig2.csv"
    code = cli.main(["fig2", "--x", "0.1", "0.05", "0.02", "0.01", "--out", str(out)])
    assert code == cli.EXIT_OK
    return out.read_text()


def test_fig2_header_line(fig2_text):
    lines = fig2_text.splitlines()
    assert FIG2_HEADER in lines
    assert lines[0].startswith("# casimir-pfa ")
    assert any(ln.startswith("# run: ") for ln in lines)
    assert any("unhalved" in ln for ln in lines if ln.startswith("# convention:"))


def test_fig2_difference_decreases(fig2_text):
    diff = [r[3] for r in _data(fig2_text)]
    assert len(diff) == 4
    assert all(a > b for a, b in zip(diff, diff[1:]))


def test_fig2_rows_are_consistent(fig2_text):
    for x, ex, asym, diff in _data(fig2_text):
        assert diff == ex - asym


def test_json_roundtrip_is_bit_exact(tmp_path):
    code_c, csv_text = _run(tmp_path, ["fig3", "--points", "4"], "a.csv")
    code_j, json_text = _run(tmp_path, ["fig3", "--points", "4", "--format", "json"], "a.json")
    assert code_c == code_j == cli.EXIT_OK
    doc = json.loads(json_text)
    assert doc["columns"] == ["tau", "delta_formula", "delta_assembled", "delta_n_positive"]
    assert doc["rows"] == _data(csv_text)
    cols, rows = cli.read_table(str(tmp_path / "a.json"))
    assert rows == _data(csv_text)


def test_csv_floats_roundtrip():
    for v in (math.pi, 1e-300, -1.191e-3, 0.1 + 0.2):
        assert float(cli._fmt(v)) == v


def test_fig3_signs_default_grid(tmp_path):
    code, text = _run(tmp_path, ["fig3"])
    assert code == cli.EXIT_OK
    rows = _data(text)
    assert len(rows) == 12
    assert rows[0][0] == pytest.approx(1e-2) and rows[-1][0] == pytest.approx(0.3)
    assert all(r[1] < 0 and r[3] > 0 for r in rows)
    assert any("analytic curves only" in ln for ln in text.splitlines())


def test_fig3_deterministic_across_workers(tmp_path):
    _, one = _run(tmp_path, ["fig3", "--points", "6", "--workers", "1"], "w1.csv")
    _, many = _run(tmp_path, ["fig3", "--points", "6", "--workers", "3"], "w3.csv")
    assert one == many


def test_reference_mode(tmp_path, capsys):
    _, text = _run(tmp_path, ["fig3", "--points", "3"], "ref.csv")
    ref = tmp_path / "ref.csv"
    assert cli.main(["fig3", "--points", "3", "--out", str(tmp_path / "x.csv"),
                     "--reference", str(ref)]) == cli.EXIT_OK
    assert "max relative deviation" in capsys.readouterr().err

    lines = text.splitlines()
    i = next(k for k, ln in enumerate(lines) if not ln.startswith("#"))
    vals = lines[i].split(",")
    vals[2] = repr(float(vals[2]) * 1.01)
    lines[i] = ",".join(vals)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert cli.main(["fig3", "--points", "3", "--out", str(tmp_path / "y.csv"),
                     "--reference", str(bad)]) == cli.EXIT_FAIL


def test_reference_grid_mismatch(tmp_path):
    _run(tmp_path, ["fig3", "--points", "3"], "ref.csv")
    code = cli.main(["fig3", "--points", "4", "--out", str(tmp_path / "z.csv"),
                     "--reference", str(tmp_path / "ref.csv")])
    assert code == cli.EXIT_CONFIG


@pytest.mark.parametrize("argv", [
    ["fig3", "--rtol", "1e-3"],
    ["fig3", "--rtol", "1e-16"],
    ["fig3", "--tau-min", "0.3", "--tau-max", "0.01"],
    ["fig3", "--points", "1"],
    ["delta"],
    ["delta", "--tau", "0.1", "0.2"],
    ["fig3", "--workers", "0"],
    ["delta", "--x", "2.0", "--tau", "0.1"],
])
def test_configuration_errors_exit_2(tmp_path, argv):
    assert cli.main(argv + ["--out", str(tmp_path / "c.csv")]) == cli.EXIT_CONFIG


def test_runspec_invariants():
    with pytest.raises(ConfigurationError):
        cli.RunSpec("fig9")
    with pytest.raises(ConfigurationError):
        cli.RunSpec("fig3", rtol=1e-5)
    with pytest.raises(ConfigurationError):
        cli.log_grid(1.0, 1.0, 3)


def test_non_convergence_flags_row_and_continues(tmp_path):
    code, text = _run(tmp_path, ["fig2", "--x", "0.1", "0.2", "--nystrom-nodes", "20",
                                  "--rtol", "1e-14"])
    assert code == cli.EXIT_NUMERIC
    rows = _data(text)
    assert len(rows) == 2
    assert any(math.isnan(v) for r in rows for v in r[1:])
    assert any(ln.startswith("# flagged row") for ln in text.splitlines())


def test_other_commands_run(tmp_path):
    assert _run(tmp_path, ["delta", "--tau", "0.03"], "d.csv")[0] == cli.EXIT_OK
    code, text = _run(tmp_path, ["entropy"], "e.csv")
    assert code == cli.EXIT_OK and len(_data(text)) == 4
    code, text = _run(tmp_path, ["spa-demo"], "s.csv")
    rows = _data(text)
    assert code == cli.EXIT_OK
    assert all(abs(r[1] - 1 / 12) < 1e-6 and abs(r[4] + 3 * cli.QUARTIC_ALPHA) < 1e-6 for r in rows)


def test_validate_passes_and_reports_audit(tmp_path):
    code, text = _run(tmp_path, ["validate"], "v.json")
    report = json.loads(text)
    assert code == cli.EXIT_OK
    assert report["passed"] is True
    assert report["coefficient_audit"]["consistent"] is True
    assert all(c["passed"] for c in report["checks"])


def test_validate_detects_corrupted_zeta3(tmp_path, monkeypatch):
    monkeypatch.setattr(specfun, "ZETA3", specfun.ZETA3 * (1 + 1e-6))
    code, text = _run(tmp_path, ["validate"], "v.json")
    report = json.loads(text)
    assert code != cli.EXIT_OK
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert any("trilog" in n for n in failed)
