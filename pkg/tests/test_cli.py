import json

import pytest

from vesubdiff import cli
from vesubdiff.errors import ConfigError, NumericalError


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_sections_and_defaults(tmp_path):
    p = _write(tmp_path, "[t1]\nexample = 1\nalpha0 = 0.5\n\n"
                         "[t4]\nexample = 2\nalpha0 = 0.3\nalphaT = 0.7\naxis = space  # comment\n")
    a, b = cli.parse_config(p)
    assert a.name == "t1" and a.ladder() == [64, 128, 256, 512] and a.grading == 3.0
    assert b.axis == "space" and b.dim == 2 and b.fixed_resolution == 128


def test_parse_headerless(tmp_path):
    (cfg,) = cli.parse_config(_write(tmp_path, "example=1\nalpha0=0.3\nlevels=2\nN=32\n"))
    assert cfg.ladder() == [32, 64]


@pytest.mark.parametrize("text,key", [
    ("[a]\nexample=1\nalpha0=0.5\nbogus=1\n", "bogus"),
    ("[a]\nexample=1\n", "alpha0"),
    ("[a]\nexample=1\nalpha0=abc\n", "alpha0"),
    ("[a]\nexample=1\nalpha0=0.5\nN=12.5\n", "N"),
    ("[a]\nexample=1\nalpha0=0.5\naxis=sideways\n", "axis"),
    ("[a]\nexample=2\nalpha0=0.5\n", "alphaT"),
    ("", "config"),
])
def test_parse_errors_name_key(tmp_path, text, key):
    with pytest.raises(ConfigError) as exc:
        cli.parse_config(_write(tmp_path, text))
    assert exc.value.key == key


def test_sweep_writes_deterministic_tables(tmp_path, capsys):
    p = _write(tmp_path, "[run]\nexample=1\nalpha0=0.5\nN=16\nJ=8\nlevels=2\n")
    out1, out2 = tmp_path / "o1", tmp_path / "nested" / "o2"
    assert cli.main(["sweep", "--config", str(p), "--out", str(out1), "--jobs", "2"]) == 0
    assert cli.main(["sweep", "--config", str(p), "--out", str(out2), "--jobs", "1"]) == 0
    csv1 = (out1 / "example1_time_0.5.csv").read_bytes()
    assert csv1 == (out2 / "example1_time_0.5.csv").read_bytes()
    assert csv1.decode().startswith("resolution,error,rate\n16,")
    assert "× 10" in (out1 / "example1_time_0.5.md").read_text()
    assert "| N | error | rate |" in capsys.readouterr().out


def test_solve_writes_final_state(tmp_path):
    p = _write(tmp_path, "[s]\nexample=2\nalpha0=0.4\nalphaT=0.8\nN=8\nJ=4\n")
    assert cli.main(["solve", "--config", str(p), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "example2_time_0.4_0.8_N8_J4_solution.csv").read_text().splitlines()
    assert lines[0] == "x,y,u"
    assert len(lines) == 1 + 9


def test_check_reports_json(tmp_path):
    assert cli.main(["check", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "invariants.json").read_text())
    assert report["passed"] is True


def test_exit_codes(tmp_path, monkeypatch, capsys):
    bad = _write(tmp_path, "[a]\nexample=1\nalpha0=1.5\n")
    assert cli.main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "alpha0" in capsys.readouterr().err
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.ini"), "--out", "x"]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", "--out", "x"])
    assert exc.value.code == 1

    good = _write(tmp_path, "[a]\nexample=1\nalpha0=0.5\nN=8\nJ=4\n", "good.ini")

    def boom(spec):
        raise NumericalError("singular step")

    monkeypatch.setattr(cli, "solve_problem", boom)
    assert cli.main(["solve", "--config", str(good), "--out", str(tmp_path)]) == 2

    monkeypatch.setattr(cli, "run_invariant_suite",
                        lambda: {"passed": False, "checks": [
                            {"name": "x", "passed": False, "value": 1.0, "tolerance": 0.0}]})
    assert cli.main(["check"]) == 3
