import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from layercalc.cli import main
from layercalc.errors import ConfigError
from layercalc.runner import (
    EXIT_CONFIG,
    EXIT_FAILED,
    EXIT_OK,
    decode_vector,
    execute,
    parse_tol_overrides,
    validate_config,
    validate_report,
)

ROOT = Path(__file__).resolve().parents[1]


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(tmp_path, cfg, *args, mode="verify"):
    out = tmp_path / "out"
    code = main([mode, "--config", write(tmp_path, cfg), "--out", str(out), "--no-timestamp", *args])
    report = json.loads((out / "report.json").read_text()) if (out / "report.json").exists() else None
    return code, report, out


ABSTRACT0 = {"instance": {"abstract": {"seed": 0, "dims": [2, 2, 1, 1]}}, "suites": ["conditions"]}
LAPLACE = {"instance": {"preset": "laplace-1d-quarter"}}


# -- verify ----------------------------------------------------------------------

def test_conditions_on_small_abstract_instance(tmp_path):
    code, report, out = run_cli(tmp_path, ABSTRACT0)
    assert code == EXIT_OK
    cond = report["suites"]["conditions"]
    assert cond["passed"]
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert len([r for r in rows if r["suite"] == "conditions"]) == 3
    assert all(r["passed"] == "True" for r in rows)


def test_negative_tolerance_is_a_config_error(tmp_path, capsys):
    cfg = {**ABSTRACT0, "tolerances": {"coercivity": -1.0}}
    code, report, _ = run_cli(tmp_path, cfg)
    assert code == EXIT_CONFIG and report is None
    assert "configuration error" in capsys.readouterr().err


def test_neumann_via_layers_on_laplace_fails_cleanly(tmp_path):
    cfg = {**LAPLACE, "solve": [{"kind": "neumann", "method": "layers", "side": "omega", "data": [1, -1]}]}
    code, report, _ = run_cli(tmp_path, cfg, mode="solve")
    assert code == EXIT_FAILED
    (s,) = report["solves"]
    assert s["status"] == "error" and s["error"]["type"] == "NotInvertible"
    assert s["error"]["sigma_min"] < 1e-12 and s["error"]["sigma_max"] == pytest.approx(0.25)


def test_solve_requests_report_solutions(tmp_path):
    cfg = {**LAPLACE, "solve": [
        {"kind": "dirichlet", "method": "direct", "side": "omega", "data": [1, 0], "label": "ramp"},
        {"kind": "dirichlet", "method": "layers", "side": "complement", "data": [[1, 0], [0, 1]]},
        {"kind": "neumann", "method": "direct", "side": "omega", "data": [1, -1]},
    ]}
    code, report, _ = run_cli(tmp_path, cfg, mode="solve")
    assert code == EXIT_OK
    ramp = report["solves"][0]
    assert ramp["label"] == "ramp"
    # complex entries are written as [re, im] pairs
    assert [re for re, _ in ramp["result"]["solution"]] == pytest.approx([1.0, 0.75, 0.5, 0.25, 0.0], abs=1e-12)
    assert all(im == 0.0 for _, im in ramp["result"]["solution"])
    assert report["solves"][1]["passed"]


def test_missing_config_file(tmp_path, capsys):
    code = main(["verify", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "nope.json" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {"suites": ["conditions"]},
    {"instance": {"preset": "laplace-1d-quarter"}, "suites": ["nonsense"]},
    {"instance": {"preset": "laplace-1d-quarter"}, "suites": ["conditions"], "tolerances": {"wat": 1.0}},
    {"instance": {"preset": "no-such-preset"}, "suites": ["conditions"]},
    {"instance": {"preset": "laplace-1d-quarter"}},
])
def test_invalid_configs(tmp_path, cfg):
    assert run_cli(tmp_path, cfg)[0] == EXIT_CONFIG


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["verify", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_wrong_data_length_is_config_error(tmp_path):
    cfg = {**LAPLACE, "solve": [{"kind": "dirichlet", "method": "direct", "data": [1, 2, 3]}]}
    assert run_cli(tmp_path, cfg, mode="solve")[0] == EXIT_CONFIG


def test_tol_override_flag(tmp_path):
    code, report, _ = run_cli(tmp_path, ABSTRACT0, "--tol", "locality=1e-3", "--tol", "invert=1e-6")
    assert code == EXIT_OK
    assert report["tolerances"]["locality"] == 1e-3 and report["tolerances"]["invert"] == 1e-6
    assert run_cli(tmp_path, ABSTRACT0, "--tol", "locality")[0] == EXIT_CONFIG
    assert run_cli(tmp_path, ABSTRACT0, "--tol", "bogus=1")[0] == EXIT_CONFIG
    assert run_cli(tmp_path, ABSTRACT0, "--tol", "green=0")[0] == EXIT_CONFIG


def test_parse_tol_overrides():
    assert parse_tol_overrides(["green=1e-8", "jump=2e-9"]) == {"green": 1e-8, "jump": 2e-9}
    for bad in (["green"], ["green=abc"], ["green=-1"], ["nope=1"]):
        with pytest.raises(ConfigError):
            parse_tol_overrides(bad)


def test_decode_vector():
    assert list(decode_vector([1, 2])) == [1, 2]
    assert list(decode_vector([[1, 2], [3, -4]])) == [1 + 2j, 3 - 4j]
    with pytest.raises(ConfigError):
        decode_vector([[1, 2, 3]])
    with pytest.raises(ConfigError):
        decode_vector([1, 2], dim=3)


# -- reports ----------------------------------------------------------------------

def test_reports_are_deterministic_and_valid(tmp_path):
    cfg = json.loads((ROOT / "presets" / "square-2d-complex.json").read_text())
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["verify", "--config", write(tmp_path, cfg), "--out", str(out), "--no-timestamp"]) == EXIT_OK
        outs.append(((out / "report.json").read_bytes(), (out / "report.csv").read_bytes()))
    assert outs[0] == outs[1]
    validate_report(json.loads(outs[0][0]))


def test_timestamp_present_by_default(tmp_path):
    out = tmp_path / "o"
    main(["verify", "--config", write(tmp_path, ABSTRACT0), "--out", str(out)])
    assert "timestamp" in json.loads((out / "report.json").read_text())


def test_output_names_from_config(tmp_path):
    cfg = {**ABSTRACT0, "output": {"dir": str(tmp_path / "custom"), "json": "r.json", "csv": "r.csv"}}
    assert main(["verify", "--config", write(tmp_path, cfg), "--no-timestamp"]) == EXIT_OK
    assert (tmp_path / "custom" / "r.json").exists() and (tmp_path / "custom" / "r.csv").exists()


def test_failed_checks_exit_two(tmp_path):
    # a coercivity threshold far above lambda fails the conditions suite
    cfg = {**ABSTRACT0, "tolerances": {"coercivity": 1e3}}
    code, report, _ = run_cli(tmp_path, cfg)
    assert code == EXIT_FAILED
    assert report["passed"] is False and report["exit_code"] == EXIT_FAILED


def test_config_schema_accepts_shipped_presets():
    for path in sorted((ROOT / "presets").glob("*.json")):
        validate_config(json.loads(path.read_text()))


def test_execute_rejects_unknown_mode():
    with pytest.raises(ConfigError):
        execute(ABSTRACT0, mode="dance")


# -- spectrum and presets -------------------------------------------------------

def test_spectrum(tmp_path):
    code, report, _ = run_cli(tmp_path, LAPLACE, mode="spectrum")
    assert code == EXIT_OK
    ops = {(o["kind"], o["side"]): o for o in report["spectrum"]["operators"]}
    assert ops[("TrS", "omega")]["invertible"]
    assert not ops[("MD", "omega")]["invertible"]
    assert ops[("MD", "omega")]["rank"] == 1
    assert ops[("TrS", "omega")]["singular_values"] == pytest.approx([1.0, 1.0])


def test_presets_subcommand(tmp_path, capsys):
    assert main(["presets", "--out", str(tmp_path)]) == EXIT_OK
    listed = json.loads(capsys.readouterr().out)
    names = {d["name"] for d in listed}
    assert "laplace-1d-quarter" in names
    for name in names:
        cfg = json.loads((tmp_path / f"{name}.json").read_text())
        validate_config(cfg)
        assert cfg == json.loads((ROOT / "presets" / f"{name}.json").read_text())


def test_thread_count_does_not_change_report(tmp_path, monkeypatch):
    cfg = json.loads((ROOT / "presets" / "abstract-small.json").read_text())
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("LAYERCALC_THREADS", threads)
        out = tmp_path / threads
        assert main(["verify", "--config", write(tmp_path, cfg), "--out", str(out), "--no-timestamp"]) == EXIT_OK
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]
    monkeypatch.setenv("LAYERCALC_THREADS", "zero")
    assert main(["verify", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "z")]) == EXIT_CONFIG


@pytest.mark.skipif(shutil.which("layercalc") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = write(tmp_path, ABSTRACT0)
    proc = subprocess.run(["layercalc", "verify", "--config", cfg, "--out", str(tmp_path / "o"), "--no-timestamp"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "layercalc.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "layercalc" in proc.stdout
