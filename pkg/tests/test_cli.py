import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from fnls import spectral
from fnls.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_VERDICT, main
from fnls.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)
from fnls.plot import boundary_strip, energy_chart, fiber_chart
from fnls.report import (
    SCHEMA,
    SERIES_HEADER,
    dumps_report,
    make_report,
    read_series,
    series_csv,
    strip_timing,
    to_plain,
    write_report,
)
from fnls.spectral import load_field

BOUND_ARGS = ["--dim", "1", "--s", "1", "--p", "8", "--n", "1024", "--L", "20",
              "--family", "inverse_power_well", "--mu", "0.05", "--q", "0.5"]


def _load(path):
    return json.loads(path.read_text())


@pytest.fixture(autouse=True)
def _reset_threads():
    yield
    spectral.set_threads(None)


# -- exit codes -------------------------------------------------------------------------


def test_ground_classical(tmp_path):
    field, report = tmp_path / "w.fld", tmp_path / "g.json"
    code = main(["ground", "--dim", "1", "--s", "1.0", "--p", "3", "--n", "4096", "--L", "40",
                 "--out", str(field), "--report", str(report)])
    assert code == EXIT_OK
    w = load_field(field)
    x = w.grid.axis
    assert np.max(np.abs(w.values - 1.5 / np.cosh(x / 2) ** 2)) <= 1e-6 * 1.5
    rep = _load(report)
    assert rep["schema"] == SCHEMA and rep["status"] == "pass"
    assert rep["results"]["c0"] == pytest.approx(math.sqrt(6), rel=1e-8)


def test_check_potential_failing_well(tmp_path, capsys):
    pot = tmp_path / "pot.json"
    pot.write_text(json.dumps({"family": "inverse_power_well", "mu": 0.3, "q": 1.0}))
    report = tmp_path / "c.json"
    code = main(["check-potential", "--config", str(pot), "--s", "0.5", "--p", "3.5", "--dim", "2",
                 "--n", "128", "--L", "20", "--report", str(report)])
    assert code == EXIT_VERDICT
    rep = _load(report)
    a1 = next(v for v in rep["verdicts"] if v["name"] == "A1")
    assert a1["passed"] is False
    assert "A1" in rep["failed"]
    assert "FAIL  A1" in capsys.readouterr().out


def test_check_potential_admissible_well(tmp_path):
    report = tmp_path / "c.json"
    code = main(["check-potential", "--dim", "2", "--s", "0.5", "--p", "3.5", "--n", "128", "--L", "20",
                 "--family", "inverse_power_well", "--mu", "0.05", "--q", "1", "--report", str(report)])
    assert code == EXIT_OK
    consts = _load(report)["results"]["constants"]
    assert consts["lambda0"] == pytest.approx(2.4)
    assert consts["three_theta"] == pytest.approx(3.0)


def test_verify_minimax(tmp_path):
    report = tmp_path / "v.json"
    assert main(["verify", "--suite", "minimax", "--report", str(report)]) == EXIT_OK
    rep = _load(report)
    assert rep["status"] == "pass"
    text = json.dumps(rep["results"])
    assert "min_value" in text and "bound" in text


def test_config_error_window(tmp_path):
    report = tmp_path / "e.json"
    code = main(["scale", "--dim", "2", "--s", "0.5", "--p", "3.0", "--n", "64", "--L", "10", "--report", str(report)])
    assert code == EXIT_CONFIG
    rep = _load(report)
    assert rep["results"]["error"]["kind"] == "config_error"
    assert rep["status"] == "fail"


@pytest.mark.parametrize("args", [["--n", "7"], ["--L", "-1"], ["--tol", "0"], ["--config", "/nonexistent.json"]])
def test_config_errors(args):
    assert main(["ground", *args]) == EXIT_CONFIG


def test_solver_error(tmp_path):
    report = tmp_path / "e.json"
    code = main(["ground", "--dim", "1", "--s", "1", "--p", "3", "--n", "256", "--L", "20",
                 "--ground-max-iter", "2", "--report", str(report)])
    assert code == EXIT_SOLVER
    assert _load(report)["results"]["error"]["kind"] == "solver_error"


def test_missing_field_is_config_error(tmp_path):
    assert main(["plot", "--kind", "fiber", "--field", str(tmp_path / "none.fld")]) == EXIT_CONFIG


# -- bound run artifacts ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def bound_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("bound")
    paths = {k: d / f"{k}" for k in ("r1.json", "r2.json", "s.csv", "u.fld")}
    code1 = main(["bound", *BOUND_ARGS, "--report", str(paths["r1.json"]), "--series", str(paths["s.csv"]),
                  "--out", str(paths["u.fld"])])
    code2 = main(["bound", *BOUND_ARGS, "--report", str(paths["r2.json"])])
    return d, paths, code1, code2


def test_bound_exit_ok(bound_run):
    _, paths, code1, code2 = bound_run
    assert code1 == EXIT_OK and code2 == EXIT_OK
    rep = _load(paths["r1.json"])
    sol = rep["results"]["solution"]
    assert sol["tangent_res"] <= 1e-6
    assert sol["windows"]["lambda_in_window"] and sol["windows"]["energy_in_window"]


def test_reports_identical_modulo_timing(bound_run):
    _, paths, _, _ = bound_run
    r1, r2 = _load(paths["r1.json"]), _load(paths["r2.json"])
    # the output block differs only because the first run asked for extra files
    for r in (r1, r2):
        r["config"]["output"] = None
    assert dumps_report(strip_timing(r1)) == dumps_report(strip_timing(r2))
    assert "timing" in r1


def test_identical_invocations_byte_identical(tmp_path):
    texts = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid": {"d": 1, "n": 512, "L": 20}, "phys": {"s": 1.0, "p": 3.0},
                                   "output": {"report": str(tmp_path / "same.json")}}))
        assert main(["ground", "--config", str(cfg)]) == EXIT_OK
        rep = _load(tmp_path / "same.json")
        texts.append(dumps_report(strip_timing(rep)))
        out.write_text(texts[-1])
    assert texts[0] == texts[1]


def test_series_csv(bound_run):
    _, paths, _, _ = bound_run
    lines = paths["s.csv"].read_text().splitlines()
    assert tuple(lines[0].split(",")) == SERIES_HEADER
    rows = read_series(paths["s.csv"])
    assert len(rows) == len(lines) - 1
    assert rows[-1][2] <= 1e-6


def test_no_temp_files_left(bound_run):
    d, _, _, _ = bound_run
    assert not [p for p in os.listdir(d) if p.startswith(".tmp-")]


def test_svg_plots_deterministic(bound_run, tmp_path):
    _, paths, _, _ = bound_run
    pot = ["--s", "1", "--p", "8", "--family", "inverse_power_well", "--mu", "0.05", "--q", "0.5"]
    jobs = [
        ["--kind", "energy", "--series", str(paths["s.csv"])],
        ["--kind", "fiber", "--field", str(paths["u.fld"]), *pot],
        ["--kind", "boundary", "--field", str(paths["u.fld"]), "--dim", "1", *pot],
    ]
    for i, job in enumerate(jobs):
        a, b = tmp_path / f"{i}a.svg", tmp_path / f"{i}b.svg"
        assert main(["plot", *job, "--out", str(a)]) == EXIT_OK
        assert main(["plot", *job, "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().lstrip().startswith("<?xml")


def test_plot_requires_inputs():
    assert main(["plot", "--kind", "energy"]) == EXIT_CONFIG
    assert main(["plot", "--kind", "fiber"]) == EXIT_CONFIG


# -- threads -----------------------------------------------------------------------------------


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FNLS_THREADS", "2")
    assert main(["verify", "--suite", "minimax"]) == EXIT_OK
    assert spectral.fft_workers() == 2


def test_threads_flag_wins(monkeypatch):
    monkeypatch.setenv("FNLS_THREADS", "2")
    assert main(["verify", "--suite", "minimax", "--threads", "1"]) == EXIT_OK
    assert spectral.fft_workers() == 1


def test_threads_env_invalid(monkeypatch):
    monkeypatch.setenv("FNLS_THREADS", "many")
    assert main(["verify", "--suite", "minimax"]) == EXIT_CONFIG


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "fnls.cli", "verify", "--suite", "minimax"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "pass" in proc.stdout


# -- config and report helpers -------------------------------------------------------------------


def test_config_blocks_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"d": 2, "n": 64, "L": 8}, "phys": {"s": 0.5, "p": 3.5}, "seed": 4}))
    cfg = load_config(path)
    assert (cfg.grid.d, cfg.grid.n, cfg.grid.L, cfg.seed) == (2, 64, 8, 4)
    apply_overrides(cfg, {"grid.n": 128, "phys.p": None, "potential.mu": 0.05})
    assert cfg.grid.n == 128 and cfg.phys.p == 3.5 and cfg.potential["mu"] == 0.05


def test_config_bare_potential_block():
    cfg = config_from_dict({"family": "inverse_power_well", "mu": 0.3, "q": 1.0})
    assert cfg.potential["mu"] == 0.3


@pytest.mark.parametrize("data", [{"grid": {"bogus": 1}}, {"extra": {}}, [1, 2]])
def test_config_rejects_unknown(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_config_validation():
    with pytest.raises((ConfigError, ValueError)):
        config_from_dict({"solver": {"tol_grad": -1.0}}).validate()
    cfg = RunConfig().validate()
    assert cfg.to_dict()["grid"]["n"] == 1024
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), {"grid.bogus": 1})


def test_to_plain_nonfinite():
    out = to_plain({"a": np.float64("nan"), "b": np.array([1, 2]), "c": (np.inf, -np.inf), "d": np.bool_(True)})
    assert out == {"a": "nan", "b": [1, 2], "c": ["inf", "-inf"], "d": True}


def test_report_status_and_atomic_write(tmp_path):
    rep = make_report("x", {}, {"v": 1.0}, [{"name": "ok", "passed": True}, {"name": "bad", "passed": False},
                                             {"name": "skip", "passed": None}], {"wall_seconds": 1.0})
    assert rep["status"] == "fail" and rep["failed"] == ["bad"]
    path = tmp_path / "sub" / "r.json"
    write_report(rep, path)
    assert json.loads(path.read_text())["results"] == {"v": 1.0}
    assert os.listdir(path.parent) == ["r.json"]


def test_series_round_trip(tmp_path):
    hist = [(0, 1.5, 1e-2, 1e-3, -0.9), (1, 1.4, 1e-4, -1e-5, -0.95)]
    text = series_csv(hist)
    assert text.splitlines()[0] == ",".join(SERIES_HEADER)
    path = tmp_path / "s.csv"
    path.write_text(text)
    rows = read_series(path)
    assert [r[0] for r in rows] == [0, 1]
    assert rows[1][1:] == pytest.approx(hist[1][1:], rel=1e-15)


def test_chart_functions_are_pure():
    hist = [(i, 1.0 / (i + 1), 10.0**-i, 0.0, -1.0) for i in range(5)]
    assert energy_chart(hist) == energy_chart(hist)
    hs = np.linspace(-1, 1, 11)
    assert fiber_chart(hs, hs**2, 0.0) == fiber_chart(hs, hs**2, 0.0)
    vals = np.outer(np.arange(3), hs)
    assert boundary_strip(hs, np.arange(3), vals) == boundary_strip(hs, np.arange(3), vals)
