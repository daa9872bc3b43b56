import csv
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from spinflip_lgi.analysis import crossover_angle, partial_sign_change_angles
from spinflip_lgi.cli import main
from spinflip_lgi.runner import (
    CALIBRATION_COLUMNS,
    CHARACTERISTIC_COLUMNS,
    DISTRIBUTION_COLUMNS,
    PARTIAL_COLUMNS,
    ConfigError,
    RunConfig,
    derive_seed,
    run_calibration_sweep,
    run_main_experiment,
)
from spinflip_lgi.schemas import LGI_REPORT, VISIBILITY_FIT

from conftest import INTRINSIC_MP, V_HV, V_PM

OUTPUTS = ("calibration.csv", "visibility_fit.json", "pexp.csv", "ppsi.csv", "partial.csv",
           "characteristic.csv", "lgi_report.json")


def full_run(tmp_path, **kw):
    config = RunConfig(output_dir=str(tmp_path), **kw)
    points, fit = run_calibration_sweep(config)
    return config, points, fit, run_main_experiment(config, fit, points)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    return full_run(tmp_path_factory.mktemp("default"))


def test_same_seed_gives_identical_files(tmp_path):
    full_run(tmp_path / "a", bootstrap_replicates=100, base_seed=5)
    full_run(tmp_path / "b", bootstrap_replicates=100, base_seed=5, jobs=4)
    full_run(tmp_path / "c", bootstrap_replicates=100, base_seed=6)
    for name in OUTPUTS:
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        if name == "lgi_report.json":
            a, b = json.loads(a), json.loads(b)
            for d in (a, b):
                d["config"].pop("jobs"), d["config"].pop("output_dir")
        assert a == b, name
    assert (tmp_path / "a" / "pexp.csv").read_bytes() != (tmp_path / "c" / "pexp.csv").read_bytes()


def test_derive_seed_separates_streams():
    seeds = {derive_seed(0, i, s, g) for i in range(11) for s in range(4) for g in (1, -1)}
    assert len(seeds) == 11 * 4 * 2


def test_output_layout(default_run):
    config, *_ = default_run
    out = config.output_dir
    n = len(config.theta_sweep)
    for name, cols in (
        ("calibration.csv", CALIBRATION_COLUMNS),
        ("pexp.csv", DISTRIBUTION_COLUMNS),
        ("ppsi.csv", DISTRIBUTION_COLUMNS),
        ("partial.csv", PARTIAL_COLUMNS),
        ("characteristic.csv", CHARACTERISTIC_COLUMNS),
    ):
        rows = read_rows(f"{out}/{name}")
        assert tuple(rows[0]) == cols
        assert len(rows) == n + 1
        assert all(len(r) == len(cols) for r in rows)
    assert tuple(read_rows(f"{out}/pexp.csv")[0][1:]) == ("pp", "pp_se", "mp", "mp_se", "pm", "pm_se", "mm", "mm_se")
    jsonschema.validate(json.load(open(f"{out}/visibility_fit.json")), VISIBILITY_FIT)
    report = json.load(open(f"{out}/lgi_report.json"))
    jsonschema.validate(report, LGI_REPORT)
    assert "bootstrap" in report["error_method"]


def test_default_run_reproduces_intrinsic_negativity(default_run):
    _, _, fit, result = default_run
    assert abs(fit.v_pm - V_PM) < 0.01
    for r in result.points:
        assert r.ok
        assert abs(r.ppsi.mean[(-1, 1)] - INTRINSIC_MP) < 3 * r.ppsi.stderr[1]
        assert r.pexp[(-1, 1)] >= 0
    summary = result.report["summary"]
    assert summary["violated_at_all_points"]
    assert summary["singular_theta_deg"] == []


def test_default_run_characteristic_angles(default_run):
    config, _, fit, result = default_run
    found = crossover_angle(config.theta_sweep, [r.pexp for r in result.points])
    assert abs(found - math.degrees(0.25 * math.atan(V_HV / V_PM))) <= 0.2
    t_eps, t_eta = (math.degrees(t) for t in partial_sign_change_angles(config.phi, fit.v_pm, fit.v_hv))
    assert 15 <= t_eta <= 17
    assert 6 <= t_eps <= 8


def test_exact_mode_recovers_configured_visibilities(tmp_path):
    _, _, fit, result = full_run(tmp_path, exact=True)
    assert fit.v_pm == pytest.approx(V_PM, abs=1e-12)
    assert fit.v_hv == pytest.approx(V_HV, abs=1e-12)
    for r in result.points:
        assert r.ppsi.mean[(-1, 1)] == pytest.approx(INTRINSIC_MP, abs=1e-6)
        assert np.all(r.ppsi.stderr == 0)
    assert result.report["error_method"].startswith("exact")


def test_exact_mode_partial_columns(tmp_path):
    config, _, _, result = full_run(tmp_path, exact=True, theta_sweep=(16.0, 17.0))
    rows = read_rows(tmp_path / "partial.csv")[1:]
    peta = [float(r[4]) for r in rows]
    assert peta[0] < 0 < peta[1]  # P_eta crosses zero between 16 and 17 degrees


def test_singular_point_is_reported_not_raised(tmp_path):
    _, _, _, result = full_run(tmp_path, exact=True, theta_sweep=(0.0, 12.0))
    assert result.any_singular
    report = json.load(open(tmp_path / "lgi_report.json"))
    jsonschema.validate(report, LGI_REPORT)
    assert report["summary"]["singular_theta_deg"] == [0.0]
    assert report["points"][0]["status"] == "singular"
    assert read_rows(tmp_path / "ppsi.csv")[1][1] == "nan"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"theta_sweep": ()},
        {"theta_sweep": (30.0,)},
        {"v_pm": 1.5},
        {"photons_per_setting": 0},
        {"bootstrap_replicates": 1},
        {"jobs": 0},
        {"phi_degrees": math.inf},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_unknown_config_field():
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_mapping({"nope": 1})


# ---------------------------------------------------------------- CLI


def test_cli_full_then_run(tmp_path, capsys):
    args = ["--out", str(tmp_path), "--bootstrap-replicates", "50", "--theta-sweep", "8,12,16"]
    assert main(["calibrate", *args]) == 0
    assert main(["run", *args]) == 0
    assert "min LGI margin" in capsys.readouterr().out
    assert len(read_rows(tmp_path / "ppsi.csv")) == 4


def test_cli_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta_sweep": [10, 14], "exact": True, "v_pm": 0.9}))
    assert main(["full", "--config", str(cfg), "--out", str(tmp_path), "--v-pm", "0.8"]) == 0
    fit = json.load(open(tmp_path / "visibility_fit.json"))
    assert fit["v_pm"] == pytest.approx(0.8)
    assert fit["exact"] is True


@pytest.mark.parametrize(
    "argv, code",
    [
        (["full", "--theta-sweep", ""], 2),
        (["full", "--v-pm", "2"], 2),
        (["full", "--exact", "--theta-sweep", "0,12"], 3),
    ],
)
def test_cli_exit_codes(tmp_path, argv, code):
    assert main([*argv, "--out", str(tmp_path)]) == code


def test_cli_run_without_calibration(tmp_path):
    assert main(["run", "--out", str(tmp_path / "empty")]) == 4


def test_cli_bad_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["full", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["full", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "spinflip_lgi", "full", "--exact", "--theta-sweep", "12", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "lgi_report.json").exists()
