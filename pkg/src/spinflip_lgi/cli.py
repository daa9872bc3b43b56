"""Command-line entry point.

Verbs: ``calibrate``, ``run``, ``full`` (calibrate then run) and ``check``.
Exit codes: 0 success, 1 failed acceptance check, 2 configuration error,
3 singular reconstruction, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .calibration import DegenerateFit
from .runner import (
    ConfigError,
    RunConfig,
    fit_from_dict,
    read_calibration_csv,
    run_calibration_sweep,
    run_main_experiment,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SINGULAR, EXIT_IO = 0, 1, 2, 3, 4


def _theta_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of angles: {text!r}")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true")
    g = p.add_argument_group("run configuration (override --config)")
    g.add_argument("--config", type=Path, help="flat JSON file with RunConfig fields")
    g.add_argument("--seed", "--base-seed", "--base_seed", dest="base_seed", type=int)
    g.add_argument("--out", "--output-dir", "--output_dir", dest="output_dir")
    g.add_argument("--exact", action="store_true", default=None, help="use analytic probabilities, no sampling")
    g.add_argument("--phi-degrees", "--phi_degrees", dest="phi_degrees", type=float)
    g.add_argument("--theta-sweep", "--theta_sweep", dest="theta_sweep", type=_theta_list,
                   help="comma-separated plate angles in degrees")
    g.add_argument("--v-pm", "--v_pm", dest="v_pm", type=float)
    g.add_argument("--v-hv", "--v_hv", dest="v_hv", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--photons-per-setting", "--photons_per_setting", dest="photons_per_setting", type=int)
    g.add_argument("--bootstrap-replicates", "--bootstrap_replicates", dest="bootstrap_replicates", type=int)
    g.add_argument("--v-pm-sigma", "--v_pm_sigma", dest="v_pm_sigma", type=float)
    g.add_argument("--v-hv-sigma", "--v_hv_sigma", dest="v_hv_sigma", type=float)
    g.add_argument("--jobs", type=int, help="sweep points processed concurrently")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinflip-lgi",
        description="Simulate variable-strength sequential polarization measurements and "
        "reconstruct the intrinsic joint quasi-probability.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("calibrate", "simulate reference inputs and fit the visibilities"),
        ("run", "main experiment using the calibration in the output directory"),
        ("full", "calibrate, then run"),
    ):
        _add_run_options(sub.add_parser(name, help=help_text))
    sub.add_parser("check", help="run the acceptance checks").add_argument("-v", "--verbose", action="store_true")
    return parser


_RUN_FIELDS = (
    "base_seed", "output_dir", "exact", "phi_degrees", "theta_sweep", "v_pm", "v_hv", "delta",
    "photons_per_setting", "bootstrap_replicates", "v_pm_sigma", "v_hv_sigma", "jobs",
)


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    for name in _RUN_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    try:
        return RunConfig.from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _load_calibration(out: Path):
    fit_path, csv_path = out / "visibility_fit.json", out / "calibration.csv"
    try:
        fit = fit_from_dict(json.loads(fit_path.read_text()))
        points = read_calibration_csv(csv_path)
    except FileNotFoundError as exc:
        raise OSError(f"missing calibration file {exc.filename}; run 'calibrate' first") from exc
    return fit, points


def _run(config: RunConfig, fit, points) -> int:
    result = run_main_experiment(config, fit, points)
    summary = result.report["summary"]
    print(
        f"min LGI margin {summary['min_margin']} at theta={summary['min_margin_theta_deg']} deg; "
        f"outputs in {config.output_dir}"
    )
    if result.any_singular:
        print(f"singular reconstruction at theta = {summary['singular_theta_deg']}", file=sys.stderr)
        return EXIT_SINGULAR
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "check":
        from .acceptance import run_all

        results = run_all()
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED

    try:
        config = load_config(args)
        out = Path(config.output_dir)
        if args.command == "calibrate":
            _, fit = run_calibration_sweep(config)
            print(f"v_pm = {fit.v_pm:.6g} +- {fit.v_pm_se:.2g}, v_hv = {fit.v_hv:.6g} +- {fit.v_hv_se:.2g}")
            return EXIT_OK
        if args.command == "run":
            fit, points = _load_calibration(out)
            return _run(config, fit, points)
        points, fit = run_calibration_sweep(config)
        return _run(config, fit, points)
    except (ConfigError, DegenerateFit) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"singular reconstruction: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
