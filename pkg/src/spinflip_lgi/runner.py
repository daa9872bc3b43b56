"""Sweep driver: calibration runs, main runs and the datasets they produce."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import (
    CalibrationPoint,
    VisibilityFit,
    characteristic_residual,
    estimate_epsilon,
    estimate_eta,
    fit_visibilities,
)
from .distribution import CELL_LABELS, JointDistribution
from .lgi import evaluate_from_distribution
from .measurement import (
    ApparatusConfig,
    estimate_with_covariance,
    noisy_joint_distribution,
    simulate_counts,
)
from .qubit import prepare_linear_polarization
from .spinflip import (
    SingularError,
    invert_spin_flip_map,
    partial_invert_backaction_only,
    partial_invert_resolution_only,
)
from .uncertainty import (
    METHOD_LABEL,
    AllReplicatesSingular,
    BootstrapSpec,
    DistributionEstimate,
    bootstrap_reconstruction,
)

log = logging.getLogger(__name__)

DEFAULT_SWEEP = tuple(float(t) for t in range(2, 23, 2))

# Independent random streams within one sweep point.
STREAM_P_INPUT, STREAM_H_INPUT, STREAM_MAIN, STREAM_BOOTSTRAP = range(4)

P_INPUT = prepare_linear_polarization(np.pi / 4)
H_INPUT = prepare_linear_polarization(np.pi / 2)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    phi_degrees: float = 22.496
    theta_sweep: tuple = DEFAULT_SWEEP
    v_pm: float = 0.853
    v_hv: float = 0.9997
    delta: float = 0.0
    photons_per_setting: int = 1_000_000
    bootstrap_replicates: int = 1000
    v_pm_sigma: float = 0.010
    v_hv_sigma: float = 0.0001
    base_seed: int = 0
    output_dir: str = "out"
    exact: bool = False
    jobs: int = 1

    def __post_init__(self):
        self.theta_sweep = tuple(float(t) for t in self.theta_sweep)
        self.validate()

    def validate(self) -> None:
        if not self.theta_sweep:
            raise ConfigError("theta_sweep is empty")
        bad = [t for t in self.theta_sweep if not (0.0 <= t <= 22.5)]
        if bad:
            raise ConfigError(f"theta values {bad} outside [0, 22.5] degrees")
        if not math.isfinite(self.phi_degrees):
            raise ConfigError("phi_degrees must be finite")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.apparatus(self.theta_sweep[0])
            self.bootstrap(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["theta_sweep"] = list(self.theta_sweep)
        return out

    @property
    def phi(self) -> float:
        return math.radians(self.phi_degrees)

    def apparatus(self, theta_deg: float) -> ApparatusConfig:
        return ApparatusConfig(
            theta=math.radians(theta_deg),
            v_pm=self.v_pm,
            v_hv=self.v_hv,
            delta=self.delta,
            photons_per_setting=self.photons_per_setting,
        )

    def bootstrap(self, point_index: int) -> BootstrapSpec:
        return BootstrapSpec(
            replicates=self.bootstrap_replicates,
            seed=derive_seed(self.base_seed, point_index, STREAM_BOOTSTRAP),
            v_pm_sigma=self.v_pm_sigma,
            v_hv_sigma=self.v_hv_sigma,
        )


def derive_seed(base_seed: int, point_index: int, stream: int, sign: int = 0) -> int:
    """Seed for one (point, stream, sign); the point enters as ``base ^ index``."""
    seq = np.random.SeedSequence([int(base_seed) ^ int(point_index), stream, sign % 3])
    return int(seq.generate_state(1, np.uint64)[0])


def _simulate_both_signs(state, app, base_seed, index, stream):
    return [
        simulate_counts(state, app, sign, derive_seed(base_seed, index, stream, sign))
        for sign in (1, -1)
    ]


def _measure(state, app, config: RunConfig, index: int, stream: int):
    """Estimated distribution and covariance (zero in exact mode)."""
    if config.exact:
        return noisy_joint_distribution(state, app), np.zeros((4, 4)), None
    records = _simulate_both_signs(state, app, config.base_seed, index, stream)
    p, cov = estimate_with_covariance(records)
    return p, cov, records


def _map_points(config: RunConfig, func):
    items = list(enumerate(config.theta_sweep))
    if config.jobs == 1:
        return [func(i, t) for i, t in items]
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        return list(pool.map(lambda it: func(*it), items))


def calibration_points(config: RunConfig) -> list[CalibrationPoint]:
    def point(index, theta_deg):
        app = config.apparatus(theta_deg)
        p_P, cov_P, _ = _measure(P_INPUT, app, config, index, STREAM_P_INPUT)
        p_H, cov_H, _ = _measure(H_INPUT, app, config, index, STREAM_H_INPUT)
        eps, eps_se = estimate_epsilon(p_P, cov_P)
        eta, eta_se = estimate_eta(p_H, cov_H)
        return CalibrationPoint(app.theta, eps, eps_se, eta, eta_se)

    return _map_points(config, point)


def run_calibration_sweep(config: RunConfig, write: bool = True):
    points = calibration_points(config)
    fit = fit_visibilities(points)
    log.info("fitted v_pm=%.6g+-%.2g v_hv=%.6g+-%.2g", fit.v_pm, fit.v_pm_se, fit.v_hv, fit.v_hv_se)
    if write:
        out = Path(config.output_dir)
        write_calibration_csv(out / "calibration.csv", points)
        write_json(out / "visibility_fit.json", fit_to_dict(fit, config))
    return points, fit


@dataclass
class PointResult:
    theta_deg: float
    pexp: JointDistribution
    pexp_se: np.ndarray
    ppsi: DistributionEstimate | None
    peps_mp: float
    peta_mp: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.ppsi is not None


@dataclass
class MainResult:
    points: list
    fit: VisibilityFit
    report: dict = field(default_factory=dict)

    @property
    def any_singular(self) -> bool:
        return any(not p.ok for p in self.points)


def _partial(func, p, value) -> float:
    try:
        return func(p, value)[(-1, 1)]
    except SingularError:
        return math.nan


def _reconstruct(records, p_exp, app, fit, config, index):
    calib = CalibrationPoint(app.theta, float(fit.epsilon(app.theta)), 0.0, float(fit.eta(app.theta)), 0.0)
    if records is None:
        p = invert_spin_flip_map(p_exp, fit.error_params(app.theta))
        return DistributionEstimate(p, np.zeros(4), 1)
    return bootstrap_reconstruction(records, calib, fit, config.bootstrap(index))


def main_point(config: RunConfig, fit: VisibilityFit, index: int, theta_deg: float) -> PointResult:
    state = prepare_linear_polarization(config.phi)
    app = config.apparatus(theta_deg)
    p_exp, cov, records = _measure(state, app, config, index, STREAM_MAIN)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    err = fit.error_params(app.theta)
    peps = _partial(partial_invert_backaction_only, p_exp, err.eta)
    peta = _partial(partial_invert_resolution_only, p_exp, err.epsilon)
    try:
        ppsi = _reconstruct(records, p_exp, app, fit, config, index)
        error = None
    except (AllReplicatesSingular, SingularError) as exc:
        log.warning("theta=%g deg: %s", theta_deg, exc)
        ppsi, error = None, f"{type(exc).__name__}: {exc}"
    return PointResult(theta_deg, p_exp, se, ppsi, peps, peta, error)


def run_main_experiment(
    config: RunConfig, calib: VisibilityFit, points: list | None = None, write: bool = True
) -> MainResult:
    results = _map_points(config, lambda i, t: main_point(config, calib, i, t))
    report = lgi_report(results, calib, config)
    result = MainResult(results, calib, report)
    if write:
        out = Path(config.output_dir)
        write_distribution_csv(out / "pexp.csv", [(r.theta_deg, r.pexp.values, r.pexp_se) for r in results])
        write_distribution_csv(
            out / "ppsi.csv",
            [
                (r.theta_deg, r.ppsi.mean.values, r.ppsi.stderr) if r.ok
                else (r.theta_deg, np.full(4, math.nan), np.full(4, math.nan))
                for r in results
            ],
        )
        write_partial_csv(out / "partial.csv", results)
        write_json(out / "lgi_report.json", report)
        if points is not None:
            write_characteristic_csv(out / "characteristic.csv", points, calib)
    return result


def lgi_report(results, fit: VisibilityFit, config: RunConfig) -> dict:
    entries = []
    for r in results:
        entry = {
            "theta_deg": r.theta_deg,
            "status": "ok" if r.ok else "singular",
            "error": r.error,
            "pexp_margin": 4.0 * r.pexp[(-1, 1)],
            "report": None,
            "margin_stderr": None,
            "replicates_kept": None,
            "dropped_replicates": None,
        }
        if r.ok:
            entry["report"] = evaluate_from_distribution(r.ppsi.mean).to_dict()
            entry["margin_stderr"] = 4.0 * float(r.ppsi.stderr[1])
            entry["replicates_kept"] = r.ppsi.replicate_count
            entry["dropped_replicates"] = r.ppsi.dropped
        entries.append(entry)
    ok = [e for e in entries if e["report"] is not None]
    if ok:
        worst = min(ok, key=lambda e: e["report"]["margin"])
        min_margin, min_theta = worst["report"]["margin"], worst["theta_deg"]
    else:
        min_margin = min_theta = None
    return {
        "error_method": "exact (no sampling)" if config.exact else METHOD_LABEL,
        "config": config.to_dict(),
        "visibility_fit": fit_to_dict(fit, config),
        "points": entries,
        "summary": {
            "min_margin": min_margin,
            "min_margin_theta_deg": min_theta,
            "violated_at_all_points": bool(ok) and all(e["report"]["violated"] for e in ok),
            "dropped_replicates_total": sum(e["dropped_replicates"] or 0 for e in entries),
            "singular_theta_deg": [e["theta_deg"] for e in entries if e["status"] != "ok"],
        },
    }


# ---------------------------------------------------------------- I/O


def fmt(x) -> str:
    return f"{float(x):.9g}"


def _round(obj):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def fit_to_dict(fit: VisibilityFit, config: RunConfig) -> dict:
    return {
        "v_pm": fit.v_pm,
        "v_pm_se": fit.v_pm_se,
        "v_hv": fit.v_hv,
        "v_hv_se": fit.v_hv_se,
        "residual_rms": fit.residual_rms,
        "exact": config.exact,
    }


def fit_from_dict(data: dict) -> VisibilityFit:
    return VisibilityFit(
        data["v_pm"], data["v_pm_se"], data["v_hv"], data["v_hv_se"], data["residual_rms"]
    )


def _open_for_write(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="")


def write_json(path: Path, data: dict) -> None:
    with _open_for_write(Path(path)) as fh:
        json.dump(_round(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with _open_for_write(Path(path)) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


CALIBRATION_COLUMNS = ("theta_deg", "epsilon_hat", "epsilon_se", "eta_hat", "eta_se")
DISTRIBUTION_COLUMNS = ("theta_deg",) + tuple(
    col for lab in CELL_LABELS for col in (lab, f"{lab}_se")
)
PARTIAL_COLUMNS = ("theta_deg", "pexp_mp", "ppsi_mp", "peps_mp", "peta_mp")
CHARACTERISTIC_COLUMNS = ("theta_deg", "epsilon", "one_minus_eta", "residual")


def write_calibration_csv(path, points) -> None:
    _write_csv(
        path,
        CALIBRATION_COLUMNS,
        [
            (math.degrees(p.theta), p.epsilon_hat, p.epsilon_se, p.eta_hat, p.eta_se)
            for p in points
        ],
    )


def read_calibration_csv(path) -> list[CalibrationPoint]:
    with Path(path).open(newline="") as fh:
        return [
            CalibrationPoint(
                math.radians(float(row["theta_deg"])),
                float(row["epsilon_hat"]),
                float(row["epsilon_se"]),
                float(row["eta_hat"]),
                float(row["eta_se"]),
            )
            for row in csv.DictReader(fh)
        ]


def write_distribution_csv(path, rows) -> None:
    _write_csv(
        path,
        DISTRIBUTION_COLUMNS,
        [(theta, *[x for pair in zip(vals, se) for x in pair]) for theta, vals, se in rows],
    )


def write_partial_csv(path, results) -> None:
    _write_csv(
        path,
        PARTIAL_COLUMNS,
        [
            (
                r.theta_deg,
                r.pexp[(-1, 1)],
                r.ppsi.mean[(-1, 1)] if r.ok else math.nan,
                r.peps_mp,
                r.peta_mp,
            )
            for r in results
        ],
    )


def write_characteristic_csv(path, points, fit: VisibilityFit) -> None:
    _write_csv(
        path,
        CHARACTERISTIC_COLUMNS,
        [
            (
                math.degrees(p.theta),
                p.epsilon_hat,
                1.0 - p.eta_hat,
                characteristic_residual((p.epsilon_hat, p.eta_hat), fit.v_pm, fit.v_hv),
            )
            for p in points
        ],
    )
