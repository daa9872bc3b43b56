"""Acceptance checks, shared by the ``check`` command and the test suite.

Each check returns a :class:`CheckResult`; nothing here raises on failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .analysis import crossover_angle, partial_sign_change_angles
from .calibration import CalibrationPoint, VisibilityFit, characteristic_residual, fit_visibilities
from .distribution import Flavor, JointDistribution
from .lgi import evaluate_from_correlations, evaluate_from_distribution
from .measurement import (
    ApparatusConfig,
    combine_counts,
    estimate_probabilities,
    noisy_joint_distribution,
    record_frequencies,
    sample_counts,
    simulate_counts,
)
from .qubit import prepare_linear_polarization
from .runner import (
    RunConfig,
    calibration_points,
    derive_seed,
    run_calibration_sweep,
    run_main_experiment,
)
from .spinflip import (
    CorrelationTriple,
    ErrorParams,
    correlations_from_state,
    forward_spin_flip_map,
    invert_spin_flip_map,
    theoretical_intrinsic,
)
from .uncertainty import BootstrapSpec, bootstrap_reconstruction, linearized_reconstruction_stderr

V_PM = 0.853
V_HV = 0.9997
PHI = math.radians(22.496)
INTRINSIC_MP = (1 - math.sqrt(2)) / 4


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.name}: {self.detail}"


def _random_signed(rng, size):
    """Signed 4-cell vectors summing to one with every cell in [-1, 1]."""
    out = []
    while len(out) < size:
        v = rng.uniform(-0.5, 1.0, size=3)
        last = 1.0 - v.sum()
        if abs(last) <= 1.0:
            out.append(np.append(v, last))
    return np.array(out)


def check_exact_inversion(seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    ps = _random_signed(rng, 1000)
    eps = rng.uniform(0.05, 1.0, size=1000)
    eta = rng.uniform(0.0, 0.95, size=1000)
    start = time.perf_counter()
    worst = 0.0
    for p, e, h in zip(ps, eps, eta):
        err = ErrorParams(e, h)
        dist = JointDistribution(p, Flavor.QUASI)
        back = invert_spin_flip_map(forward_spin_flip_map(dist, err), err)
        worst = max(worst, float(np.max(np.abs(back.values - p))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    return CheckResult(1, "exact inversion", ok, f"max |error| = {worst:.2e}, {elapsed:.3f} s")


def check_model_equivalence() -> CheckResult:
    start = time.perf_counter()
    worst = 0.0
    for phi in np.linspace(0, np.pi, 10):
        state = prepare_linear_polarization(phi)
        intrinsic = theoretical_intrinsic(correlations_from_state(state))
        for theta in np.linspace(0, np.pi / 8, 10):
            for v_pm in (0.5, V_PM, 1.0):
                for v_hv in (0.9, V_HV, 1.0):
                    cfg = ApparatusConfig(theta, v_pm, v_hv)
                    quantum = noisy_joint_distribution(state, cfg)
                    err = ErrorParams(v_pm * np.sin(4 * theta), 1 - v_hv * np.cos(4 * theta))
                    model = forward_spin_flip_map(intrinsic, err)
                    worst = max(worst, float(np.max(np.abs(quantum.values - model.values))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5.0
    return CheckResult(2, "model equivalence", ok, f"max |diff| = {worst:.2e} over 900 points, {elapsed:.2f} s")


def check_intrinsic_negativity(config: RunConfig | None = None) -> CheckResult:
    config = config or RunConfig()
    start = time.perf_counter()
    points, fit = run_calibration_sweep(config, write=False)
    result = run_main_experiment(config, fit, points, write=False)
    elapsed = time.perf_counter() - start
    failures = []
    means = []
    for r in result.points:
        if not r.ok:
            failures.append(f"{r.theta_deg:g} deg singular")
            continue
        mean, se = r.ppsi.mean[(-1, 1)], r.ppsi.stderr[1]
        means.append(mean)
        if abs(mean - INTRINSIC_MP) > 3 * se:
            failures.append(f"{r.theta_deg:g} deg: {mean:.5f} +- {se:.5f}")
    spread = float(np.std(means)) if means else math.inf
    ok = not failures and spread < 0.01 and elapsed < 120.0
    detail = f"across-theta std {spread:.4f}, {elapsed:.2f} s"
    if failures:
        detail += "; outside 3 sigma: " + ", ".join(failures)
    return CheckResult(3, "intrinsic negativity", ok, detail)


def check_lgi_margin() -> CheckResult:
    r = evaluate_from_correlations(CorrelationTriple(1 / math.sqrt(2), -1 / math.sqrt(2), 0.0))
    target = 1 - math.sqrt(2)
    ok = abs(r.margin - target) <= 1e-12 and r.violated
    return CheckResult(4, "LGI margin", ok, f"margin = {r.margin:.12f}, violated = {r.violated}")


def check_calibration_curves(config: RunConfig | None = None) -> CheckResult:
    config = replace(config or RunConfig(), exact=True)
    points = calibration_points(config)
    worst_curve = worst_char = 0.0
    for p in points:
        worst_curve = max(
            worst_curve,
            abs(p.epsilon_hat - V_PM * math.sin(4 * p.theta)),
            abs((1 - p.eta_hat) - V_HV * math.cos(4 * p.theta)),
        )
        worst_char = max(worst_char, abs(characteristic_residual((p.epsilon_hat, p.eta_hat), V_PM, V_HV)))
    ok = worst_curve <= 1e-12 and worst_char <= 1e-12
    return CheckResult(
        5, "calibration curves", ok, f"curve error {worst_curve:.2e}, characteristic residual {worst_char:.2e}"
    )


def check_visibility_recovery(repetitions: int = 200) -> CheckResult:
    hits = 0
    for rep in range(repetitions):
        config = RunConfig(base_seed=10_000 + rep)
        fit = fit_visibilities(calibration_points(config))
        hits += abs(fit.v_pm - V_PM) <= 0.010
    frac = hits / repetitions
    return CheckResult(6, "visibility recovery", frac >= 0.95, f"{hits}/{repetitions} within +-0.010")


def check_crossover() -> CheckResult:
    config = RunConfig(exact=True)
    state = prepare_linear_polarization(config.phi)
    rows = [noisy_joint_distribution(state, config.apparatus(t)) for t in config.theta_sweep]
    found = crossover_angle(config.theta_sweep, rows)
    target = math.degrees(0.25 * math.atan(V_HV / V_PM))
    ok = abs(found - target) <= 0.2
    return CheckResult(7, "crossover", ok, f"{found:.3f} deg vs {target:.3f} deg")


def check_partial_sign_changes() -> CheckResult:
    t_eps, t_eta = (math.degrees(t) for t in partial_sign_change_angles(PHI, V_PM, V_HV))
    ok = abs(t_eta - 16.4) <= 0.5 and abs(t_eps - 7.3) <= 0.5
    return CheckResult(8, "partial-compensation sign changes", ok, f"P_eta at {t_eta:.2f} deg, P_eps at {t_eps:.2f} deg")


def check_raw_positivity(seeds=range(20), photons=(1_000, 1_000_000)) -> CheckResult:
    state = prepare_linear_polarization(PHI)
    worst_cell = worst_margin = math.inf
    runs = 0
    for n in photons:
        config = RunConfig(photons_per_setting=n)
        for seed in seeds:
            for index, theta in enumerate(config.theta_sweep):
                app = config.apparatus(theta)
                records = [simulate_counts(state, app, s, derive_seed(seed, index, 2, s)) for s in (1, -1)]
                p, _ = estimate_probabilities(records)
                for freq in [p.values] + [record_frequencies(r) for r in records]:
                    worst_cell = min(worst_cell, float(freq.min()))
                worst_margin = min(worst_margin, evaluate_from_distribution(p).margin)
                runs += 1
    ok = worst_cell >= 0 and worst_margin >= 0
    return CheckResult(9, "raw-data positivity", ok, f"{runs} runs, min cell {worst_cell:.3g}, min margin {worst_margin:.3g}")


def check_imbalance_compensation(repetitions: int = 100_000, photons: int = 10_000, seed: int = 7) -> CheckResult:
    delta = 0.05
    state = prepare_linear_polarization(PHI)
    app = ApparatusConfig(math.radians(12), V_PM, V_HV, delta, photons)
    exact = noisy_joint_distribution(state, app).values
    rng = np.random.default_rng(seed)
    counts = {s: sample_counts(exact, app, s, rng, size=(repetitions, 1)) for s in (1, -1)}
    averaged, _ = combine_counts(counts)
    bias_avg = float(np.max(np.abs(averaged.mean(axis=0) - exact)))
    single = counts[1][:, 0, :] / counts[1][:, 0, :].sum(axis=-1, keepdims=True)
    bias_single = float(np.max(np.abs(single.mean(axis=0) - exact)))
    ok = bias_avg < delta**2 and bias_single > 1e-2
    return CheckResult(
        10, "imbalance compensation", ok, f"averaged bias {bias_avg:.2e}, single-sign bias {bias_single:.2e}"
    )


def check_bootstrap_validity(photons: int = 100_000, replicates: int = 2000, seed: int = 3) -> CheckResult:
    state = prepare_linear_polarization(PHI)
    fit = VisibilityFit(V_PM, 0.0, V_HV, 0.0, 0.0)
    theta_star = math.degrees(0.25 * math.atan(V_HV / V_PM))
    angles = sorted(set(RunConfig().theta_sweep) | {3.0, 21.0, theta_star})
    worst_rel = 0.0
    stderr = {}
    for index, theta_deg in enumerate(angles):
        app = ApparatusConfig(math.radians(theta_deg), V_PM, V_HV, 0.0, photons)
        records = [simulate_counts(state, app, s, derive_seed(seed, index, 2, s)) for s in (1, -1)]
        calib = CalibrationPoint(app.theta, app.epsilon, 0.0, app.eta, 0.0)
        est = bootstrap_reconstruction(records, calib, fit, BootstrapSpec(replicates, derive_seed(seed, index, 3)))
        lin = linearized_reconstruction_stderr(records, ErrorParams(app.epsilon, app.eta))
        worst_rel = max(worst_rel, float(np.max(np.abs(est.stderr / lin - 1))))
        stderr[theta_deg] = est.stderr
    profile_ok = bool(
        np.all(stderr[theta_star] < stderr[3.0]) and np.all(stderr[theta_star] < stderr[21.0])
    )
    ok = worst_rel <= 0.10 and profile_ok
    return CheckResult(
        11,
        "bootstrap validity",
        ok,
        f"max relative stderr deviation {worst_rel:.3f}; minimum at {theta_star:.2f} deg: {profile_ok}",
    )


CHECKS = (
    check_exact_inversion,
    check_model_equivalence,
    check_intrinsic_negativity,
    check_lgi_margin,
    check_calibration_curves,
    check_visibility_recovery,
    check_crossover,
    check_partial_sign_changes,
    check_raw_positivity,
    check_imbalance_compensation,
    check_bootstrap_validity,
)


def run_all(echo=print) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        res = check()
        echo(res.line())
        results.append(res)
    return results
