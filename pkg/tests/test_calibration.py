import math
import warnings

import numpy as np
import pytest

from spinflip_lgi.calibration import (
    CalibrationPoint,
    DegenerateFit,
    VisibilityFit,
    characteristic_residual,
    estimate_epsilon,
    estimate_eta,
    fit_visibilities,
)
from spinflip_lgi.distribution import JointDistribution
from spinflip_lgi.measurement import ApparatusConfig, noisy_joint_distribution
from spinflip_lgi.qubit import KET_H, KET_P, QubitState
from spinflip_lgi.spinflip import ErrorParams

from conftest import V_HV, V_PM

P_IN = QubitState.from_ket(KET_P)
H_IN = QubitState.from_ket(KET_H)
ZERO = np.zeros(4)


def exact_point(theta, v_pm=V_PM, v_hv=V_HV):
    cfg = ApparatusConfig(theta, v_pm, v_hv)
    eps, _ = estimate_epsilon(noisy_joint_distribution(P_IN, cfg), ZERO)
    eta, _ = estimate_eta(noisy_joint_distribution(H_IN, cfg), ZERO)
    return CalibrationPoint(theta, eps, 0.0, eta, 0.0)


@pytest.mark.parametrize(
    "theta, v_pm, expected",
    [(np.pi / 8, 1.0, 1.0), (np.pi / 8, V_PM, V_PM), (np.pi / 16, V_PM, 0.60316)],
)
def test_estimate_epsilon_examples(theta, v_pm, expected):
    p = noisy_joint_distribution(P_IN, ApparatusConfig(theta, v_pm, 1.0))
    assert estimate_epsilon(p, ZERO)[0] == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize(
    "theta, v_hv, expected",
    [(0.0, 1.0, 0.0), (np.pi / 8, 1.0, 1.0), (np.pi / 8, 0.9, 1.0), (np.pi / 16, V_HV, 0.29310)],
)
def test_estimate_eta_examples(theta, v_hv, expected):
    p = noisy_joint_distribution(H_IN, ApparatusConfig(theta, V_PM, v_hv))
    assert estimate_eta(p, ZERO)[0] == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize("theta", np.linspace(0, np.pi / 8, 12))
def test_exact_estimates_follow_visibility_curves(theta):
    pt = exact_point(theta)
    assert pt.epsilon_hat == pytest.approx(V_PM * np.sin(4 * theta), abs=1e-12)
    assert 1 - pt.eta_hat == pytest.approx(V_HV * np.cos(4 * theta), abs=1e-12)
    err = ErrorParams(max(pt.epsilon_hat, 0.0), min(max(pt.eta_hat, 0.0), 1.0))
    assert characteristic_residual(err, V_PM, V_HV) == pytest.approx(0.0, abs=1e-12)


def test_standard_error_propagation():
    p = JointDistribution([0.4, 0.1, 0.3, 0.2])
    se = np.array([0.01, 0.02, 0.03, 0.04])
    assert estimate_epsilon(p, se)[1] == pytest.approx(math.sqrt(np.sum(se**2)))
    # a full covariance matrix: var(sum s2 p) = s2^T C s2
    cov = np.diag(se**2) + 1e-5
    s2 = np.array([1, -1, 1, -1])
    assert estimate_epsilon(p, cov)[1] == pytest.approx(math.sqrt(s2 @ cov @ s2))


def test_out_of_range_estimates_warn_but_pass_through():
    p = JointDistribution([0.0, 0.6, 0.0, 0.4])
    with pytest.warns(UserWarning):
        eps, _ = estimate_epsilon(p, ZERO)
    assert eps == pytest.approx(-1.0)


def test_noiseless_fit_recovers_visibilities():
    points = [exact_point(t) for t in np.radians(np.arange(2, 23, 2))]
    fit = fit_visibilities(points)
    assert fit.v_pm == pytest.approx(V_PM, abs=1e-12)
    assert fit.v_hv == pytest.approx(V_HV, abs=1e-12)
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_weighted_fit_matches_closed_form(rng):
    theta = np.radians(np.arange(2, 23, 2))
    se = rng.uniform(1e-3, 5e-3, size=theta.size)
    eps = V_PM * np.sin(4 * theta) + se * rng.standard_normal(theta.size)
    contrast = V_HV * np.cos(4 * theta) + se * rng.standard_normal(theta.size)
    points = [CalibrationPoint(t, e, s, 1 - c, s) for t, e, c, s in zip(theta, eps, contrast, se)]
    fit = fit_visibilities(points)
    # oracle: weighted lstsq via numpy on sqrt(w)-scaled system
    x, w = np.sin(4 * theta), 1 / se
    slope, *_ = np.linalg.lstsq((x * w)[:, None], eps * w, rcond=None)
    assert fit.v_pm == pytest.approx(slope[0], rel=1e-12)
    assert fit.v_pm_se == pytest.approx(1 / math.sqrt(np.sum(x**2 / se**2)), rel=1e-12)


def test_fit_is_scale_consistent(rng):
    theta = np.radians(np.arange(2, 23, 2))
    se = rng.uniform(1e-3, 5e-3, size=theta.size)
    eps = V_PM * np.sin(4 * theta) + se * rng.standard_normal(theta.size)
    eta = 1 - V_HV * np.cos(4 * theta) + se * rng.standard_normal(theta.size)
    a = fit_visibilities([CalibrationPoint(*v) for v in zip(theta, eps, se, eta, se)])
    b = fit_visibilities([CalibrationPoint(*v) for v in zip(theta, eps, 7 * se, eta, 7 * se)])
    assert b.v_pm == pytest.approx(a.v_pm, rel=1e-12)
    assert b.v_hv == pytest.approx(a.v_hv, rel=1e-12)


def test_single_angle_fit():
    with pytest.raises(DegenerateFit):
        fit_visibilities([exact_point(0.0)])  # sin(0) vanishes
    with pytest.raises(DegenerateFit):
        fit_visibilities([exact_point(np.pi / 8)])  # cos(pi/2) vanishes
    fit = fit_visibilities([exact_point(np.pi / 16)])
    assert fit.v_pm == pytest.approx(V_PM, abs=1e-12)
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_fit_model_error_params():
    fit = VisibilityFit(V_PM, 0.0, V_HV, 0.0, 0.0)
    err = fit.error_params(np.pi / 16)
    assert err.epsilon == pytest.approx(V_PM / math.sqrt(2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit.error_params(0.1)
    with pytest.warns(UserWarning):
        VisibilityFit(1.02, 0.0, 1.0, 0.0, 0.0).error_params(np.pi / 8)


@pytest.mark.parametrize(
    "err, expected",
    [((1.0, 0.0), 1.0), ((1 / math.sqrt(2), 1 - 1 / math.sqrt(2)), 0.0)],
)
def test_characteristic_examples(err, expected):
    assert characteristic_residual(ErrorParams(*err), 1.0, 1.0) == pytest.approx(expected, abs=1e-12)


def test_characteristic_accepts_raw_pairs():
    assert characteristic_residual((1.01, -0.01), 1.0, 1.0) == pytest.approx(1.01**2 + 1.01**2 - 1)
    with pytest.raises(ValueError):
        characteristic_residual((0.5, 0.5), 0.0, 1.0)
