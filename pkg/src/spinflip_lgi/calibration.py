"""Resolution and back-action from reference inputs, and visibility fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .distribution import S2, S3, JointDistribution
from .spinflip import ErrorParams

REGRESSOR_TOL = 1e-9


class DegenerateFit(ValueError):
    """Every regressor value vanishes, so the slope is undetermined."""


@dataclass(frozen=True)
class CalibrationPoint:
    theta: float
    epsilon_hat: float
    epsilon_se: float
    eta_hat: float
    eta_se: float

    def __post_init__(self):
        if self.epsilon_se < 0 or self.eta_se < 0:
            raise ValueError("standard errors must be non-negative")


@dataclass(frozen=True)
class VisibilityFit:
    v_pm: float
    v_pm_se: float
    v_hv: float
    v_hv_se: float
    residual_rms: float

    def __post_init__(self):
        for name in ("v_pm", "v_hv"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.05:
                raise ValueError(f"fitted {name} = {value!r} outside [0, 1.05]")
        if self.v_pm_se < 0 or self.v_hv_se < 0:
            raise ValueError("fit uncertainties must be non-negative")

    def epsilon(self, theta):
        return self.v_pm * np.sin(4 * np.asarray(theta))

    def eta(self, theta):
        return 1.0 - self.v_hv * np.cos(4 * np.asarray(theta))

    def error_params(self, theta: float) -> ErrorParams:
        """Model ``(epsilon, eta)`` at ``theta``, clipped into [0, 1]."""
        eps, eta = float(self.epsilon(theta)), float(self.eta(theta))
        clipped = min(max(eps, 0.0), 1.0), min(max(eta, 0.0), 1.0)
        if clipped != (eps, eta):
            warnings.warn(
                f"fitted model gives epsilon={eps:.6g}, eta={eta:.6g} at theta={theta:.6g}; clipped",
                stacklevel=2,
            )
        return ErrorParams(*clipped)


def _propagate(weights: np.ndarray, se) -> float:
    se = np.asarray(se, dtype=float)
    if se.shape == (4, 4):
        var = weights @ se @ weights
    else:
        var = np.sum((weights * se) ** 2)
    return float(np.sqrt(max(var, 0.0)))


def _warn_range(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        warnings.warn(f"{name} estimate {value:.6g} outside [0, 1]", stacklevel=3)


def estimate_epsilon(p_exp_for_P_input: JointDistribution, se) -> tuple[float, float]:
    """Resolution from a P-polarized reference input.

    ``se`` is either the four per-cell standard errors (treated as
    independent) or a full 4x4 covariance matrix.
    """
    eps = float(S2 @ p_exp_for_P_input.values)
    _warn_range("epsilon", eps)
    return eps, _propagate(S2, se)


def estimate_eta(p_exp_for_H_input: JointDistribution, se) -> tuple[float, float]:
    """Back-action from an H-polarized reference input; ``se`` as above."""
    eta = 1.0 - float(S3 @ p_exp_for_H_input.values)
    _warn_range("eta", eta)
    return eta, _propagate(S3, se)


def _weighted_slope(x, y, se) -> tuple[float, float, np.ndarray]:
    """Least-squares slope of ``y = a*x`` through the origin.

    Weights are ``1/se**2``; if any standard error is zero the fit falls back
    to unit weights and the uncertainty comes from the residual scatter.
    """
    if np.all(np.abs(x) <= REGRESSOR_TOL):
        raise DegenerateFit("all regressor values vanish")
    if np.any(se <= 0):
        sxx = np.sum(x * x)
        slope = np.sum(x * y) / sxx
        resid = y - slope * x
        dof = max(len(x) - 1, 1)
        slope_se = np.sqrt(np.sum(resid**2) / dof / sxx)
    else:
        w = 1.0 / se**2
        sxx = np.sum(w * x * x)
        slope = np.sum(w * x * y) / sxx
        resid = y - slope * x
        slope_se = 1.0 / np.sqrt(sxx)
    return float(slope), float(slope_se), resid


def fit_visibilities(points) -> VisibilityFit:
    points = list(points)
    if not points:
        raise DegenerateFit("no calibration points")
    theta = np.array([p.theta for p in points])
    eps = np.array([p.epsilon_hat for p in points])
    eps_se = np.array([p.epsilon_se for p in points])
    contrast = 1.0 - np.array([p.eta_hat for p in points])
    contrast_se = np.array([p.eta_se for p in points])

    v_pm, v_pm_se, r1 = _weighted_slope(np.sin(4 * theta), eps, eps_se)
    v_hv, v_hv_se, r2 = _weighted_slope(np.cos(4 * theta), contrast, contrast_se)
    rms = float(np.sqrt(np.mean(np.concatenate([r1, r2]) ** 2)))
    return VisibilityFit(v_pm, v_pm_se, v_hv, v_hv_se, rms)


def characteristic_residual(err, v_pm: float, v_hv: float) -> float:
    """Signed distance from the visibility-scaled uncertainty ellipse.

    ``err`` is an :class:`ErrorParams` or a raw ``(epsilon, eta)`` pair; raw
    pairs allow noisy estimates that stray outside [0, 1].
    """
    if v_pm <= 0 or v_hv <= 0:
        raise ValueError("visibilities must be positive")
    eps, eta = (err.epsilon, err.eta) if isinstance(err, ErrorParams) else err
    return eps**2 / v_pm**2 + (1 - eta) ** 2 / v_hv**2 - 1.0
