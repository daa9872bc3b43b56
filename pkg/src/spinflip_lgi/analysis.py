"""Characteristic angles of the exact model: crossover and partial sign changes."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .measurement import THETA_MAX, ApparatusConfig, noisy_joint_distribution
from .qubit import prepare_linear_polarization
from .spinflip import partial_invert_backaction_only, partial_invert_resolution_only


def interpolated_zero(x, y) -> float:
    """First zero of piecewise-linear ``y(x)``; NaN if ``y`` keeps its sign."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for i in range(len(x) - 1):
        if y[i] == 0:
            return float(x[i])
        if y[i] * y[i + 1] < 0:
            return float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))
    return float(x[-1]) if len(y) and y[-1] == 0 else math.nan


def crossover_angle(theta_deg, pexp_rows) -> float:
    """Angle where ``P_exp(+1,+1) = P_exp(-1,-1)``, by linear interpolation."""
    diffs = [p[(1, 1)] - p[(-1, -1)] for p in pexp_rows]
    return interpolated_zero(theta_deg, diffs)


def _exact_pexp(phi, theta, v_pm, v_hv):
    return noisy_joint_distribution(
        prepare_linear_polarization(phi), ApparatusConfig(theta, v_pm, v_hv)
    )


def partial_mp(phi: float, theta: float, v_pm: float, v_hv: float) -> tuple[float, float]:
    """Exact ``(P_eps(-1,+1), P_eta(-1,+1))`` at one plate angle."""
    p = _exact_pexp(phi, theta, v_pm, v_hv)
    eps = v_pm * math.sin(4 * theta)
    eta = 1.0 - v_hv * math.cos(4 * theta)
    return (
        partial_invert_backaction_only(p, eta)[(-1, 1)],
        partial_invert_resolution_only(p, eps)[(-1, 1)],
    )


def partial_sign_change_angles(phi: float, v_pm: float, v_hv: float) -> tuple[float, float]:
    """Angles (radians) where ``P_eps(-1,+1)`` and ``P_eta(-1,+1)`` cross zero.

    Root-finds on the exact pipeline; the brackets stay clear of the
    singular endpoints of each partial inversion.
    """
    lo, hi = 1e-4, THETA_MAX - 1e-4
    theta_eps = brentq(lambda t: partial_mp(phi, t, v_pm, v_hv)[0], lo, hi, xtol=1e-13)
    theta_eta = brentq(lambda t: partial_mp(phi, t, v_pm, v_hv)[1], lo, hi, xtol=1e-13)
    return theta_eps, theta_eta
