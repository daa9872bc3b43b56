"""Spin-flip error model: forward map, inversion and partial compensation.

The resolution ``epsilon`` flips the recorded ``s2`` with probability
``(1 - epsilon)/2``; the back-action ``eta`` flips ``s3`` with probability
``eta/2``. Both flips are independent, so the forward map is affine and
normalization preserving, and it can be undone whenever ``epsilon > 0`` and
``eta < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import CELLS, Flavor, JointDistribution
from .qubit import S_HV, S_PM, QubitState, expectation

SINGULAR_TOL = 1e-6

# For each cell, the indices of the cells with s2 flipped, s3 flipped, and both.
_FLIP_S2 = np.array([CELLS.index((-a, b)) for a, b in CELLS])
_FLIP_S3 = np.array([CELLS.index((a, -b)) for a, b in CELLS])
_FLIP_BOTH = np.array([CELLS.index((-a, -b)) for a, b in CELLS])


class SingularError(ArithmeticError):
    """The measurement carries no information about ``s2`` or ``s3``."""


@dataclass(frozen=True)
class ErrorParams:
    epsilon: float
    eta: float

    def __post_init__(self):
        for name in ("epsilon", "eta"):
            value = getattr(self, name)
            if not np.isfinite(value) or not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} = {value!r} outside [0, 1]")

    @property
    def invertible(self) -> bool:
        return self.epsilon > 0.0 and self.eta < 1.0

    @property
    def s2_flip_probability(self) -> float:
        return (1.0 - self.epsilon) / 2.0

    @property
    def s3_flip_probability(self) -> float:
        return self.eta / 2.0


@dataclass(frozen=True)
class CorrelationTriple:
    k12: float
    k13: float
    k23: float

    def __post_init__(self):
        for name in ("k12", "k13", "k23"):
            value = getattr(self, name)
            if not np.isfinite(value) or abs(value) > 1.0 + 1e-12:
                raise ValueError(f"{name} = {value!r} outside [-1, 1]")


def forward_cells(p, epsilon, eta):
    """Apply the spin-flip map to cell vectors ``p[..., 4]``.

    ``epsilon`` and ``eta`` broadcast against the leading axes of ``p``.
    """
    p = np.asarray(p, dtype=float)
    eps = np.asarray(epsilon, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    keep2, flip2 = (1 + eps) / 2, (1 - eps) / 2
    keep3, flip3 = 1 - eta / 2, eta / 2
    return (
        keep2 * keep3 * p
        + flip2 * keep3 * p[..., _FLIP_S2]
        + keep2 * flip3 * p[..., _FLIP_S3]
        + flip2 * flip3 * p[..., _FLIP_BOTH]
    )


def invert_cells(p_exp, epsilon, eta):
    """Undo :func:`forward_cells`; no singularity checks."""
    p_exp = np.asarray(p_exp, dtype=float)
    eps = np.asarray(epsilon, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    denom = 4 * eps * (1 - eta)
    return (
        (1 + eps) * (2 - eta) / denom * p_exp
        - (1 - eps) * (2 - eta) / denom * p_exp[..., _FLIP_S2]
        - (1 + eps) * eta / denom * p_exp[..., _FLIP_S3]
        + (1 - eps) * eta / denom * p_exp[..., _FLIP_BOTH]
    )


def inversion_matrix(epsilon: float, eta: float) -> np.ndarray:
    """4x4 matrix ``A`` with ``invert_cells(p) == A @ p``."""
    return invert_cells(np.eye(4), epsilon, eta).T


def _check_invertible(epsilon: float, eta: float) -> None:
    if epsilon <= SINGULAR_TOL:
        raise SingularError(f"resolution {epsilon!r} too small to resolve s2")
    if 1.0 - eta <= SINGULAR_TOL:
        raise SingularError(f"back-action {eta!r} leaves no information about s3")


def _quasi(values) -> JointDistribution:
    return JointDistribution(values, Flavor.QUASI)


def forward_spin_flip_map(p_psi: JointDistribution, err: ErrorParams) -> JointDistribution:
    out = forward_cells(p_psi.values, err.epsilon, err.eta)
    if p_psi.flavor is Flavor.PROPER:
        return JointDistribution(out, Flavor.PROPER)
    return _quasi(out)


def invert_spin_flip_map(p_exp: JointDistribution, err: ErrorParams) -> JointDistribution:
    _check_invertible(err.epsilon, err.eta)
    return _quasi(invert_cells(p_exp.values, err.epsilon, err.eta))


def partial_invert_resolution_only(p_exp: JointDistribution, epsilon: float) -> JointDistribution:
    """Compensate the resolution only (back-action taken as zero)."""
    _check_invertible(epsilon, 0.0)
    return _quasi(invert_cells(p_exp.values, epsilon, 0.0))


def partial_invert_backaction_only(p_exp: JointDistribution, eta: float) -> JointDistribution:
    """Compensate the back-action only (resolution taken as perfect)."""
    _check_invertible(1.0, eta)
    return _quasi(invert_cells(p_exp.values, 1.0, eta))


def correlations_from_state(state: QubitState) -> CorrelationTriple:
    # S_PM and S_HV anticommute, so their symmetrized correlation vanishes.
    return CorrelationTriple(
        k12=expectation(state, S_PM), k13=expectation(state, S_HV), k23=0.0
    )


def theoretical_intrinsic(k: CorrelationTriple) -> JointDistribution:
    values = [
        (1 + s3 * k.k13 + s2 * k.k12 + s2 * s3 * k.k23) / 4 for s2, s3 in CELLS
    ]
    return _quasi(values)
