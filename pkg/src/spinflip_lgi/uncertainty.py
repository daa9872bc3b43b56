"""Bootstrap error bars for the reconstructed joint quasi-probability.

Each replicate resamples every count record multinomially and perturbs the
fitted visibilities by one Gaussian draw shared by all four cells, so the
calibration error stays fully correlated across the distribution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationPoint, VisibilityFit
from .distribution import Flavor, JointDistribution
from .measurement import _group_by_sign, combine_counts, estimate_with_covariance
from .spinflip import SINGULAR_TOL, ErrorParams, invert_cells, inversion_matrix

METHOD_LABEL = "bootstrap: multinomial count resampling + Gaussian visibility perturbation"


class AllReplicatesSingular(ArithmeticError):
    """No bootstrap replicate admitted an inversion."""


@dataclass(frozen=True)
class BootstrapSpec:
    replicates: int = 1000
    seed: int = 0
    v_pm_sigma: float = 0.0
    v_hv_sigma: float = 0.0

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 2:
            raise ValueError(f"need at least 2 replicates, got {self.replicates!r}")
        if self.v_pm_sigma < 0 or self.v_hv_sigma < 0:
            raise ValueError("visibility sigmas must be non-negative")


@dataclass(frozen=True)
class DistributionEstimate:
    mean: JointDistribution
    stderr: np.ndarray
    replicate_count: int
    dropped: int = 0

    def __post_init__(self):
        stderr = np.array(self.stderr, dtype=float)
        if stderr.shape != (4,) or np.any(stderr < 0):
            raise ValueError("stderr must be four non-negative values")
        stderr.setflags(write=False)
        object.__setattr__(self, "stderr", stderr)


def bootstrap_reconstruction(
    records, calib: CalibrationPoint, fit: VisibilityFit, spec: BootstrapSpec
) -> DistributionEstimate:
    groups = _group_by_sign(records)
    theta = calib.theta
    config_theta = next(iter(groups.values()))[0].config.theta
    if not np.isclose(theta, config_theta, rtol=0, atol=1e-12):
        raise ValueError(f"calibration angle {theta!r} does not match records ({config_theta!r})")

    rng = np.random.default_rng(spec.seed)
    b = spec.replicates
    resampled = {}
    for sign, recs in sorted(groups.items(), reverse=True):
        draws = np.empty((b, len(recs), 4))
        for j, rec in enumerate(recs):
            counts = np.asarray(rec.counts, dtype=float)
            total = int(counts.sum())
            if total == 0:
                draws[:, j] = 0.0
                continue
            draws[:, j] = rng.multinomial(total, counts / total, size=b)
        resampled[sign] = draws
    p_exp, total = combine_counts(resampled)

    v_pm = fit.v_pm + spec.v_pm_sigma * rng.standard_normal(b)
    v_hv = fit.v_hv + spec.v_hv_sigma * rng.standard_normal(b)
    eps = v_pm * np.sin(4 * theta)
    eta = 1.0 - v_hv * np.cos(4 * theta)

    ok = (eps > SINGULAR_TOL) & (1.0 - eta > SINGULAR_TOL) & (total[:, 0] > 0)
    kept = int(ok.sum())
    if kept == 0:
        raise AllReplicatesSingular(
            f"all {b} replicates singular at theta={theta!r} (epsilon or 1-eta too small)"
        )
    recon = invert_cells(p_exp[ok], eps[ok], eta[ok])
    mean = recon.mean(axis=0)
    if kept > 1:
        stderr = recon.std(axis=0, ddof=1)
    else:
        warnings.warn("only one bootstrap replicate survived; stderr set to 0", stacklevel=2)
        stderr = np.zeros(4)
    return DistributionEstimate(
        JointDistribution(mean, Flavor.QUASI), stderr, kept, dropped=b - kept
    )


def linearized_reconstruction_stderr(records, err: ErrorParams) -> np.ndarray:
    """Delta-method standard errors of the inverted distribution.

    Only count statistics enter; the error parameters are held fixed.
    """
    _, cov = estimate_with_covariance(records)
    a = inversion_matrix(err.epsilon, err.eta)
    return np.sqrt(np.clip(np.diag(a @ cov @ a.T), 0.0, None))
