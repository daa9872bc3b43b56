"""Variable-strength interferometric PM measurement followed by an HV filter.

The intermediate measurement is described by the Kraus pair

    M_P = cos(t) Pi_P + sin(t) Pi_M,   M_M = sin(t) Pi_P + cos(t) Pi_M,

with ``t = pi/4 - 2*theta`` for a half-wave-plate angle ``theta``. Finite
interference visibility ``v_pm`` is a classical readout flip of the PM
result; finite coherence ``v_hv`` dephases the post-measurement state in the
PM basis. A beam-splitter imbalance ``delta`` gives the two detectors
efficiencies ``1 +- delta`` (up to a common factor); the detector that sees
P swaps when the plates rotate the other way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distribution import CELLS, S2, Flavor, JointDistribution
from .qubit import ATOL, KET_H, KET_V, PROJ_M, PROJ_P, S_PM, QubitState

THETA_MAX = np.pi / 8


class MissingSignError(ValueError):
    """Count records do not cover both plate rotation directions."""


@dataclass(frozen=True)
class ApparatusConfig:
    theta: float
    v_pm: float = 1.0
    v_hv: float = 1.0
    delta: float = 0.0
    photons_per_setting: int = 1_000_000

    def __post_init__(self):
        _check_theta(self.theta)
        for name in ("v_pm", "v_hv"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v!r} outside [0, 1]")
        if not abs(self.delta) < 1.0:
            raise ValueError(f"|delta| must be < 1, got {self.delta!r}")
        if int(self.photons_per_setting) != self.photons_per_setting or self.photons_per_setting < 1:
            raise ValueError("photons_per_setting must be a positive integer")

    @property
    def epsilon(self) -> float:
        return self.v_pm * np.sin(4 * self.theta)

    @property
    def eta(self) -> float:
        return 1.0 - self.v_hv * np.cos(4 * self.theta)


@dataclass(frozen=True)
class CountRecord:
    """Detector counts for one plate rotation direction.

    ``counts`` is in ``CELLS`` order. The s3 = +1 cells come from the
    H-filter run, the s3 = -1 cells from the V-filter run; each run uses
    ``config.photons_per_setting`` photons.
    """

    counts: tuple
    hwp_sign: int
    seed: int | None
    config: ApparatusConfig = field(repr=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 4 or min(counts) < 0:
            raise ValueError(f"expected four non-negative counts, got {self.counts!r}")
        if self.hwp_sign not in (1, -1):
            raise ValueError(f"hwp_sign must be +1 or -1, got {self.hwp_sign!r}")
        if sum(counts) > 2 * self.config.photons_per_setting:
            raise ValueError("more counts than photons sent")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __getitem__(self, cell) -> int:
        return self.counts[CELLS.index(tuple(cell))]


def _check_theta(theta: float) -> None:
    if not (np.isfinite(theta) and -ATOL <= theta <= THETA_MAX + ATOL):
        raise ValueError(f"theta = {theta!r} rad outside [0, pi/8]")


def kraus_pair(theta: float) -> tuple[np.ndarray, np.ndarray]:
    _check_theta(theta)
    t = np.pi / 4 - 2 * theta
    c, s = np.cos(t), np.sin(t)
    return c * PROJ_P + s * PROJ_M, s * PROJ_P + c * PROJ_M


def _branch_states(rho: np.ndarray, theta: float) -> list[np.ndarray]:
    """Unnormalized post-measurement states for s2 = +1, -1."""
    return [m @ rho @ m.conj().T for m in kraus_pair(theta)]


def _hv_probabilities(branches) -> np.ndarray:
    probs = np.empty(4)
    for i, (s2, s3) in enumerate(CELLS):
        ket = KET_H if s3 == 1 else KET_V
        branch = branches[0 if s2 == 1 else 1]
        probs[i] = float(np.real(ket.conj() @ branch @ ket))
    return probs


def _proper(values) -> JointDistribution:
    values = np.asarray(values, dtype=float)
    # Round-off in the matrix products can leave cells at -1e-17.
    values = np.where(np.abs(values) < 1e-15, 0.0, values)
    return JointDistribution(values, Flavor.PROPER)


def ideal_joint_distribution(state: QubitState, theta: float) -> JointDistribution:
    return _proper(_hv_probabilities(_branch_states(state.rho, theta)))


def noisy_joint_distribution(state: QubitState, config: ApparatusConfig) -> JointDistribution:
    branches = _branch_states(state.rho, config.theta)
    keep = (1 + config.v_hv) / 2
    sx = S_PM.matrix
    branches = [keep * b + (1 - keep) * sx @ b @ sx for b in branches]
    true_probs = _hv_probabilities(branches)
    # PM readout flip with probability (1 - v_pm)/2.
    flipped = true_probs[[CELLS.index((-a, b)) for a, b in CELLS]]
    keep = (1 + config.v_pm) / 2
    return _proper(keep * true_probs + (1 - keep) * flipped)


def detector_efficiencies(delta: float, hwp_sign: int) -> np.ndarray:
    """Detection probability per cell; the P detector has ``1 + sign*delta``."""
    return (1 + hwp_sign * delta * S2) / (1 + abs(delta))


def expected_counts(state: QubitState, config: ApparatusConfig, hwp_sign: int) -> np.ndarray:
    """Mean of :func:`simulate_counts` for one rotation direction."""
    probs = noisy_joint_distribution(state, config).values
    return config.photons_per_setting * probs * detector_efficiencies(config.delta, hwp_sign)


def sample_counts(
    probs, config: ApparatusConfig, hwp_sign: int, rng: np.random.Generator, size=None
) -> np.ndarray:
    """Draw counts for the H-filter and V-filter runs; shape ``(*size, 4)``."""
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    n = config.photons_per_setting
    shape = () if size is None else tuple(np.atleast_1d(size))
    counts = np.zeros(shape + (4,), dtype=np.int64)
    for s3 in (1, -1):
        idx = [i for i, c in enumerate(CELLS) if c[1] == s3]
        passed = probs[idx]
        blocked = max(0.0, 1.0 - passed.sum())
        pvals = np.append(passed, blocked)
        counts[..., idx] = rng.multinomial(n, pvals / pvals.sum(), size=shape)[..., :2]
    eff = detector_efficiencies(config.delta, hwp_sign)
    if np.any(eff < 1.0):
        counts = rng.binomial(counts, np.broadcast_to(eff, counts.shape))
    return counts


def simulate_counts(
    state: QubitState, config: ApparatusConfig, hwp_sign: int, rng_seed: int
) -> CountRecord:
    if hwp_sign not in (1, -1):
        raise ValueError(f"hwp_sign must be +1 or -1, got {hwp_sign!r}")
    rng = np.random.default_rng(rng_seed)
    probs = noisy_joint_distribution(state, config).values
    counts = sample_counts(probs, config, hwp_sign, rng)
    return CountRecord(tuple(counts.tolist()), hwp_sign, rng_seed, config)


def record_frequencies(record: CountRecord) -> np.ndarray:
    """Relative frequencies of a single record, normalized by its own total."""
    counts = np.asarray(record.counts, dtype=float)
    if counts.sum() == 0:
        raise ValueError("record has no counts")
    return counts / counts.sum()


def _group_by_sign(records) -> dict:
    records = list(records)
    if not records:
        raise MissingSignError("no count records given")
    config = records[0].config
    for rec in records[1:]:
        if rec.config != config:
            raise ValueError("records come from different apparatus configurations")
    groups = {1: [], -1: []}
    for rec in records:
        groups[rec.hwp_sign].append(rec)
    missing = [s for s, g in groups.items() if not g]
    if missing:
        raise MissingSignError(
            f"no records for hwp_sign {missing[0]:+d}; the imbalance cannot be compensated"
        )
    return groups


def combine_counts(counts_by_sign: dict) -> tuple[np.ndarray, np.ndarray]:
    """Sign-balanced estimator and its normalizing total.

    ``counts_by_sign`` maps each sign to an array ``(..., R_s, 4)`` of counts.
    Counts are averaged within each sign, summed across signs and normalized.
    Every record of one configuration sees the same photon budget, so the
    swapped detector efficiencies cancel exactly in expectation.
    """
    pooled = sum(np.asarray(c, dtype=float).mean(axis=-2) for c in counts_by_sign.values())
    total = pooled.sum(axis=-1, keepdims=True)
    return pooled / total, total


def estimate_probabilities(records) -> tuple[JointDistribution, np.ndarray]:
    """Imbalance-compensated probabilities and per-cell standard errors."""
    p, cov = estimate_with_covariance(records)
    return p, np.sqrt(np.clip(np.diag(cov), 0.0, None))


def estimate_with_covariance(records) -> tuple[JointDistribution, np.ndarray]:
    """As :func:`estimate_probabilities`, returning the full 4x4 covariance.

    Each record is treated as a multinomial sample of its total count; the
    covariance is propagated linearly through the sign-balanced ratio.
    """
    groups = _group_by_sign(records)
    arrays = {s: np.array([r.counts for r in g], dtype=float) for s, g in groups.items()}
    p, total = combine_counts(arrays)
    if total[0] == 0:
        raise ValueError("records contain no counts")
    # pooled = sum_s mean_r n_r  =>  Cov(pooled) = sum_s sum_r Cov(n_r) / R_s^2
    cov_pooled = np.zeros((4, 4))
    for counts in arrays.values():
        weight = 1.0 / len(counts)
        for n in counts:
            t = n.sum()
            if t == 0:
                continue
            pi = n / t
            cov_pooled += weight**2 * t * (np.diag(pi) - np.outer(pi, pi))
    jac = (np.eye(4) - np.outer(p, np.ones(4))) / total[0]
    cov = jac @ cov_pooled @ jac.T
    return JointDistribution(p, Flavor.PROPER), cov
