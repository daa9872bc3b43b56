"""Spin-flip reconstruction of Leggett-Garg quasi-probabilities from
variable-strength sequential polarization measurements."""

from .calibration import (
    CalibrationPoint,
    DegenerateFit,
    VisibilityFit,
    characteristic_residual,
    estimate_epsilon,
    estimate_eta,
    fit_visibilities,
)
from .distribution import CELLS, Flavor, JointDistribution
from .lgi import LgiReport, LgiSource, evaluate_from_correlations, evaluate_from_distribution
from .measurement import (
    ApparatusConfig,
    CountRecord,
    MissingSignError,
    estimate_probabilities,
    ideal_joint_distribution,
    kraus_pair,
    noisy_joint_distribution,
    simulate_counts,
)
from .qubit import S_HV, S_PM, QubitState, SpinObservable, expectation, prepare_linear_polarization
from .spinflip import (
    CorrelationTriple,
    ErrorParams,
    SingularError,
    correlations_from_state,
    forward_spin_flip_map,
    invert_spin_flip_map,
    partial_invert_backaction_only,
    partial_invert_resolution_only,
    theoretical_intrinsic,
)
from .uncertainty import (
    AllReplicatesSingular,
    BootstrapSpec,
    DistributionEstimate,
    bootstrap_reconstruction,
)

__version__ = "0.1.0"
