import math

import numpy as np
import pytest

from spinflip_lgi.calibration import CalibrationPoint, VisibilityFit
from spinflip_lgi.measurement import ApparatusConfig, simulate_counts
from spinflip_lgi.qubit import prepare_linear_polarization
from spinflip_lgi.spinflip import ErrorParams
from spinflip_lgi.uncertainty import (
    AllReplicatesSingular,
    BootstrapSpec,
    bootstrap_reconstruction,
    linearized_reconstruction_stderr,
)

from conftest import INTRINSIC_MP, V_HV, V_PM

STATE = prepare_linear_polarization(math.radians(22.496))
FIT = VisibilityFit(V_PM, 0.0, V_HV, 0.0, 0.0)


def setup(theta_deg, photons=1_000_000, seed=0):
    app = ApparatusConfig(math.radians(theta_deg), V_PM, V_HV, 0.0, photons)
    records = [simulate_counts(STATE, app, s, seed + (s > 0)) for s in (1, -1)]
    calib = CalibrationPoint(app.theta, app.epsilon, 0.0, app.eta, 0.0)
    return app, records, calib


def test_huge_counts_without_visibility_noise_give_tiny_stderr():
    _, records, calib = setup(12, photons=10**12)
    est = bootstrap_reconstruction(records, calib, FIT, BootstrapSpec(200, 1))
    assert np.all(est.stderr < 1e-5)
    assert est.dropped == 0 and est.replicate_count == 200


def test_weak_measurement_end_has_larger_errors():
    spec = BootstrapSpec(500, 2, 0.010, 0.0001)
    _, rec2, cal2 = setup(2)
    _, rec12, cal12 = setup(12)
    weak = bootstrap_reconstruction(rec2, cal2, FIT, spec)
    mid = bootstrap_reconstruction(rec12, cal12, FIT, spec)
    assert np.all(weak.stderr > mid.stderr)


def test_mean_matches_intrinsic_value():
    _, records, calib = setup(12)
    est = bootstrap_reconstruction(records, calib, FIT, BootstrapSpec(1000, 3, 0.010, 0.0001))
    assert abs(est.mean[(-1, 1)] - INTRINSIC_MP) < 3 * est.stderr[1]
    assert est.mean.values.sum() == pytest.approx(1.0, abs=1e-9)


def test_count_only_bootstrap_agrees_with_delta_method():
    app, records, calib = setup(12, photons=100_000)
    est = bootstrap_reconstruction(records, calib, FIT, BootstrapSpec(4000, 4))
    lin = linearized_reconstruction_stderr(records, ErrorParams(app.epsilon, app.eta))
    np.testing.assert_allclose(est.stderr, lin, rtol=0.08)


def test_seeded_bootstrap_is_deterministic():
    _, records, calib = setup(8, photons=10_000)
    spec = BootstrapSpec(100, 9, 0.01, 0.001)
    a = bootstrap_reconstruction(records, calib, FIT, spec)
    b = bootstrap_reconstruction(records, calib, FIT, spec)
    assert np.array_equal(a.mean.values, b.mean.values)
    assert np.array_equal(a.stderr, b.stderr)


def test_all_singular_at_zero_angle():
    _, records, calib = setup(0, photons=1000)
    with pytest.raises(AllReplicatesSingular):
        bootstrap_reconstruction(records, calib, FIT, BootstrapSpec(20, 0))


def test_theta_mismatch_rejected():
    _, records, _ = setup(12, photons=1000)
    wrong = CalibrationPoint(math.radians(10), 0.5, 0.0, 0.5, 0.0)
    with pytest.raises(ValueError, match="does not match"):
        bootstrap_reconstruction(records, wrong, FIT, BootstrapSpec(20, 0))


@pytest.mark.parametrize(
    "kwargs", [{"replicates": 1}, {"replicates": 2.5}, {"v_pm_sigma": -0.1}, {"v_hv_sigma": -1e-9}]
)
def test_bootstrap_spec_validation(kwargs):
    with pytest.raises(ValueError):
        BootstrapSpec(**kwargs)
