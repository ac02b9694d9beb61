import numpy as np
import pytest

import voidtherm as vt
from voidtherm import presets


@pytest.fixture(scope="session")
def ref_material():
    return presets.reference_material()


@pytest.fixture(scope="session")
def pulse_scenario():
    return presets.pulse_scenario()


@pytest.fixture(scope="session")
def pulse_trajectory(pulse_scenario):
    return vt.run(pulse_scenario, n_samples=801)


@pytest.fixture(scope="session")
def pulse_geometry(pulse_scenario):
    return vt.support_geometry(pulse_scenario)


@pytest.fixture(scope="session")
def pulse_lambda(pulse_scenario, pulse_geometry):
    lam, _ = vt.optimize_lambda(pulse_scenario.material, pulse_geometry.L,
                                pulse_scenario.T, 0.5, (2.0, 4.0, 8.0, 16.0, 32.0))
    return lam


@pytest.fixture(scope="session")
def pulse_series(pulse_trajectory, pulse_geometry, pulse_scenario, pulse_lambda):
    return vt.compute_measure(pulse_trajectory, pulse_geometry,
                              pulse_scenario.material, pulse_lambda)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
