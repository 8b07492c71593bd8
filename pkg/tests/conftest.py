import numpy as np
import pytest

from paramspec import ChargeBasisModel, DragPulse, TransmonParams, calibrate_pulse

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def fig3_device():
    """Transmon with gap 6 GHz, anharmonicity 300 MHz, asymmetry 1/3."""
    return TransmonParams.from_spectrum(6.0e9, 3.0e8, 1.0 / 3.0)


@pytest.fixture(scope="session")
def desk_device():
    """Scaled-down device for fast master-equation and cross-engine tests."""
    return TransmonParams.from_spectrum(2.5e8, 1.0e7, 1.0 / 3.0)


@pytest.fixture(scope="session")
def charge_model(fig3_device):
    return ChargeBasisModel(fig3_device, n_charge=401, n_levels=10)


@pytest.fixture(scope="session")
def calibrated_pulse(charge_model):
    """One DRAG calibration shared by the multilevel and acceptance suites."""
    base = DragPulse(
        amplitude=0.0, center=0.0, width=5e-9, drive_freq=0.0, drag_factor=0.3
    )
    return calibrate_pulse(charge_model, base)
