import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paramspec import (
    FluxDrive,
    TransmonParams,
    curvature_b0,
    delta_omega,
    drive_value,
    effective_josephson,
    energy_gap,
)

TWO_PI = 2.0 * np.pi


def test_effective_josephson_endpoints(fig3_device):
    p = fig3_device
    assert effective_josephson(p, 0.0) == pytest.approx(p.ej_total, rel=1e-12)
    assert effective_josephson(p, np.pi / 2) == pytest.approx(p.d * p.ej_total, rel=1e-12)


def test_effective_josephson_quarter_flux():
    p = TransmonParams.from_spectrum(6.0e9, 3.0e8, 1.0 / 3.0)
    expected = p.ej_total * np.sqrt(0.5 + (1.0 / 9.0) / 2.0)
    assert effective_josephson(p, np.pi / 4) == pytest.approx(expected, rel=1e-12)


def test_fig3_parameter_inversion(fig3_device):
    # E_J,total/2pi = (6.3 GHz)^2 / (8 * 0.3 GHz) reproduces the 6 GHz gap
    assert fig3_device.ej_total / TWO_PI == pytest.approx(16.5375e9, rel=1e-9)
    assert energy_gap(fig3_device, 0.0) == pytest.approx(fig3_device.omega_max, rel=1e-12)
    assert fig3_device.omega_max / TWO_PI == pytest.approx(6.0e9, rel=1e-9)
    assert fig3_device.d == pytest.approx(1.0 / 3.0, rel=1e-9)


def test_gap_symmetry_and_monotonicity(fig3_device):
    phis = np.linspace(0.0, np.pi / 2, 200)
    gaps = energy_gap(fig3_device, phis)
    assert np.all(np.diff(gaps) < 0)
    assert np.allclose(energy_gap(fig3_device, -phis), gaps, rtol=1e-13)
    assert np.allclose(energy_gap(fig3_device, phis + np.pi), gaps, rtol=1e-13)


@settings(max_examples=30, deadline=None)
@given(
    fmax=st.floats(1e8, 2e10),
    eta_frac=st.floats(0.005, 0.1),
    d=st.floats(0.05, 0.95),
    phi=st.floats(-np.pi, np.pi),
)
def test_gap_even_and_periodic_property(fmax, eta_frac, d, phi):
    p = TransmonParams.from_spectrum(fmax, eta_frac * fmax, d)
    g = energy_gap(p, phi)
    assert energy_gap(p, -phi) == pytest.approx(g, rel=1e-12)
    assert energy_gap(p, phi + np.pi) == pytest.approx(g, rel=1e-12)
    assert g <= p.omega_max + 1e-6


def test_curvature_against_analytic_form(fig3_device):
    p = fig3_device
    # leading-order expansion of sqrt(8 Ej Ec sqrt(cos^2+d^2 sin^2))
    analytic = -np.sqrt(8.0 * p.ej_total * p.ec) * (1.0 - p.d**2) / 4.0
    b0 = curvature_b0(p)
    assert b0 < 0
    assert b0 == pytest.approx(analytic, rel=1e-7)


def test_curvature_richardson_consistency(fig3_device):
    # plain second-difference oracle at shrinking steps converges to b0
    p = fig3_device
    b0 = curvature_b0(p)
    for h in (1e-3, 1e-4):
        oracle = (energy_gap(p, h) - 2 * energy_gap(p, 0.0) + energy_gap(p, -h)) / (2 * h * h)
        assert oracle == pytest.approx(b0, rel=1e-4)


def test_quadratic_model_accuracy(fig3_device):
    p = fig3_device
    b0 = curvature_b0(p)
    gap0 = energy_gap(p, 0.0)
    phis = np.linspace(-0.2, 0.2, 101)[np.abs(np.linspace(-0.2, 0.2, 101)) > 0.01]
    rel_err = np.abs(energy_gap(p, phis) - gap0 - b0 * phis**2) / np.abs(b0 * phis**2)
    assert np.max(rel_err) < 0.05
    phis3 = np.linspace(-0.3, 0.3, 101)
    model_err = np.abs(energy_gap(p, phis3) - gap0 - b0 * phis3**2) / gap0
    assert np.max(model_err) < 0.01


def test_drive_value_trivials():
    drive = FluxDrive(0.1, 0.3, TWO_PI * 1e8, 1e-6)
    assert drive_value(drive, 0.0) == pytest.approx(0.1)
    t_quarter = np.pi / (2 * drive.omega_m)
    assert drive_value(drive, t_quarter) == pytest.approx(0.4)
    assert drive_value(drive, 0.37e-8, dc_noise=0.007) - drive_value(drive, 0.37e-8) == pytest.approx(0.007)


def test_drive_invariants():
    with pytest.raises(ValueError):
        FluxDrive(0.4, 1.3, TWO_PI * 1e8, 1e-6)
    with pytest.raises(ValueError):
        FluxDrive(0.0, 0.3, -1.0, 1e-6)
    with pytest.raises(ValueError):
        FluxDrive(0.0, 0.3, TWO_PI * 1e8, 0.0)


def test_device_invariants():
    with pytest.raises(ValueError):
        TransmonParams.from_hz(3e8, 1e9, 1e9)  # d = 0
    with pytest.raises(ValueError):
        TransmonParams.from_hz(-1.0, 1e9, 2e9)
    with pytest.raises(ValueError):
        TransmonParams.from_hz(5e9, 1e9, 2e9)  # not transmon regime


def test_delta_omega_trivials(fig3_device):
    drive = FluxDrive(0.0, 0.6 * np.pi / 2, TWO_PI * 5e8, 1e-6)
    assert delta_omega(fig3_device, drive, 0.123e-9) == 0.0
    b0 = curvature_b0(fig3_device)
    t_quarter = np.pi / (2 * drive.omega_m)
    got = delta_omega(fig3_device, drive, t_quarter, dc_noise=1e-5)
    assert got == pytest.approx(-2.0 * b0 * drive.phi_ac * 1e-5, rel=1e-9)
    # linearity in each input
    a = delta_omega(fig3_device, drive, 0.3e-9, dc_noise=2e-6)
    assert delta_omega(fig3_device, drive, 0.3e-9, dc_noise=4e-6) == pytest.approx(2 * a, rel=1e-12)


def test_delta_omega_matches_exact_gap_shift(fig3_device):
    # first-order model carries the printed overall sign, opposite to the
    # Taylor shift of the quadratic gap; magnitudes must agree to O(noise^2)
    p = fig3_device
    drive = FluxDrive(0.0, 0.6 * np.pi / 2, TWO_PI * 5e8, 1e-6)
    noise = 1e-4
    for t in (0.11e-9, 0.29e-9, 0.73e-9):
        phi_t = drive_value(drive, t)
        exact = energy_gap(p, phi_t + noise) - energy_gap(p, phi_t)
        model = delta_omega(p, drive, t, dc_noise=noise)
        assert model == pytest.approx(-exact, rel=5e-3)
    # multiplicative channel
    for t in (0.11e-9, 0.41e-9):
        phi_t = drive_value(drive, t)
        exact = energy_gap(p, drive_value(drive, t, ac_noise=noise)) - energy_gap(p, phi_t)
        model = delta_omega(p, drive, t, ac_noise=noise)
        assert model == pytest.approx(-exact, rel=5e-3, abs=1e-3 * abs(model) + 1.0)


def test_delta_omega_requires_sweet_spot(fig3_device):
    drive = FluxDrive(0.05, 0.3, TWO_PI * 5e8, 1e-6)
    with pytest.raises(ValueError):
        delta_omega(fig3_device, drive, 0.0, 1e-5, 0.0)
