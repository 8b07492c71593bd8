"""Flux-tunable transmon circuit model.

All energies and frequencies are angular (rad/s) with hbar = 1; external
flux is the dimensionless reduced flux phi_e = pi * Phi_e / Phi_0.  The CLI
layer converts plain Hz to rad/s once at ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

# First minimum of the gap along the flux axis; drives must stay inside it.
PHI_MAX = np.pi / 2.0

# Reduced flux per micro flux quantum: phi_e = pi * Phi/Phi_0.
MU_PHI0 = np.pi * 1e-6


@dataclass(frozen=True)
class TransmonParams:
    """Circuit energies of an asymmetric two-junction transmon.

    Parameters
    ----------
    ec : float
        Capacitive energy E_C/hbar in rad/s.
    ej1, ej2 : float
        Junction energies E_J1/hbar, E_J2/hbar in rad/s.
    """

    ec: float
    ej1: float
    ej2: float

    def __post_init__(self):
        if self.ec <= 0 or self.ej1 <= 0 or self.ej2 <= 0:
            raise ValueError("ec, ej1, ej2 must all be positive")
        if not 0.0 < self.d < 1.0:
            raise ValueError("junction asymmetry must satisfy 0 < d < 1")
        if self.xi >= 1.0:
            raise ValueError("not in the transmon regime: xi = sqrt(2Ec/Ej) >= 1")

    @property
    def ej_total(self) -> float:
        return self.ej1 + self.ej2

    @property
    def d(self) -> float:
        """Junction asymmetry |E_J2 - E_J1| / (E_J1 + E_J2), stored as a magnitude."""
        return abs(self.ej2 - self.ej1) / self.ej_total

    @property
    def xi(self) -> float:
        """Small oscillator-expansion parameter sqrt(2 E_C / E_J)."""
        return float(np.sqrt(2.0 * self.ec / self.ej_total))

    @property
    def eta(self) -> float:
        """Anharmonicity; equal to E_C at leading order in xi."""
        return self.ec

    @property
    def omega_max(self) -> float:
        """Energy gap at zero flux, sqrt(8 E_J E_C) - E_C."""
        return float(np.sqrt(8.0 * self.ej_total * self.ec) - self.ec)

    @classmethod
    def from_hz(cls, ec_hz: float, ej1_hz: float, ej2_hz: float) -> "TransmonParams":
        """Build from plain frequencies in Hz (config-file convention)."""
        return cls(TWO_PI * ec_hz, TWO_PI * ej1_hz, TWO_PI * ej2_hz)

    @classmethod
    def from_spectrum(cls, f_max_hz: float, eta_hz: float, d: float) -> "TransmonParams":
        """Build from the observable triple (gap at zero flux, anharmonicity, asymmetry).

        Inverts omega_max = sqrt(8 E_J E_C) - E_C with E_C = eta, then splits
        the total Josephson energy according to the asymmetry d.
        """
        ec = TWO_PI * eta_hz
        omega_max = TWO_PI * f_max_hz
        ej_total = (omega_max + ec) ** 2 / (8.0 * ec)
        return cls(ec, 0.5 * (1.0 - d) * ej_total, 0.5 * (1.0 + d) * ej_total)


@dataclass(frozen=True)
class FluxDrive:
    """Sinusoidal reduced-flux drive phi_dc + phi_ac sin(omega_m t)."""

    phi_dc: float
    phi_ac: float
    omega_m: float
    duration: float

    def __post_init__(self):
        if self.omega_m <= 0:
            raise ValueError("omega_m must be positive")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if abs(self.phi_dc) + self.phi_ac > PHI_MAX + 1e-12:
            raise ValueError(
                "|phi_dc| + phi_ac exceeds phi_max = pi/2; drive leaves the quadratic well"
            )

    @property
    def period(self) -> float:
        return TWO_PI / self.omega_m


def effective_josephson(p: TransmonParams, phi_e):
    """Tunable Josephson energy (E_J1+E_J2) sqrt(cos^2 phi_e + d^2 sin^2 phi_e)."""
    c, s = np.cos(phi_e), np.sin(phi_e)
    return p.ej_total * np.sqrt(c * c + p.d * p.d * s * s)


def energy_gap(p: TransmonParams, phi_e):
    """Qubit gap omega_T(phi_e) = sqrt(8 E_Jeff(phi_e) E_C) - E_C."""
    return np.sqrt(8.0 * effective_josephson(p, phi_e) * p.ec) - p.ec


def curvature_b0(p: TransmonParams, step: float = 1e-4) -> float:
    """Half the second flux derivative of the gap at the sweet spot.

    Fourth-order central finite differences; negative for the sweet-spot
    maximum at phi_e = 0.
    """
    h = step
    f = energy_gap(p, np.array([-2 * h, -h, 0.0, h, 2 * h]))
    second = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12.0 * h * h)
    return 0.5 * float(second)


def gap_slope(p: TransmonParams, phi_e: float, step: float = 1e-6) -> float:
    """First flux derivative of the gap, central differences.

    This is the k = 1 power-series coefficient of the gap; it vanishes at the
    sweet spot and is maximal in magnitude on the slope.
    """
    f = energy_gap(p, np.array([phi_e - 2 * step, phi_e - step, phi_e + step, phi_e + 2 * step]))
    return float((f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12.0 * step))


def drive_value(drive: FluxDrive, t, dc_noise=0.0, ac_noise=0.0):
    """Instantaneous reduced flux including injected additive/multiplicative noise."""
    return drive.phi_dc + dc_noise + (drive.phi_ac + ac_noise) * np.sin(drive.omega_m * t)


def delta_omega(p: TransmonParams, drive: FluxDrive, t, dc_noise=0.0, ac_noise=0.0):
    """First-order noise-induced gap shift under sweet-spot modulation.

    -2 b0 phi_ac sin(omega_m t) * dphi_dc - b0 phi_ac [1 - cos(2 omega_m t)] * dphi_ac.
    Linear in each noise input by construction; requires phi_dc = 0 (use the
    exact gap difference away from the sweet spot).
    """
    if drive.phi_dc != 0.0:
        raise ValueError("first-order model is only valid at the sweet spot (phi_dc = 0)")
    b0 = curvature_b0(p)
    wt = drive.omega_m * np.asarray(t)
    return (
        -2.0 * b0 * drive.phi_ac * np.sin(wt) * dc_noise
        - b0 * drive.phi_ac * (1.0 - np.cos(2.0 * wt)) * ac_noise
    )
