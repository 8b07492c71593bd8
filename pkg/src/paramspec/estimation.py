"""Closed-form estimation layer: Fisher information, precision, sensitivity.

Everything here is a pure formula; the only numerics are scalar
optimizations and finite differences on the device gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .device import TransmonParams, curvature_b0, gap_slope


@dataclass(frozen=True)
class MeasurementBudget:
    """Experiment-time bookkeeping for precision bounds."""

    t_meas: float
    t_m: float
    c_readout: float = 1.0
    n_omega: int = 1

    def __post_init__(self):
        if not 0 < self.t_m < self.t_meas:
            raise ValueError("need 0 < t_m < t_meas")
        if not 0 < self.c_readout <= 1:
            raise ValueError("c_readout must be in (0, 1]")
        if self.n_omega < 1:
            raise ValueError("n_omega must be >= 1")


@dataclass(frozen=True)
class SpectralPeakModel:
    """Gaussian spectral line(s): amplitude, width ~ 1/T_phi, center(s), separation."""

    a_omega: float
    sigma_omega: float
    omega_c: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.sigma_omega <= 0:
            raise ValueError("sigma_omega must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


def fisher_gamma(gamma: float, alpha: float, t) -> float:
    """Per-trial Fisher information about the exponential rate.

    I = t^2 / (exp(gamma t + (alpha t)^2) - 1), overflow-guarded for large
    exponents where it degrades to t^2 exp(-gamma t - (alpha t)^2).
    """
    t = np.asarray(t, dtype=float)
    x = gamma * t + (alpha * t) ** 2
    with np.errstate(over="ignore"):
        out = np.where(x > 700.0, t * t * np.exp(-np.minimum(x, 1e6)), t * t / np.expm1(np.maximum(x, 1e-300)))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class OptimalTime:
    """Heuristic 1/e-crossing time and the numeric argmax of fisher_gamma."""

    heuristic: float
    argmax: float


def optimal_time(gamma: float, alpha: float) -> OptimalTime:
    """Ideal single-trial duration for rate estimation.

    The heuristic solves gamma t + (alpha t)^2 = 1 (the decay 1/e point,
    0.5 alpha^-2 (-gamma + sqrt(gamma^2 + 4 alpha^2)), limiting to 1/gamma
    as alpha -> 0); the argmax maximizes fisher_gamma numerically, giving
    ~1.6/gamma in the purely exponential case.  Downstream code defaults to
    the argmax.
    """
    if gamma < 0 or alpha < 0:
        raise ValueError("rates must be nonnegative")
    if gamma == 0 and alpha == 0:
        raise ValueError("at least one rate must be positive")
    if alpha == 0.0:
        heur = 1.0 / gamma
    elif gamma == 0.0:
        heur = 1.0 / alpha
    else:
        heur = 0.5 * (-gamma + np.sqrt(gamma**2 + 4 * alpha**2)) / alpha**2
    res = minimize_scalar(
        lambda t: -fisher_gamma(gamma, alpha, t),
        bounds=(heur * 1e-3, heur * 20.0),
        method="bounded",
        options={"xatol": heur * 1e-7},
    )
    return OptimalTime(heuristic=float(heur), argmax=float(res.x))


def sigma_gamma(budget: MeasurementBudget, gamma: float, alpha: float, t_o: float) -> float:
    """Cramer-Rao standard error of the rate over a full measurement budget.

    sqrt((t_o + t_m)/T_meas) / sqrt(I(t_o)); approaches
    sqrt(1/(T_meas T_phi)) when t_m << t_o and gamma t_o + (alpha t_o)^2 = 1.
    """
    if t_o <= 0:
        raise ValueError("t_o must be positive")
    return float(
        np.sqrt((t_o + budget.t_m) / budget.t_meas) / np.sqrt(fisher_gamma(gamma, alpha, t_o))
    )


def fisher_center(peak: SpectralPeakModel, sigma_g: float, detuning) -> float:
    """Fisher information about a single Gaussian peak center.

    A^2 exp(-d^2/s^2) d^2 / (2 pi sigma_g^2 s^6); maximal at |d| = s with
    value A^2 / (2 pi e sigma_g^2 s^4).
    """
    if sigma_g <= 0:
        raise ValueError("sigma_g must be positive")
    d = np.asarray(detuning, dtype=float)
    s = peak.sigma_omega
    out = (
        peak.a_omega**2
        * np.exp(-(d / s) ** 2)
        * d**2
        / (2.0 * np.pi * sigma_g**2 * s**6)
    )
    return out if np.ndim(out) else float(out)


def center_uncertainty(peak: SpectralPeakModel, budget: MeasurementBudget, t_phi: float) -> float:
    """Lower bound on the center-frequency uncertainty, scaling as T_phi^(-5/2)."""
    if t_phi <= 0:
        raise ValueError("t_phi must be positive")
    return float(
        np.sqrt(
            2.0 * np.pi * np.e
            / (peak.a_omega**2 * budget.n_omega * budget.t_meas * t_phi**5)
        )
    )


def fisher_epsilon(peak: SpectralPeakModel, sigma_g: float, detuning) -> float:
    """Fisher information about the separation of two peaks at +-epsilon.

    (A^2 / 8 pi sigma_g^2 s^6) [f(d - eps) - f(d + eps)]^2 with
    f(u) = u exp(-u^2 / 2 s^2).  Resolvable regime (eps >> s): maxima near
    |d| = eps + s.  Irresolvable regime (eps <~ s): maximum at d = 0 with
    value A^2 eps^2 exp(-eps^2/s^2) / (2 pi sigma_g^2 s^6).
    """
    if sigma_g <= 0:
        raise ValueError("sigma_g must be positive")
    d = np.asarray(detuning, dtype=float)
    s = peak.sigma_omega
    eps = peak.epsilon

    def f(u):
        return u * np.exp(-(u * u) / (2.0 * s * s))

    out = (
        peak.a_omega**2
        / (8.0 * np.pi * sigma_g**2 * s**6)
        * (f(d - eps) - f(d + eps)) ** 2
    )
    return out if np.ndim(out) else float(out)


def resolution_bound(
    peak: SpectralPeakModel, budget: MeasurementBudget, t_phi: float
) -> Tuple[float, float]:
    """Lower bound on the two-peak separation uncertainty, plus the
    sequential-readout (long-coherence) limit.

    The primary bound is sqrt(2 pi / (A^2 N T_meas T_phi^7 eps^2)) and obeys
    the identity bound * T_phi * eps * sqrt(e) = center_uncertainty.  The
    second value returned is the 1/(A T_phi^2 T_meas) limit recovered when
    the spectral feature outlives the probe coherence.
    """
    if t_phi <= 0:
        raise ValueError("t_phi must be positive")
    if peak.epsilon <= 0:
        raise ValueError("separation bound diverges at epsilon = 0")
    primary = np.sqrt(
        2.0 * np.pi
        / (peak.a_omega**2 * budget.n_omega * budget.t_meas * t_phi**7 * peak.epsilon**2)
    )
    sequential = 1.0 / (peak.a_omega * t_phi**2 * budget.t_meas)
    return float(primary), float(sequential)


def sensitivity_parametric(
    device: TransmonParams, phi_ac: float, budget: MeasurementBudget, t_phi: float
) -> float:
    """Minimal detectable additive flux PSD, e / (2 C b0^2 phi_ac^2 sqrt(T_phi))."""
    if phi_ac <= 0 or t_phi <= 0:
        raise ValueError("phi_ac and t_phi must be positive")
    b0 = curvature_b0(device)
    return float(np.e / (2.0 * budget.c_readout * b0**2 * phi_ac**2 * np.sqrt(t_phi)))


def sensitivity_spinlock(
    device: TransmonParams, budget: MeasurementBudget, t_1rho: float
) -> float:
    """Spin-locking counterpart, e / (2 C nu1(pi/4)^2 sqrt(T_1rho)).

    nu1(pi/4) is the gap slope on the flank, computed from the exact gap by
    finite differences; it equals [2/(1+d^2)]^(3/4) * b0, about (3/2) b0 for
    d = 1/3.
    """
    if t_1rho <= 0:
        raise ValueError("t_1rho must be positive")
    nu1 = gap_slope(device, np.pi / 4.0)
    return float(np.e / (2.0 * budget.c_readout * nu1**2 * np.sqrt(t_1rho)))


def coherent_signal_ratio(device: TransmonParams, phi_ac: float) -> float:
    """Parametric-to-spin-lock sensitivity ratio for a coherent tone.

    nu2(0) phi_ac / nu1(pi/4) = b0 phi_ac / nu1(pi/4), about (2/3) phi_ac
    for d = 1/3; values below 1 mean spin locking retains a small edge on a
    pure tone while parametric probing wins on noisy signals via T_phi.
    """
    return float(curvature_b0(device) * phi_ac / gap_slope(device, np.pi / 4.0))


def snr_gamma(
    budget: MeasurementBudget, gamma: float, alpha: float, t_o: Optional[float] = None
) -> float:
    """Signal-to-noise ratio gamma / sigma_gamma at the chosen trial duration."""
    if t_o is None:
        t_o = optimal_time(gamma, alpha).argmax
    return float(gamma / sigma_gamma(budget, gamma, alpha, t_o))
