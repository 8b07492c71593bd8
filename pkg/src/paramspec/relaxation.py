"""Finite-T1 two-level master equation under parametric modulation.

H = omega_T(phi_e(t)) sigma_z / 2 plus the standard amplitude-damping
dissipator with collapse rate 1/T1 (excited-state lifetime exactly T1).
For this structure the second-order splitting (unitary half-step,
dissipator, unitary half-step) composes scalar maps and is exact per step:
rho_01 picks up the accumulated gap phase times exp(-t/2T1), populations
relax at 1/T1.  Trace and positivity are therefore conserved to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .device import FluxDrive, TransmonParams, energy_gap
from .errors import InsufficientDataError, IntegratorError
from .noisegen import NoiseSpec, sample_trace

TWO_PI = 2.0 * np.pi


@dataclass
class LindbladRun:
    """One relaxation-dephasing study: drive, additive noise, T1, averaging.

    t1 may be numpy.inf.  The initial state is |+>; the recorded observable
    is its projection probability P(t) = 1/2 + Re rho_01(t).  With
    post_select=True the average is conditioned on no-decay trajectories via
    a jump unraveling of the same master equation.
    """

    device: TransmonParams
    drive: FluxDrive
    noise: Optional[NoiseSpec]
    t1: float = np.inf
    n_traces: int = 2**8
    dt: Optional[float] = None
    horizon: float = 10e-9
    n_out: int = 2000
    post_select: bool = False

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError("t1 must be positive (numpy.inf allowed)")
        if self.n_traces < 1:
            raise ValueError("n_traces must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


def _resolve_dt(run: LindbladRun) -> float:
    gap0 = energy_gap(run.device, 0.0)
    dt_max = TWO_PI / (40.0 * max(gap0, run.drive.omega_m))
    if run.dt is None:
        return dt_max
    if run.dt > dt_max * (1 + 1e-9):
        raise ValueError("dt too coarse: need >= 40 steps per gap period")
    return run.dt


def evolve_master(run: LindbladRun, seed=0) -> Tuple[np.ndarray, np.ndarray]:
    """Average P(|+>) over stochastic flux-noise traces.

    Returns (times, p_plus).  Each trace propagates the 2-level density
    matrix with the exact per-step phase/decay maps; positivity
    (|rho_01| <= sqrt(rho_00 rho_11)) is monitored at the output times.
    """
    dt = _resolve_dt(run)
    m = int(np.ceil(run.horizon / dt))
    tmid = (np.arange(m) + 0.5) * dt
    out_idx = np.unique(np.round(np.linspace(1, m, min(run.n_out, m))).astype(int)) - 1
    times = (out_idx + 1) * dt

    decay_half = np.exp(-dt / (2.0 * run.t1)) if np.isfinite(run.t1) else 1.0
    decay_full = decay_half * decay_half

    base_phi = run.drive.phi_dc + run.drive.phi_ac * np.sin(run.drive.omega_m * tmid)
    children = np.random.SeedSequence(seed).spawn(run.n_traces)
    acc = np.zeros(len(out_idx))
    for child in children:
        if run.noise is not None:
            noise = sample_trace(run.noise, dt, m, child).samples
            phi = base_phi + noise
        else:
            phi = base_phi
        theta = np.cumsum(energy_gap(run.device, phi) * dt)
        # rho(0) = |+><+|: rho_00 = rho_11 = rho_01 = 1/2
        rho01 = 0.5 * np.exp(-1j * theta[out_idx]) * decay_half ** (out_idx + 1)
        if run.post_select:
            # condition on no-jump trajectories; the survival norm is
            # trace-independent, so the conditional averages add directly
            norm = 0.5 + 0.5 * decay_full ** (out_idx + 1)
            acc += 0.5 + np.real(rho01) / norm
        else:
            acc += 0.5 + np.real(rho01)
        rho11 = 0.5 * decay_full ** (out_idx + 1)
        rho00 = 1.0 - rho11
        if np.any(np.abs(rho01) ** 2 > rho00 * rho11 + 1e-8):
            raise IntegratorError("positivity violated beyond tolerance")
    return times, acc / run.n_traces


@dataclass
class EnvelopeRate:
    rate: float
    rate_err: float
    n_peaks: int = 0


def extract_envelope_rate(times, series, min_peaks: int = 5) -> EnvelopeRate:
    """Exponential decay rate of the oscillation-peak envelope.

    Local maxima of the series are fitted to A exp(-rate t) + C with a free
    floor C (1/2 for a dephasing |+> signal, 0 for a bare envelope).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    idx, _ = find_peaks(y)
    if len(idx) < min_peaks:
        raise InsufficientDataError(
            f"found {len(idx)} oscillation peaks; need >= {min_peaks}"
        )
    tp, yp = t[idx], y[idx]

    c0 = float(np.min(yp))
    a0 = max(float(yp[0] - c0), 1e-12)
    span = tp[-1] - tp[0]
    drop = (yp[0] - c0) / max(yp[-1] - c0, 1e-12)
    r0 = np.log(max(drop, 1.0 + 1e-9)) / span if span > 0 else 0.0

    def model(tt, a, rate, c):
        return a * np.exp(-rate * tt) + c

    popt, pcov = curve_fit(
        model,
        tp,
        yp,
        p0=[a0, max(r0, 1e-3 / span), c0],
        bounds=([0.0, 0.0, 0.0], [2.0, np.inf, 1.0]),
        maxfev=20000,
    )
    err = float(np.sqrt(np.abs(pcov[1, 1])))
    return EnvelopeRate(rate=float(popt[1]), rate_err=err, n_peaks=len(idx))
