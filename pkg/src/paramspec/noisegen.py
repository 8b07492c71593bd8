"""Analytic flux-noise PSD models and seeded time-domain realizations.

Conventions: PSDs are double-sided with S(-w) = S(w), in flux^2 * s, and the
process variance is (1/2pi) * integral of S over the whole real line.  Traces
are stationary, zero-mean and Gaussian; regenerating with the same
(spec, seed, dt, n) reproduces samples bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.signal import lfilter

TWO_PI = 2.0 * np.pi

DEFAULT_OMEGA_IR = TWO_PI * 1e3
DEFAULT_OMEGA_UV = TWO_PI * 1e10


@dataclass(frozen=True)
class Pink:
    """1/f spectrum S(w) = amplitude / |w| between the IR and UV cutoffs."""

    amplitude: float
    omega_ir: float = DEFAULT_OMEGA_IR
    omega_uv: float = DEFAULT_OMEGA_UV

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("pink amplitude must be nonnegative")
        if not 0 < self.omega_ir < self.omega_uv:
            raise ValueError("cutoffs must satisfy 0 < omega_ir < omega_uv")


@dataclass(frozen=True)
class AR1:
    """First-order autoregressive process, optionally heterodyned to `center`.

    t_corr is the autocorrelation time, sigma the stationary standard
    deviation of the base process.  A nonzero center multiplies the trace by
    sqrt(2) cos(center * t + theta) with a random phase theta per trace,
    which translates the Lorentzian-like PSD to +-center while preserving
    the variance.
    """

    t_corr: float
    sigma: float
    center: float = 0.0

    def __post_init__(self):
        if self.t_corr <= 0:
            raise ValueError("t_corr must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.center < 0:
            raise ValueError("center must be nonnegative")


@dataclass(frozen=True)
class White:
    """Flat double-sided spectrum S(w) = level (flux^2 * s)."""

    level: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("white level must be nonnegative")


@dataclass(frozen=True)
class Composite:
    """Sum of independent noise sources; PSDs add, traces add."""

    components: Tuple["NoiseSpec", ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) == 0:
            raise ValueError("composite needs at least one component")


NoiseSpec = Union[Pink, AR1, White, Composite]


@dataclass(frozen=True)
class NoiseTrace:
    """Sampled reduced-flux realization at uniform spacing dt."""

    dt: float
    samples: np.ndarray
    seed: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if len(self.samples) < 2:
            raise ValueError("a trace needs at least 2 samples")


def _ar1_base_psd(spec: AR1, omega, dt=None):
    """Base (unshifted) AR1 PSD; continuous Lorentzian limit when dt is None."""
    w = np.abs(np.asarray(omega, dtype=float))
    T = spec.t_corr
    if dt is None:
        return 2.0 * spec.sigma**2 * T / (1.0 + (w * T) ** 2)
    rho = np.exp(-dt / T)
    sig_eps2 = spec.sigma**2 * (1.0 - rho * rho)
    return dt * sig_eps2 / (1.0 + rho * rho - 2.0 * rho * np.cos(w * dt))


def analytic_psd(spec: NoiseSpec, omega, dt=None):
    """Double-sided PSD of `spec` at angular frequency omega (rad/s).

    Negative arguments are mirrored.  For AR1, `dt` selects the exact
    discrete-sampling spectrum; the default is its dt -> 0 Lorentzian limit,
    2 sigma^2 T / (1 + (w T)^2).  A shifted AR1 evaluates the exact
    heterodyne spectrum [S_base(w - c) + S_base(w + c)] / 2.

    Raises
    ------
    ValueError
        For a pink spectrum evaluated at omega = 0 (the 1/f divergence is
        handled by the IR cutoff, not by this function).
    """
    w = np.abs(np.asarray(omega, dtype=float))
    scalar = np.isscalar(omega) or np.ndim(omega) == 0
    if isinstance(spec, Pink):
        if np.any(w == 0.0) and spec.amplitude > 0:
            raise ValueError("pink PSD diverges at omega = 0; evaluate inside [omega_ir, omega_uv]")
        inband = (w >= spec.omega_ir) & (w <= spec.omega_uv)
        out = np.where(inband, spec.amplitude / np.where(w == 0.0, 1.0, w), 0.0)
    elif isinstance(spec, AR1):
        if spec.center == 0.0:
            out = _ar1_base_psd(spec, w, dt)
        else:
            out = 0.5 * (
                _ar1_base_psd(spec, w - spec.center, dt)
                + _ar1_base_psd(spec, w + spec.center, dt)
            )
    elif isinstance(spec, White):
        out = np.full_like(w, spec.level)
    elif isinstance(spec, Composite):
        out = sum(analytic_psd(c, w, dt) for c in spec.components)
    else:
        raise TypeError(f"unknown noise spec {type(spec).__name__}")
    return float(out) if scalar else out


def relative_ac_noise(
    level_fraction: float,
    phi_ac: float,
    omega_ir: float = DEFAULT_OMEGA_IR,
    omega_uv: float = DEFAULT_OMEGA_UV,
) -> Pink:
    """Pink spec for multiplicative drive noise at a given relative level.

    The amplitude is set so the one-sided band integral of S over
    [omega_ir, omega_uv] equals (level_fraction * phi_ac)^2, i.e.
    A = variance / ln(omega_uv / omega_ir).
    """
    if level_fraction < 0:
        raise ValueError("level_fraction must be nonnegative")
    variance = (level_fraction * phi_ac) ** 2
    return Pink(variance / np.log(omega_uv / omega_ir), omega_ir, omega_uv)


@dataclass(frozen=True)
class RelativeAC:
    """Multiplicative noise declared as a fraction of the drive amplitude.

    Not a sampleable spec by itself; resolve(phi_ac) materializes the Pink
    spectrum for a concrete drive amplitude.
    """

    level_fraction: float
    omega_ir: float = DEFAULT_OMEGA_IR
    omega_uv: float = DEFAULT_OMEGA_UV

    def resolve(self, phi_ac: float) -> Pink:
        return relative_ac_noise(self.level_fraction, phi_ac, self.omega_ir, self.omega_uv)


def resolve_ac(spec, phi_ac: float):
    """Materialize a RelativeAC marker; pass every other spec through."""
    if isinstance(spec, RelativeAC):
        return spec.resolve(phi_ac)
    return spec


def band_variance(spec: NoiseSpec) -> float:
    """One-sided band integral of the PSD over its support, without the 1/2pi.

    For a Pink spec this is the quantity relative_ac_noise fixes to
    (level * phi_ac)^2; the time-domain trace variance is 1/pi of it for a
    pure pink spectrum.
    """
    from scipy.integrate import quad

    if isinstance(spec, Pink):
        if spec.amplitude == 0.0:
            return 0.0
        val, _ = quad(lambda w: spec.amplitude / w, spec.omega_ir, spec.omega_uv)
        return float(val)
    if isinstance(spec, Composite):
        return sum(band_variance(c) for c in spec.components)
    raise TypeError("band_variance is defined for Pink (and composites of Pink)")


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def _seed_fingerprint(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _sample_pink(spec: Pink, dt, n, rng):
    # Frequency-domain synthesis: complex Gaussian rfft bins scaled so the
    # expected periodogram (dt/n)|X_k|^2 equals S(w_k) inside the band.
    omega = TWO_PI * np.fft.rfftfreq(n, dt)
    S = np.zeros_like(omega)
    inband = (omega >= spec.omega_ir) & (omega <= spec.omega_uv) & (omega > 0)
    S[inband] = spec.amplitude / omega[inband]
    scale = np.sqrt(n * S / dt)
    z = rng.standard_normal(len(omega)) + 1j * rng.standard_normal(len(omega))
    z /= np.sqrt(2.0)
    z[0] = 0.0
    if n % 2 == 0:
        # Nyquist bin must be real with unit variance.
        z[-1] = rng.standard_normal()
    return np.fft.irfft(scale * z, n)


def _sample_ar1(spec: AR1, dt, n, rng):
    if dt > spec.t_corr / 2.0:
        raise ValueError("dt must be <= t_corr/2 to resolve the AR1 correlation time")
    rho = np.exp(-dt / spec.t_corr)
    eps = rng.standard_normal(n) * (spec.sigma * np.sqrt(1.0 - rho * rho))
    x0 = rng.standard_normal() * spec.sigma  # stationary start
    x = lfilter([1.0], [1.0, -rho], eps, zi=np.array([rho * x0]))[0]
    if spec.center > 0.0:
        theta = rng.uniform(0.0, TWO_PI)
        t = np.arange(n) * dt
        x = x * np.sqrt(2.0) * np.cos(spec.center * t + theta)
    return x


def sample_trace(spec: NoiseSpec, dt: float, n: int, seed) -> NoiseTrace:
    """Generate a seeded trace of n samples at spacing dt.

    Composite traces sum independent component traces whose seeds are
    spawned deterministically from the parent seed.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if dt <= 0:
        raise ValueError("dt must be positive")
    ss = _as_seedseq(seed)
    fingerprint = _seed_fingerprint(ss) if not isinstance(seed, (int, np.integer)) else int(seed)

    if isinstance(spec, Composite):
        children = ss.spawn(len(spec.components))
        total = np.zeros(n)
        for comp, child in zip(spec.components, children):
            total += sample_trace(comp, dt, n, child).samples
        return NoiseTrace(dt, total, fingerprint)

    rng = np.random.default_rng(ss)
    if isinstance(spec, Pink):
        x = _sample_pink(spec, dt, n, rng) if spec.amplitude > 0 else np.zeros(n)
    elif isinstance(spec, AR1):
        x = _sample_ar1(spec, dt, n, rng) if spec.sigma > 0 else np.zeros(n)
    elif isinstance(spec, White):
        x = rng.standard_normal(n) * np.sqrt(spec.level / dt) if spec.level > 0 else np.zeros(n)
    else:
        raise TypeError(f"unknown noise spec {type(spec).__name__}")
    return NoiseTrace(dt, x, fingerprint)


def averaged_periodogram(spec: NoiseSpec, dt, n, n_traces, seed):
    """Mean periodogram over independently seeded traces.

    Returns (omega, P) with P calibrated to the double-sided PSD; used by
    the generator oracles.
    """
    ss = _as_seedseq(seed)
    children = ss.spawn(n_traces)
    P = np.zeros(n // 2 + 1)
    for child in children:
        x = sample_trace(spec, dt, n, child).samples
        P += (dt / n) * np.abs(np.fft.rfft(x)) ** 2
    return TWO_PI * np.fft.rfftfreq(n, dt), P / n_traces
