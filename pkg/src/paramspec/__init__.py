"""paramspec: parametric noise spectroscopy on flux-tunable transmons, at desk scale.

Simulates sweet-spot parametric modulation with dynamical decoupling,
reconstructs flux-noise spectra from fitted dephasing rates, evaluates the
closed-form estimation bounds, and quantifies multi-level leakage.
"""

from .device import (
    MU_PHI0,
    PHI_MAX,
    FluxDrive,
    TransmonParams,
    curvature_b0,
    delta_omega,
    drive_value,
    effective_josephson,
    energy_gap,
    gap_slope,
)
from .dephasing import (
    DDSequence,
    DecayEstimate,
    analytic_decoherence,
    control_window,
    filter_function,
    fit_decay,
    simulate_coherence,
    t_phi_from_rates,
)
from .estimation import (
    MeasurementBudget,
    OptimalTime,
    SpectralPeakModel,
    center_uncertainty,
    coherent_signal_ratio,
    fisher_center,
    fisher_epsilon,
    fisher_gamma,
    optimal_time,
    resolution_bound,
    sensitivity_parametric,
    sensitivity_spinlock,
    sigma_gamma,
    snr_gamma,
)
from .errors import (
    CalibrationError,
    ConfigError,
    FitDegenerateError,
    InsufficientDataError,
    IntegratorError,
    ParamspecError,
    QuadratureError,
    ResolutionFailureError,
)
from .multilevel import (
    CalibratedPulse,
    ChargeBasisModel,
    DragPulse,
    EvolutionResult,
    KerrModel,
    analytic_leak_amplitude,
    bessel_interaction_terms,
    build_charge_hamiltonian,
    calibrate_pulse,
    evolve_sequence,
    leakage_metric,
    make_xy8_pulses,
    resonance_order,
    spinlock_leakage,
)
from .noisegen import (
    AR1,
    Composite,
    NoiseSpec,
    NoiseTrace,
    Pink,
    RelativeAC,
    White,
    analytic_psd,
    averaged_periodogram,
    band_variance,
    relative_ac_noise,
    resolve_ac,
    sample_trace,
)
from .relaxation import EnvelopeRate, LindbladRun, evolve_master, extract_envelope_rate
from .spectroscopy import (
    PeakFitResult,
    ScanPlan,
    ScanResult,
    ScanRow,
    default_frequencies,
    resolve_peaks,
    run_scan,
)

__version__ = "0.1.0"
