"""Configuration ingestion and validation.

Configs are JSON with plain frequencies in Hz; conversion to angular
frequencies happens here, once.  Unknown keys are rejected and every
validation error names the offending key path.  Flux amplitudes may be
given either directly in reduced-flux units or as *_uphi0 values in micro
flux quanta (phi_e = pi * Phi/Phi_0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .dephasing import DDSequence
from .device import MU_PHI0, PHI_MAX, FluxDrive, TransmonParams
from .errors import ConfigError
from .noisegen import (
    AR1,
    Composite,
    NoiseSpec,
    Pink,
    RelativeAC,
    White,
    resolve_ac,
)

TWO_PI = 2.0 * np.pi


def _reject_unknown(section: Dict[str, Any], allowed, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key `{path}.{key}`" if path else f"unknown key `{key}`")


def _require(section: Dict[str, Any], key: str, path: str):
    if key not in section:
        raise ConfigError(f"missing required key `{path}.{key}`")
    return section[key]


def _number(section, key, path, lo=None, hi=None, default=None, lo_open=False):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key `{path}.{key}`")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"`{path}.{key}` must be a number")
    val = float(val)
    if lo is not None and (val <= lo if lo_open else val < lo):
        raise ConfigError(f"`{path}.{key}` = {val:g} is out of range (must be {'>' if lo_open else '>='} {lo:g})")
    if hi is not None and val > hi:
        raise ConfigError(f"`{path}.{key}` = {val:g} is out of range (must be <= {hi:g})")
    return val


def parse_noise_spec(obj, path: str):
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"`{path}` must be an object or null")
    kind = _require(obj, "type", path)
    if kind == "pink":
        _reject_unknown(obj, {"type", "amplitude", "amp_uphi0", "f_ir_hz", "f_uv_hz"}, path)
        if ("amplitude" in obj) == ("amp_uphi0" in obj):
            raise ConfigError(f"`{path}`: give exactly one of `amplitude`, `amp_uphi0`")
        if "amplitude" in obj:
            amp = _number(obj, "amplitude", path, lo=0.0)
        else:
            amp = (_number(obj, "amp_uphi0", path, lo=0.0) * MU_PHI0) ** 2
        return Pink(
            amp,
            TWO_PI * _number(obj, "f_ir_hz", path, lo=0.0, lo_open=True, default=1e3),
            TWO_PI * _number(obj, "f_uv_hz", path, lo=0.0, lo_open=True, default=1e10),
        )
    if kind == "ar1":
        _reject_unknown(obj, {"type", "t_corr_s", "sigma", "sigma_uphi0", "f_center_hz"}, path)
        if ("sigma" in obj) == ("sigma_uphi0" in obj):
            raise ConfigError(f"`{path}`: give exactly one of `sigma`, `sigma_uphi0`")
        sigma = (
            _number(obj, "sigma", path, lo=0.0)
            if "sigma" in obj
            else _number(obj, "sigma_uphi0", path, lo=0.0) * MU_PHI0
        )
        return AR1(
            _number(obj, "t_corr_s", path, lo=0.0, lo_open=True),
            sigma,
            TWO_PI * _number(obj, "f_center_hz", path, lo=0.0, default=0.0),
        )
    if kind == "white":
        _reject_unknown(obj, {"type", "level"}, path)
        return White(_number(obj, "level", path, lo=0.0))
    if kind == "relative_ac":
        _reject_unknown(obj, {"type", "level_fraction", "f_ir_hz", "f_uv_hz"}, path)
        return RelativeAC(
            _number(obj, "level_fraction", path, lo=0.0),
            TWO_PI * _number(obj, "f_ir_hz", path, lo=0.0, lo_open=True, default=1e3),
            TWO_PI * _number(obj, "f_uv_hz", path, lo=0.0, lo_open=True, default=1e10),
        )
    if kind == "composite":
        _reject_unknown(obj, {"type", "components"}, path)
        comps = _require(obj, "components", path)
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"`{path}.components` must be a nonempty list")
        return Composite(
            tuple(parse_noise_spec(c, f"{path}.components[{i}]") for i, c in enumerate(comps))
        )
    raise ConfigError(f"`{path}.type` = {kind!r} is not a known noise type")


def parse_device(obj, path: str = "device") -> TransmonParams:
    if not isinstance(obj, dict):
        raise ConfigError(f"`{path}` must be an object")
    if "f_max_hz" in obj:
        _reject_unknown(obj, {"f_max_hz", "eta_hz", "d"}, path)
        return TransmonParams.from_spectrum(
            _number(obj, "f_max_hz", path, lo=0.0, lo_open=True),
            _number(obj, "eta_hz", path, lo=0.0, lo_open=True),
            _number(obj, "d", path, lo=0.0, hi=1.0, lo_open=True),
        )
    _reject_unknown(obj, {"ec_hz", "ej1_hz", "ej2_hz"}, path)
    try:
        return TransmonParams.from_hz(
            _number(obj, "ec_hz", path, lo=0.0, lo_open=True),
            _number(obj, "ej1_hz", path, lo=0.0, lo_open=True),
            _number(obj, "ej2_hz", path, lo=0.0, lo_open=True),
        )
    except ValueError as exc:
        raise ConfigError(f"`{path}`: {exc}") from exc


def parse_dd(obj, path: str = "dd") -> DDSequence:
    if obj is None:
        return DDSequence.none()
    _reject_unknown(obj, {"sequence", "n_pulses"}, path)
    seq = obj.get("sequence", "none")
    if seq == "none":
        return DDSequence.none()
    if seq == "hahn":
        return DDSequence.hahn()
    if seq == "xy8":
        reps = int(_number(obj, "n_pulses", path, lo=8, default=8)) // 8
        return DDSequence.xy8(max(reps, 1))
    if seq == "cpmg":
        return DDSequence.cpmg(int(_number(obj, "n_pulses", path, lo=1)))
    raise ConfigError(f"`{path}.sequence` = {seq!r} is not one of none|hahn|xy8|cpmg")


def parse_drive(obj, path: str = "drive") -> FluxDrive:
    if not isinstance(obj, dict):
        raise ConfigError(f"`{path}` must be an object")
    _reject_unknown(obj, {"f_m_hz", "phi_ac_frac", "phi_ac", "phi_dc", "duration_s"}, path)
    if ("phi_ac_frac" in obj) == ("phi_ac" in obj):
        raise ConfigError(f"`{path}`: give exactly one of `phi_ac_frac`, `phi_ac`")
    if "phi_ac_frac" in obj:
        frac = _number(obj, "phi_ac_frac", path, lo=0.0, hi=1.0, lo_open=True)
        phi_ac = frac * PHI_MAX
    else:
        phi_ac = _number(obj, "phi_ac", path, lo=0.0, hi=PHI_MAX, lo_open=True)
    try:
        return FluxDrive(
            _number(obj, "phi_dc", path, default=0.0),
            phi_ac,
            TWO_PI * _number(obj, "f_m_hz", path, lo=0.0, lo_open=True),
            _number(obj, "duration_s", path, lo=0.0, lo_open=True),
        )
    except ValueError as exc:
        raise ConfigError(f"`{path}`: {exc}") from exc


def parse_frequencies(obj, path: str) -> np.ndarray:
    if isinstance(obj, list):
        if not obj:
            raise ConfigError(f"`{path}` must not be empty")
        freqs = []
        for i, v in enumerate(obj):
            if not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError(f"`{path}[{i}]` must be a positive frequency in Hz")
            freqs.append(float(v))
        arr = TWO_PI * np.asarray(freqs)
        if np.any(np.diff(arr) <= 0):
            raise ConfigError(f"`{path}` must be strictly increasing")
        return arr
    if isinstance(obj, dict):
        _reject_unknown(obj, {"start_hz", "stop_hz", "n", "spacing"}, path)
        start = _number(obj, "start_hz", path, lo=0.0, lo_open=True)
        stop = _number(obj, "stop_hz", path, lo=start, lo_open=True)
        n = int(_number(obj, "n", path, lo=2))
        spacing = obj.get("spacing", "log")
        if spacing == "log":
            return TWO_PI * np.logspace(np.log10(start), np.log10(stop), n)
        if spacing == "linear":
            return TWO_PI * np.linspace(start, stop, n)
        raise ConfigError(f"`{path}.spacing` must be `log` or `linear`")
    raise ConfigError(f"`{path}` must be a list of Hz values or a grid object")


def parse_amplitude_fractions(obj, path: str) -> List[float]:
    if not isinstance(obj, list) or not obj:
        raise ConfigError(f"`{path}` must be a nonempty list")
    out = []
    for i, v in enumerate(obj):
        if not isinstance(v, (int, float)) or not 0 < v <= 1:
            raise ConfigError(f"`{path}[{i}]` must be an amplitude fraction in (0, 1]")
        out.append(float(v))
    return out


TOP_LEVEL_KEYS = {
    "_meta",
    "seed",
    "device",
    "noise",
    "drive",
    "dd",
    "dephase",
    "scan",
    "resolve",
    "budget",
    "peak_model",
    "fisher",
    "leakage",
    "relax",
}


@dataclass
class RunConfig:
    """Fully resolved configuration with defaults applied."""

    seed: int = 0
    device: Optional[TransmonParams] = None
    noise_dc: Optional[NoiseSpec] = None
    noise_ac: Optional[object] = None  # NoiseSpec or RelativeAC
    drive: Optional[FluxDrive] = None
    dd: DDSequence = field(default_factory=DDSequence.none)
    dephase: Dict[str, Any] = field(default_factory=dict)
    scan: Dict[str, Any] = field(default_factory=dict)
    resolve: Dict[str, Any] = field(default_factory=dict)
    budget: Dict[str, Any] = field(default_factory=dict)
    peak_model: Dict[str, Any] = field(default_factory=dict)
    fisher: Dict[str, Any] = field(default_factory=dict)
    leakage: Dict[str, Any] = field(default_factory=dict)
    relax: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)


def parse_config(path: str) -> RunConfig:
    """Load, validate, and resolve a config (or run-manifest) file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "config" in data and "command" in data:
        # re-running a manifest reproduces the original run
        inner = data["config"]
        if "seed" in data and "seed" not in inner:
            inner["seed"] = data["seed"]
        data = inner
    return parse_config_dict(data)


def parse_config_dict(data: Dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be an object")
    _reject_unknown(data, TOP_LEVEL_KEYS, "")
    cfg = RunConfig(raw=data)
    if "seed" in data:
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int):
            raise ConfigError("`seed` must be an integer")
        cfg.seed = data["seed"]
    if "device" in data:
        cfg.device = parse_device(data["device"])
    if "noise" in data:
        sec = data["noise"]
        if not isinstance(sec, dict):
            raise ConfigError("`noise` must be an object")
        _reject_unknown(sec, {"dc", "ac"}, "noise")
        cfg.noise_dc = parse_noise_spec(sec.get("dc"), "noise.dc")
        cfg.noise_ac = parse_noise_spec(sec.get("ac"), "noise.ac")
    if "drive" in data:
        cfg.drive = parse_drive(data["drive"])
    if "dd" in data:
        cfg.dd = parse_dd(data["dd"])

    if "dephase" in data:
        sec = data["dephase"]
        _reject_unknown(sec, {"n_trials", "steps_per_period", "n_out"}, "dephase")
        cfg.dephase = {
            "n_trials": int(_number(sec, "n_trials", "dephase", lo=1, default=2**11)),
            "steps_per_period": int(_number(sec, "steps_per_period", "dephase", lo=20, default=64)),
            "n_out": int(_number(sec, "n_out", "dephase", lo=8, default=200)),
        }
    if "scan" in data:
        sec = data["scan"]
        _reject_unknown(
            sec,
            {
                "frequencies_hz",
                "amplitudes",
                "n_trials",
                "max_duration_s",
                "target_decay",
                "min_periods",
                "steps_per_period",
                "n_out",
            },
            "scan",
        )
        cfg.scan = {
            "frequencies": parse_frequencies(_require(sec, "frequencies_hz", "scan"), "scan.frequencies_hz"),
            "amplitudes": parse_amplitude_fractions(
                sec.get("amplitudes", [0.2, 0.4, 0.6]), "scan.amplitudes"
            ),
            "n_trials": int(_number(sec, "n_trials", "scan", lo=1, default=2**11)),
            "max_duration": _number(sec, "max_duration_s", "scan", lo=0, lo_open=True, default=2e-5),
            "target_decay": _number(sec, "target_decay", "scan", lo=0.5, default=3.0),
            "min_periods": int(_number(sec, "min_periods", "scan", lo=1, default=20)),
            "steps_per_period": int(_number(sec, "steps_per_period", "scan", lo=20, default=64)),
            "n_out": int(_number(sec, "n_out", "scan", lo=8, default=200)),
        }
    if "resolve" in data:
        sec = data["resolve"]
        _reject_unknown(sec, {"window_hz", "n_fits", "r2_min", "t_corr_guess_s"}, "resolve")
        cfg.resolve = {
            "window": TWO_PI * _number(sec, "window_hz", "resolve", lo=0, lo_open=True, default=2e8),
            "n_fits": int(_number(sec, "n_fits", "resolve", lo=1, default=100)),
            "r2_min": _number(sec, "r2_min", "resolve", lo=0.0, hi=1.0, default=0.8),
            "t_corr_guess": _number(sec, "t_corr_guess_s", "resolve", lo=0, lo_open=True, default=25e-9),
        }
    if "budget" in data:
        sec = data["budget"]
        _reject_unknown(sec, {"t_meas_s", "t_m_s", "c_readout", "n_omega"}, "budget")
        cfg.budget = {
            "t_meas": _number(sec, "t_meas_s", "budget", lo=0, lo_open=True, default=1e-3),
            "t_m": _number(sec, "t_m_s", "budget", lo=0, lo_open=True, default=1e-6),
            "c_readout": _number(sec, "c_readout", "budget", lo=0, hi=1.0, lo_open=True, default=1.0),
            "n_omega": int(_number(sec, "n_omega", "budget", lo=1, default=1)),
        }
    if "peak_model" in data:
        sec = data["peak_model"]
        _reject_unknown(
            sec, {"a_omega", "t_phi_s", "sigma_omega_factor", "f_c_hz", "epsilon_hz"}, "peak_model"
        )
        t_phi = _number(sec, "t_phi_s", "peak_model", lo=0, lo_open=True)
        factor = _number(sec, "sigma_omega_factor", "peak_model", lo=0, lo_open=True, default=1.0)
        cfg.peak_model = {
            "a_omega": _number(sec, "a_omega", "peak_model", lo=0, lo_open=True),
            "sigma_omega": factor / t_phi,
            "t_phi": t_phi,
            "omega_c": TWO_PI * _number(sec, "f_c_hz", "peak_model", lo=0.0, default=0.0),
            "epsilon": TWO_PI * _number(sec, "epsilon_hz", "peak_model", lo=0.0, default=0.0),
        }
    if "fisher" in data:
        sec = data["fisher"]
        _reject_unknown(sec, {"gamma", "alpha", "t_start_s", "t_stop_s", "n_t"}, "fisher")
        gamma = _number(sec, "gamma", "fisher", lo=0.0)
        alpha = _number(sec, "alpha", "fisher", lo=0.0, default=0.0)
        if gamma == 0 and alpha == 0:
            raise ConfigError("`fisher`: gamma and alpha cannot both be zero")
        scale = 1.0 / max(gamma, alpha)
        cfg.fisher = {
            "gamma": gamma,
            "alpha": alpha,
            "t_start": _number(sec, "t_start_s", "fisher", lo=0, lo_open=True, default=scale / 50),
            "t_stop": _number(sec, "t_stop_s", "fisher", lo=0, lo_open=True, default=8 * scale),
            "n_t": int(_number(sec, "n_t", "fisher", lo=2, default=200)),
        }
    if "leakage" in data:
        sec = data["leakage"]
        _reject_unknown(
            sec,
            {
                "frequencies_hz",
                "amplitudes",
                "duration_s",
                "n_charge",
                "n_levels",
                "n_pulses",
                "pulse",
                "baseline",
            },
            "leakage",
        )
        pulse = sec.get("pulse", {})
        _reject_unknown(pulse, {"sigma_s", "cutoff_sigmas", "drag_factor"}, "leakage.pulse")
        baseline = sec.get("baseline")
        if baseline not in (None, "spinlock"):
            raise ConfigError("`leakage.baseline` must be null or `spinlock`")
        cfg.leakage = {
            "frequencies": parse_frequencies(
                _require(sec, "frequencies_hz", "leakage"), "leakage.frequencies_hz"
            ),
            "amplitudes": parse_amplitude_fractions(
                sec.get("amplitudes", [0.3, 0.6]), "leakage.amplitudes"
            ),
            "duration": _number(sec, "duration_s", "leakage", lo=0, lo_open=True, default=1e-5),
            "n_charge": int(_number(sec, "n_charge", "leakage", lo=3, default=401)),
            "n_levels": int(_number(sec, "n_levels", "leakage", lo=3, default=10)),
            "n_pulses": int(_number(sec, "n_pulses", "leakage", lo=0, default=8)),
            "sigma_p": _number(pulse, "sigma_s", "leakage.pulse", lo=0, lo_open=True, default=5e-9),
            "cutoff_sigmas": _number(pulse, "cutoff_sigmas", "leakage.pulse", lo=1, default=4.0),
            "drag_factor": _number(pulse, "drag_factor", "leakage.pulse", lo=0.0, default=0.3),
            "baseline": baseline,
        }
    if "relax" in data:
        sec = data["relax"]
        _reject_unknown(
            sec,
            {"frequencies_hz", "phi_ac_frac", "t1_s", "n_traces", "horizon_s", "n_out", "post_select"},
            "relax",
        )
        t1 = sec.get("t1_s", "inf")
        if t1 == "inf":
            t1 = np.inf
        elif isinstance(t1, (int, float)) and not isinstance(t1, bool) and t1 > 0:
            t1 = float(t1)
        else:
            raise ConfigError("`relax.t1_s` must be a positive number or `inf`")
        cfg.relax = {
            "frequencies": parse_frequencies(
                _require(sec, "frequencies_hz", "relax"), "relax.frequencies_hz"
            ),
            "phi_ac": parse_amplitude_fractions([sec.get("phi_ac_frac", 0.6)], "relax.phi_ac_frac")[0]
            * PHI_MAX,
            "t1": t1,
            "n_traces": int(_number(sec, "n_traces", "relax", lo=1, default=2**8)),
            "horizon": _number(sec, "horizon_s", "relax", lo=0, lo_open=True, default=1e-8),
            "n_out": int(_number(sec, "n_out", "relax", lo=16, default=2000)),
            "post_select": bool(sec.get("post_select", False)),
        }
    return cfg
