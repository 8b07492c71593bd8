"""Command-line front end.

Subcommands: noise, dephase, scan, resolve, fisher, bounds, leakage, relax.
Every run writes a manifest (resolved config + seed + version) alongside its
outputs; re-running a manifest reproduces the outputs byte-identically.
Progress goes to standard error; data only to standard output or files.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 resolution/calibration failure.  PARAMSPEC_SEED overrides the config
seed; an explicit --seed flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import RelativeAC, RunConfig, parse_config, parse_noise_spec, resolve_ac
from .dephasing import analytic_decoherence, fit_decay, simulate_coherence
from .device import PHI_MAX, FluxDrive
from .errors import (
    CalibrationError,
    ConfigError,
    FitDegenerateError,
    InsufficientDataError,
    IntegratorError,
    QuadratureError,
    ResolutionFailureError,
)
from .estimation import (
    MeasurementBudget,
    SpectralPeakModel,
    center_uncertainty,
    fisher_center,
    fisher_gamma,
    optimal_time,
    resolution_bound,
    sigma_gamma,
)
from .multilevel import (
    ChargeBasisModel,
    DragPulse,
    KerrModel,
    analytic_leak_amplitude,
    calibrate_pulse,
    evolve_sequence,
    leakage_metric,
    make_xy8_pulses,
    spinlock_leakage,
)
from .noisegen import analytic_psd, sample_trace
from .relaxation import LindbladRun, evolve_master, extract_envelope_rate
from .spectroscopy import ScanPlan, ScanResult, ScanRow, resolve_peaks, run_scan

TWO_PI = 2.0 * np.pi


def fmt(x) -> str:
    """Stable 9-significant-digit float formatting for CSV/JSON emission."""
    if isinstance(x, str):
        return x
    if x is None:
        return "nan"
    xf = float(x)
    if np.isnan(xf):
        return "nan"
    if np.isinf(xf):
        return "inf" if xf > 0 else "-inf"
    return f"{xf:.9g}"


def emit_csv(path: str, header, rows):
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write output {path}: {exc}") from exc


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if np.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def emit_json(path: str, payload: dict):
    payload = {"schema": f"paramspec-{__version__}", **_round_floats(payload)}
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write output {path}: {exc}") from exc


def write_manifest(out_path: str, command: str, cfg_raw: dict, seed: int):
    manifest = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": cfg_raw,
    }
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(_round_floats(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def progress(msg: str):
    print(msg, file=sys.stderr)


def effective_seed(args, cfg_seed: int) -> int:
    env = os.environ.get("PARAMSPEC_SEED")
    if getattr(args, "seed", None) is not None:
        return args.seed
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"PARAMSPEC_SEED must be an integer, got {env!r}") from exc
    return cfg_seed


def _need(cfg: RunConfig, attr, what: str):
    val = getattr(cfg, attr)
    if val is None or (isinstance(val, dict) and not val):
        raise ConfigError(f"this command needs a `{what}` section in the config")
    return val


# ---------------------------------------------------------------- noise ----

def cmd_noise(args) -> int:
    with open(args.spec) as fh:
        try:
            spec_obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.spec}: invalid JSON: {exc}") from exc
    spec = parse_noise_spec(spec_obj, "spec")
    if isinstance(spec, RelativeAC):
        raise ConfigError("relative_ac specs need a drive amplitude; resolve to pink first")
    if spec is None:
        raise ConfigError("noise spec is null")
    seed = args.seed if args.seed is not None else int(os.environ.get("PARAMSPEC_SEED", "0"))
    if args.mode == "sample":
        trace = sample_trace(spec, args.dt, args.n, seed)
        t = np.arange(args.n) * args.dt
        emit_csv(args.out, ["t", "value"], zip(t, trace.samples))
    else:
        f = np.logspace(np.log10(args.f_min), np.log10(args.f_max), args.n)
        psd = analytic_psd(spec, TWO_PI * f)
        emit_csv(args.out, ["omega_hz", "psd"], zip(f, psd))
    write_manifest(args.out, f"noise {args.mode}", spec_obj, seed)
    return 0


# -------------------------------------------------------------- dephase ----

def cmd_dephase(args) -> int:
    cfg = parse_config(args.config)
    seed = effective_seed(args, cfg.seed)
    device = _need(cfg, "device", "device")
    drive = _need(cfg, "drive", "drive")
    opts = cfg.dephase or {"n_trials": 2**11, "steps_per_period": 64, "n_out": 200}
    s_ac = resolve_ac(cfg.noise_ac, drive.phi_ac)
    progress(f"dephase: {opts['n_trials']} trials over {drive.duration:g} s")
    times, w_mc = simulate_coherence(
        device,
        drive,
        cfg.dd,
        cfg.noise_dc,
        s_ac,
        opts["n_trials"],
        dt=drive.period / opts["steps_per_period"],
        seed=seed,
        n_out=opts["n_out"],
    )
    w_an = np.array(
        [np.exp(-analytic_decoherence(device, drive, cfg.dd, cfg.noise_dc, s_ac, t)) for t in times]
    )
    emit_csv(args.out, ["t", "w_mc", "w_analytic"], zip(times, w_mc, w_an))
    est = fit_decay(times, w_mc)
    emit_json(
        args.out + ".fit.json",
        {
            "gamma": est.gamma,
            "alpha": est.alpha,
            "gamma_err": est.gamma_err,
            "alpha_err": est.alpha_err,
            "r2": est.r2,
            "t_phi": est.t_phi,
        },
    )
    write_manifest(args.out, "dephase", cfg.raw, seed)
    return 0


# ----------------------------------------------------------------- scan ----

def cmd_scan(args) -> int:
    cfg = parse_config(args.config)
    seed = effective_seed(args, cfg.seed)
    device = _need(cfg, "device", "device")
    sec = _need(cfg, "scan", "scan")
    if cfg.noise_dc is None:
        raise ConfigError("scan needs `noise.dc`")
    plan = ScanPlan(
        frequencies=sec["frequencies"],
        amplitudes=tuple(sec["amplitudes"]),
        n_trials=sec["n_trials"],
        dd=cfg.dd,
        noise_dc=cfg.noise_dc,
        noise_ac=cfg.noise_ac,
        seed=seed,
        steps_per_period=sec["steps_per_period"],
        n_out=sec["n_out"],
        target_decay=sec["target_decay"],
        min_periods=sec["min_periods"],
        max_duration=sec["max_duration"],
    )
    progress(
        f"scan: {len(sec['frequencies'])} frequencies x {len(sec['amplitudes'])} amplitudes, "
        f"{sec['n_trials']} trials each"
    )
    result = run_scan(plan, device, threads=args.threads)
    progress(f"scan: done, failure fraction {result.failure_fraction:.2f}")
    rows_out = [
        (r.omega_m / TWO_PI, r.phi_ac / PHI_MAX, r.gamma, r.gamma_err, r.psd, r.r2, r.flag)
        for r in result.rows
    ]
    emit_csv(
        args.out,
        ["omega_m_hz", "phi_ac_frac", "gamma", "gamma_err", "psd", "r2", "flag"],
        rows_out,
    )
    write_manifest(args.out, "scan", cfg.raw, seed)
    return 0


def read_scan_csv(path: str) -> ScanResult:
    rows = []
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            expected = ["omega_m_hz", "phi_ac_frac", "gamma", "gamma_err", "psd", "r2", "flag"]
            if header != expected:
                raise ConfigError(f"{path}: unexpected scan CSV header {header}")
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != 7:
                    continue
                rows.append(
                    ScanRow(
                        omega_m=TWO_PI * float(parts[0]),
                        phi_ac=float(parts[1]) * PHI_MAX,
                        gamma=float(parts[2]),
                        gamma_err=float(parts[3]),
                        psd=float(parts[4]),
                        r2=float(parts[5]),
                        flag=parts[6],
                    )
                )
    except FileNotFoundError as exc:
        raise ConfigError(f"scan file not found: {path}") from exc
    return ScanResult(rows=rows, b0=np.nan)


def cmd_resolve(args) -> int:
    result = read_scan_csv(args.scan)
    seed = args.seed if args.seed is not None else int(os.environ.get("PARAMSPEC_SEED", "0"))
    fit = resolve_peaks(
        result,
        window=TWO_PI * args.window_hz,
        n_fits=args.n_fits,
        r2_min=args.r2_min,
        seed=seed,
    )
    emit_json(
        args.out,
        {
            "centers_hz": [c / TWO_PI for c in fit.centers],
            "center_bounds_hz": [b / TWO_PI for b in fit.center_bounds],
            "widths_s": list(fit.widths),
            "amplitudes": list(fit.amplitudes),
            "pink_exponent": fit.pink_exponent,
            "n_successful_fits": fit.n_successful_fits,
            "resolved": fit.resolved,
        },
    )
    write_manifest(args.out, "resolve", {"scan": args.scan, "window_hz": args.window_hz}, seed)
    return 0


# --------------------------------------------------------------- fisher ----

def cmd_fisher(args) -> int:
    gamma, alpha = args.gamma, args.alpha
    budget = MeasurementBudget(t_meas=args.t_meas, t_m=args.t_m, c_readout=args.c_readout)
    if gamma == 0 and alpha == 0:
        raise ConfigError("gamma and alpha cannot both be zero")
    scale = 1.0 / max(gamma, alpha)
    t = np.linspace(scale / 50, 8 * scale, args.n_t)
    info = fisher_gamma(gamma, alpha, t)
    snr = np.array([gamma / sigma_gamma(budget, gamma, alpha, ti) for ti in t])
    emit_csv(args.out, ["t", "fisher", "snr"], zip(t, info, snr))
    opt = optimal_time(gamma, alpha)
    emit_json(
        args.out + ".summary.json",
        {
            "t_heuristic": opt.heuristic,
            "t_argmax": opt.argmax,
            "sigma_gamma_at_argmax": sigma_gamma(budget, gamma, alpha, opt.argmax),
            "snr_at_argmax": gamma / sigma_gamma(budget, gamma, alpha, opt.argmax),
        },
    )
    write_manifest(
        args.out,
        "fisher",
        {"gamma": gamma, "alpha": alpha, "t_meas_s": args.t_meas, "t_m_s": args.t_m},
        0,
    )
    return 0


def cmd_bounds(args) -> int:
    cfg = parse_config(args.peak_model)
    pm = _need(cfg, "peak_model", "peak_model")
    bud = cfg.budget or {"t_meas": 1e-3, "t_m": 1e-6, "c_readout": 1.0, "n_omega": 1}
    budget = MeasurementBudget(**bud)
    peak = SpectralPeakModel(
        a_omega=pm["a_omega"],
        sigma_omega=pm["sigma_omega"],
        omega_c=pm["omega_c"],
        epsilon=pm["epsilon"],
    )
    t_phi = pm["t_phi"]
    payload = {
        "center_uncertainty_hz": center_uncertainty(peak, budget, t_phi) / TWO_PI,
        "fisher_center_max": fisher_center(
            peak, np.sqrt(1.0 / (budget.t_meas * t_phi)), peak.sigma_omega
        ),
    }
    if peak.epsilon > 0:
        primary, sequential = resolution_bound(peak, budget, t_phi)
        payload["resolution_bound_hz"] = primary / TWO_PI
        payload["sequential_limit_hz"] = sequential / TWO_PI
    emit_json(args.out, payload)
    write_manifest(args.out, "bounds", cfg.raw, cfg.seed)
    return 0


# -------------------------------------------------------------- leakage ----

def cmd_leakage(args) -> int:
    cfg = parse_config(args.config)
    seed = effective_seed(args, cfg.seed)
    device = _need(cfg, "device", "device")
    sec = _need(cfg, "leakage", "leakage")
    model = ChargeBasisModel(device, n_charge=sec["n_charge"], n_levels=sec["n_levels"])
    base = DragPulse(
        amplitude=0.0,
        center=0.0,
        width=sec["sigma_p"],
        drive_freq=0.0,
        drag_factor=sec["drag_factor"],
        cutoff=sec["cutoff_sigmas"] * sec["sigma_p"],
    )
    progress("leakage: calibrating DRAG pulse at the sweet spot")
    cal = calibrate_pulse(model, base)
    progress(
        f"leakage: calibrated A/2pi={cal.pulse.amplitude / TWO_PI / 1e6:.2f} MHz, "
        f"lambda={cal.pulse.drag_factor:.3f}, infidelity={cal.infidelity:.2e}"
    )
    header = ["omega_m_hz", "phi_ac_frac", "leakage_sim", "leakage_analytic"]
    if sec["baseline"] == "spinlock":
        header.append("leakage_spinlock")
    rows = []
    for amp in sec["amplitudes"]:
        for wm in sec["frequencies"]:
            drive = FluxDrive(0.0, amp * PHI_MAX, wm, sec["duration"])
            pulses = make_xy8_pulses(cal.pulse, sec["duration"], sec["n_pulses"]) if sec["n_pulses"] else []
            res = evolve_sequence(model, drive, pulses)
            leak = leakage_metric(res.populations)
            kerr = KerrModel.from_device(device, drive)
            row = [wm / TWO_PI, amp, leak, analytic_leak_amplitude(kerr, drive)]
            if sec["baseline"] == "spinlock":
                row.append(spinlock_leakage(model, wm, sec["duration"]))
            rows.append(row)
            progress(f"leakage: f={wm / TWO_PI:.3g} Hz amp={amp:g} -> {leak:.3e}")
    emit_csv(args.out, header, rows)
    write_manifest(args.out, "leakage", cfg.raw, seed)
    return 0


# ---------------------------------------------------------------- relax ----

def cmd_relax(args) -> int:
    cfg = parse_config(args.config)
    seed = effective_seed(args, cfg.seed)
    device = _need(cfg, "device", "device")
    sec = _need(cfg, "relax", "relax")
    t1 = args.t1 if args.t1 is not None else sec["t1"]
    rows = []
    for wm in sec["frequencies"]:
        drive = FluxDrive(0.0, sec["phi_ac"], wm, sec["horizon"])
        run = LindbladRun(
            device=device,
            drive=drive,
            noise=cfg.noise_dc,
            t1=t1,
            n_traces=sec["n_traces"],
            horizon=sec["horizon"],
            n_out=sec["n_out"],
            post_select=sec["post_select"],
        )
        times, series = evolve_master(run, seed=seed)
        est = extract_envelope_rate(times, series)
        rows.append((wm / TWO_PI, est.rate, est.rate_err, t1))
        progress(f"relax: f={wm / TWO_PI:.3g} Hz -> rate {est.rate:.3g} /s")
    emit_csv(args.out, ["omega_m_hz", "rate", "rate_err", "t1"], rows)
    write_manifest(args.out, "relax", cfg.raw, seed)
    return 0


# ----------------------------------------------------------------- main ----

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="paramspec",
        description="parametric noise spectroscopy simulations on tunable transmons",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON config or manifest file")
        sp.add_argument("--out", required=True, help="output file path")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker-count hint")

    sp = sub.add_parser("noise", help="sample noise traces or tabulate analytic PSDs")
    sp.add_argument("mode", choices=["sample", "psd"])
    sp.add_argument("--spec", required=True, help="JSON noise spec file")
    sp.add_argument("--dt", type=float, default=1e-11)
    sp.add_argument("--n", type=int, default=65536)
    sp.add_argument("--f-min", type=float, default=1e3, dest="f_min")
    sp.add_argument("--f-max", type=float, default=1e10, dest="f_max")
    common(sp, config=False)
    sp.set_defaults(func=cmd_noise)

    sp = sub.add_parser("dephase", help="Monte Carlo + analytic decoherence at one point")
    common(sp)
    sp.set_defaults(func=cmd_dephase)

    sp = sub.add_parser("scan", help="full (omega_m, phi_ac) spectroscopy scan")
    common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("resolve", help="two-peak resolution from a scan CSV")
    sp.add_argument("--scan", required=True, help="scan CSV produced by `paramspec scan`")
    sp.add_argument("--window-hz", type=float, default=2e8, dest="window_hz")
    sp.add_argument("--n-fits", type=int, default=100, dest="n_fits")
    sp.add_argument("--r2-min", type=float, default=0.8, dest="r2_min")
    common(sp, config=False)
    sp.set_defaults(func=cmd_resolve)

    sp = sub.add_parser("fisher", help="Fisher information and SNR sweeps")
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--t-meas", type=float, default=1e-3, dest="t_meas")
    sp.add_argument("--t-m", type=float, default=1e-6, dest="t_m")
    sp.add_argument("--c-readout", type=float, default=1.0, dest="c_readout")
    sp.add_argument("--n-t", type=int, default=200, dest="n_t")
    common(sp, config=False)
    sp.set_defaults(func=cmd_fisher)

    sp = sub.add_parser("bounds", help="closed-form uncertainty bounds for a peak model")
    sp.add_argument("--peak-model", required=True, dest="peak_model")
    common(sp, config=False)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("leakage", help="multi-level leakage scan with calibrated XY8")
    common(sp)
    sp.set_defaults(func=cmd_leakage)

    sp = sub.add_parser("relax", help="finite-T1 master-equation rates")
    sp.add_argument("--t1", type=float, default=None, help="override relax.t1_s")
    common(sp)
    sp.set_defaults(func=cmd_relax)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, IntegratorError, FitDegenerateError, InsufficientDataError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ResolutionFailureError, CalibrationError) as exc:
        print(f"{exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
