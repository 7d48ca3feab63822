"""Command-line entry point: ``slowlight <command> [--preset P] [--config F] --out DIR``.

Each run writes unit-annotated CSV tables and a ``manifest.json`` holding the
resolved configuration (also as INI text, so the manifest alone reproduces
the run), grid sizes, quadrature orders and metrics.  Failures exit nonzero
and print a JSON error object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

import slowlight
from slowlight.config import (
    ConfigError,
    ScenarioConfig,
    config_dict,
    emit_config,
    load_preset,
    parse_config,
    parse_config_text,
)
from slowlight.errors import CalibrationError, Issue, SlowlightError, ValidationError
from slowlight.maxwell_bloch import SolverGrid, evolve, spinwave_snapshot
from slowlight.model import TimeGrid, make_gaussian_pulse, validate
from slowlight.response import group_delay, group_velocity, response_kernel, transmission_spectrum
from slowlight.scenarios import (
    calibrate_od,
    default_storage_plan,
    detuning_sweep,
    fig2_comparison,
    power_sweep,
    storage_grid,
    storage_sequence,
)
from slowlight.spectral import propagate, pulse_metrics

COMMANDS = ("response", "propagate", "evolve", "calibrate", "fig2", "sweep-detuning", "sweep-power", "storage")
EXIT_IO = 6


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, columns: dict) -> None:
    """Write equal-length columns; keys are ``name[unit]`` headers."""
    names = list(columns)
    data = [np.asarray(columns[n]) if not isinstance(columns[n], list) else columns[n] for n in names]
    rows = len(data[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(rows):
            w.writerow([_num(col[i]) for col in data])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_config(preset=None, config=None) -> ScenarioConfig:
    cfg = load_preset(preset) if preset else ScenarioConfig()
    if config:
        path = Path(config)
        if path.suffix == ".json":
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
                return parse_config_text(manifest["config_ini"], source=str(path))
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"cannot read manifest {path}: {exc}") from None
        cfg = parse_config(path, base=cfg)
    return cfg


def _spectral_pulse(cfg: ScenarioConfig):
    tau = cfg.pulse.tau
    grid = TimeGrid(n=cfg.grid.n_t, span=cfg.grid.spectral_span(tau))
    return make_gaussian_pulse(tau, cfg.drive.omega_p_peak, grid)


def _solver_grid(cfg: ScenarioConfig) -> SolverGrid:
    return SolverGrid(n_z=cfg.grid.n_z, doppler_nodes=cfg.grid.td_doppler_nodes)


def resolve_od(cfg: ScenarioConfig, pulse):
    """Medium with the optical depth chosen by ``cfg.calibration.mode``."""
    mode = cfg.calibration.mode
    if mode == "fixed":
        return cfg.medium, {"mode": mode, "optical_depth": cfg.medium.optical_depth}
    try:
        cal = calibrate_od(cfg.calibration.target_eit_loss, cfg.medium, cfg.drive, pulse)
    except CalibrationError as exc:
        if mode != "best-effort":
            raise
        info = {"mode": mode, "calibrated": False, "optical_depth": exc.best_od,
                "eit_transmission": exc.best_transmission, "message": str(exc)}
        return replace(cfg.medium, optical_depth=exc.best_od), info
    info = {"mode": mode, "calibrated": True, "optical_depth": cal.optical_depth,
            "eit_transmission": cal.transmission, "evaluations": cal.evaluations}
    return replace(cfg.medium, optical_depth=cal.optical_depth), info


def _metric_columns(rows, first_name, first_values):
    return {
        first_name: first_values,
        "energy_transmission[1]": [r.metrics.energy_transmission for r in rows],
        "peak_delay[s]": [r.metrics.peak_delay for r in rows],
        "fwhm_ratio[1]": [r.metrics.fwhm_ratio for r in rows],
        "group_velocity[m/s]": [r.metrics.group_velocity for r in rows],
        "slope_delay[s]": [r.slope_delay for r in rows],
        "reliable[1]": [r.metrics.reliable for r in rows],
    }


def cmd_response(cfg, out):
    r = cfg.response
    omega = np.linspace(-r.omega_span / 2, r.omega_span / 2, r.n_omega)
    kernel = response_kernel(cfg.medium, cfg.drive, omega)
    write_csv(out / "response.csv", {
        "omega[rad/s]": omega,
        "re_K[1/m]": kernel.values.real,
        "im_K[1/m]": kernel.values.imag,
        "transmission[1]": transmission_spectrum(kernel, cfg.medium.length),
    })
    L = cfg.medium.length
    return {"group_delay": group_delay(kernel, L), "group_velocity": group_velocity(kernel, L)}, ["response.csv"]


def cmd_propagate(cfg, out):
    pulse = _spectral_pulse(cfg)
    bundle = validate(cfg.medium, cfg.drive, pulse)
    output, _ = propagate(cfg.medium, cfg.drive, pulse)
    write_csv(out / "propagate.csv", {
        "t[s]": pulse.t,
        "input_re[rad/s]": pulse.amplitude.real,
        "input_im[rad/s]": pulse.amplitude.imag,
        "output_re[rad/s]": output.amplitude.real,
        "output_im[rad/s]": output.amplitude.imag,
    })
    metrics = pulse_metrics(pulse, output, cfg.medium.length).as_dict()
    metrics["regime"] = bundle.flags.__dict__
    return metrics, ["propagate.csv"]


def cmd_evolve(cfg, out):
    tau = cfg.pulse.tau
    static = replace(cfg.drive, control=None)
    delay = max(group_delay(response_kernel(cfg.medium, static, np.zeros(1)), cfg.medium.length), 0.0)
    t0 = 4 * tau
    t_end = t0 + 2 * delay + 8 * tau
    if cfg.drive.control is not None and cfg.drive.control.segments:
        t_end = max(t_end, cfg.drive.control.segments[-1].t_end + delay + 4 * tau)
    if cfg.grid.span is not None:
        t_end = cfg.grid.span
    grid, t0 = storage_grid(tau, t_end, dt=cfg.grid.td_dt)
    pulse = make_gaussian_pulse(tau, cfg.drive.omega_p_peak, grid, t0=t0)
    validate(cfg.medium, cfg.drive, pulse)
    history = evolve(cfg.medium, cfg.drive, pulse, _solver_grid(cfg))
    write_csv(out / "evolve.csv", {
        "t[s]": history.t,
        "control[rad/s]": history.control_trace,
        "input_re[rad/s]": history.probe[0].real,
        "input_im[rad/s]": history.probe[0].imag,
        "output_re[rad/s]": history.probe[-1].real,
        "output_im[rad/s]": history.probe[-1].imag,
    })
    norms = np.sqrt(trapezoid(np.abs(history.sigma10) ** 2, history.z, axis=0))
    t_max = float(history.t[int(np.argmax(norms))])
    snap = spinwave_snapshot(history, t_max)
    write_csv(out / "spinwave.csv", {
        "z[m]": snap.z, "sigma10_re[1]": snap.profile.real, "sigma10_im[1]": snap.profile.imag,
    })
    metrics = pulse_metrics(pulse, history.output(), cfg.medium.length).as_dict()
    metrics.update(spinwave_peak_time=t_max, spinwave_peak_norm=snap.norm)
    return metrics, ["evolve.csv", "spinwave.csv"]


def cmd_calibrate(cfg, out):
    pulse = _spectral_pulse(cfg)
    cal = calibrate_od(cfg.calibration.target_eit_loss, cfg.medium, cfg.drive, pulse)
    write_csv(out / "calibration.csv", {
        "evaluation[1]": list(range(1, len(cal.history) + 1)),
        "optical_depth[1]": [h[0] for h in cal.history],
        "eit_transmission[1]": [h[1] for h in cal.history],
    })
    return {"optical_depth": cal.optical_depth, "eit_transmission": cal.transmission,
            "evaluations": cal.evaluations}, ["calibration.csv"]


def cmd_fig2(cfg, out):
    if cfg.drive.delta_one_photon == 0:
        raise ValidationError(Issue("drive.delta_one_photon", "fig2 needs a nonzero Raman detuning"))
    pulse = _spectral_pulse(cfg)
    validate(cfg.medium, cfg.drive, pulse)
    medium, cal = resolve_od(cfg, pulse)
    rep = fig2_comparison(medium, cfg.drive, pulse)
    files = []
    for name, trace in (("fig2_eit.csv", rep.eit_output), ("fig2_raman.csv", rep.raman_output)):
        write_csv(out / name, {
            "t[s]": rep.t,
            "input_intensity[rad^2/s^2]": np.abs(rep.input) ** 2,
            "output_re[rad/s]": trace.real,
            "output_im[rad/s]": trace.imag,
            "output_intensity[rad^2/s^2]": np.abs(trace) ** 2,
        })
        files.append(name)
    return {"calibration": cal, "eit": rep.eit.as_dict(), "raman": rep.raman.as_dict()}, files


def cmd_sweep_detuning(cfg, out):
    pulse = _spectral_pulse(cfg)
    medium, cal = resolve_od(cfg, pulse)
    sweep = detuning_sweep(medium, cfg.drive, pulse, cfg.sweep.detunings, workers=cfg.sweep.workers)
    write_csv(out / "sweep_detuning.csv",
              _metric_columns(sweep.rows, "delta_one_photon[rad/s]", [r.value for r in sweep.rows]))
    return {"calibration": cal, "crossover_detuning": sweep.crossover,
            "rows": [dict(r.metrics.as_dict(), delta_one_photon=r.value) for r in sweep.rows]}, ["sweep_detuning.csv"]


def cmd_sweep_power(cfg, out):
    pulse = _spectral_pulse(cfg)
    medium, cal = resolve_od(cfg, pulse)
    sweep = power_sweep(medium, cfg.drive, pulse, cfg.sweep.power_multipliers, workers=cfg.sweep.workers)
    cols = _metric_columns(sweep.rows, "multiplier[1]", [r.value for r in sweep.rows])
    cols["control_power[rad^2/s^2]"] = [r.value * cfg.drive.omega_c**2 for r in sweep.rows]
    write_csv(out / "sweep_power.csv", cols)
    return {"calibration": cal, "fit": sweep.fit.__dict__,
            "rows": [dict(r.metrics.as_dict(), multiplier=r.value) for r in sweep.rows]}, ["sweep_power.csv"]


def cmd_storage(cfg, out):
    tau = cfg.pulse.tau
    medium, cal = resolve_od(cfg, _spectral_pulse(cfg))
    st = cfg.storage
    t0 = 4 * tau
    plan = default_storage_plan(medium, cfg.drive, tau, t0, store_time=st.store_time, n_windows=st.windows,
                                window_length=st.window_length, gap=st.gap, ramp_time=st.ramp_time)
    last = plan.windows[-1][1] if plan.windows else plan.t_off + 4 * tau
    grid, t0 = storage_grid(tau, last + 2 * tau, dt=cfg.grid.td_dt)
    pulse = make_gaussian_pulse(tau, cfg.drive.omega_p_peak, grid, t0=t0)
    comp = storage_sequence(medium, cfg.drive, pulse, plan, _solver_grid(cfg))
    write_csv(out / "storage_traces.csv", {
        "t[s]": comp.t,
        "control[rad/s]": comp.raman.control,
        "input_intensity[rad^2/s^2]": np.abs(comp.input) ** 2,
        "raman_output_intensity[rad^2/s^2]": np.abs(comp.raman.output) ** 2,
        "eit_output_intensity[rad^2/s^2]": np.abs(comp.eit.output) ** 2,
    })
    scheme, idx, cols = [], [], {k: [] for k in ("t_start", "t_end", "energy_fraction", "peak_time", "fwhm")}
    for run in (comp.raman, comp.eit):
        for k, w in enumerate(run.report.windows, start=1):
            scheme.append(run.label)
            idx.append(k)
            for key in cols:
                cols[key].append(getattr(w, key))
    write_csv(out / "storage_windows.csv", {
        "scheme[-]": scheme, "window[1]": idx,
        "t_start[s]": cols["t_start"], "t_end[s]": cols["t_end"],
        "energy_fraction[1]": cols["energy_fraction"], "peak_time[s]": cols["peak_time"], "fwhm[s]": cols["fwhm"],
    })

    def summary(run):
        r = run.report
        return {"transmitted": r.transmitted, "retrieved": r.retrieved(), "total_output": r.total_output,
                "switch_norms": [list(x) for x in r.switch_norms], "no_storage": r.no_storage,
                "messages": list(r.messages)}

    schedule = [[s.t_start, s.t_end, s.level, s.ramp_time] for s in plan.schedule().segments]
    return {"calibration": cal, "schedule": schedule, "raman": summary(comp.raman), "eit": summary(comp.eit)}, \
        ["storage_traces.csv", "storage_windows.csv"]


HANDLERS = {
    "response": cmd_response,
    "propagate": cmd_propagate,
    "evolve": cmd_evolve,
    "calibrate": cmd_calibrate,
    "fig2": cmd_fig2,
    "sweep-detuning": cmd_sweep_detuning,
    "sweep-power": cmd_sweep_power,
    "storage": cmd_storage,
}


def run(command: str, cfg: ScenarioConfig, output_dir) -> int:
    """Execute ``command`` and write its artifacts; returns the exit status."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        _report_error(None, "OutputError", f"output directory not writable: {exc}", EXIT_IO)
        return EXIT_IO
    try:
        metrics, files = HANDLERS[command](cfg, out)
    except SlowlightError as exc:
        extra = {}
        if isinstance(exc, ValidationError):
            extra["issues"] = [{"field": i.field, "message": i.message} for i in exc.issues]
        if isinstance(exc, CalibrationError):
            extra.update(best_od=exc.best_od, best_transmission=exc.best_transmission)
        _report_error(out, type(exc).__name__, str(exc), exc.code, extra)
        return exc.code
    medium = cfg.medium
    manifest = {
        "command": command,
        "tool": "slowlight",
        "version": slowlight.__version__,
        "config": config_dict(cfg),
        "config_ini": emit_config(cfg),
        "grid": {"n_t": cfg.grid.n_t, "span": cfg.grid.spectral_span(cfg.pulse.tau), "n_z": cfg.grid.n_z,
                 "td_dt": cfg.grid.td_dt},
        "quadrature": {"doppler_nodes": medium.doppler_nodes,
                       "td_doppler_nodes": cfg.grid.td_doppler_nodes if medium.doppler_nodes else 0},
        "metrics": metrics,
        "outputs": files,
    }
    write_json(out / "manifest.json", manifest)
    return 0


def _report_error(out, kind, message, code, extra=None):
    payload = {"error": kind, "message": message, "exit_code": code}
    payload.update(extra or {})
    text = json.dumps(_jsonable(payload), sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slowlight", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="INI config file, or a manifest.json from an earlier run")
    ap.add_argument("--preset", help="bundled preset name, applied before --config")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--doppler-nodes", type=int, help="velocity classes for both solvers (0 disables Doppler)")
    ap.add_argument("--grid-t", type=int, help="time samples of the spectral grid")
    ap.add_argument("--grid-z", type=int, help="z points of the time-domain solver")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.preset, args.config)
        if args.doppler_nodes is not None:
            n = args.doppler_nodes
            medium = replace(cfg.medium, doppler_nodes=n)
            grid = replace(cfg.grid, td_doppler_nodes=n) if n > 0 else cfg.grid
            cfg = replace(cfg, medium=medium, grid=grid)
        if args.grid_t is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, n_t=args.grid_t))
        if args.grid_z is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, n_z=args.grid_z))
    except SlowlightError as exc:
        extra = {}
        if isinstance(exc, ValidationError):
            extra["issues"] = [{"field": i.field, "message": i.message} for i in exc.issues]
        out = Path(args.out)
        _report_error(out if out.is_dir() else None, type(exc).__name__, str(exc), exc.code, extra)
        return exc.code
    return run(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
