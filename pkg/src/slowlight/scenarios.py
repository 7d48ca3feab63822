"""Experiment drivers: OD calibration, EIT/Raman comparison, sweeps, storage.

Sweeps use the frequency-domain propagator; storage runs use the
time-domain solver.  Every function is a pure function of its arguments.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from slowlight.errors import CalibrationError, Issue, ValidationError
from slowlight.maxwell_bloch import SolverGrid, store_and_retrieve
from slowlight.model import (
    TWO_PI,
    ControlProfile,
    ControlSegment,
    DriveConfig,
    MediumParams,
    Metrics,
    PulseEnvelope,
    TimeGrid,
    make_gaussian_pulse,
)
from slowlight.response import ResponseKernel, group_delay, kernel_values, response_kernel
from slowlight.spectral import fourier_frequencies, propagate_spectral, pulse_metrics

PULSE_TAU = 7.3e-6
PROBE_RABI = TWO_PI * 1.3e6
RAMAN_DETUNING = TWO_PI * 774e6

# Narrow Raman resonances ring for ~1/gamma10; the window has to outlast them.
SWEEP_SAMPLES = 2**15
SWEEP_SPAN_IN_TAU = 448

OD_BRACKET = (1.0, 1e4)
CALIBRATION_TOL = 1e-3
MAX_EVALUATIONS = 60


def sweep_pulse(tau: float = PULSE_TAU, peak: float = PROBE_RABI, n: int = SWEEP_SAMPLES,
                span_in_tau: float = SWEEP_SPAN_IN_TAU) -> PulseEnvelope:
    return make_gaussian_pulse(tau, peak, TimeGrid(n=n, span=span_in_tau * tau))


def eit_drive(drive: DriveConfig) -> DriveConfig:
    return replace(drive, delta_one_photon=0.0, delta_two_photon=0.0, control=None)


def _run(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope):
    kernel = response_kernel(medium, drive, fourier_frequencies(pulse))
    out = propagate_spectral(pulse, kernel, medium.length)
    return out, pulse_metrics(pulse, out, medium.length)


@dataclass(frozen=True)
class Calibration:
    optical_depth: float
    transmission: float
    target_transmission: float
    evaluations: int
    history: tuple


def calibrate_od(target_eit_loss: float, medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope,
                 bracket=OD_BRACKET, tol: float = CALIBRATION_TOL,
                 max_evaluations: int = MAX_EVALUATIONS) -> Calibration:
    """Optical depth at which the EIT pulse loses ``target_eit_loss`` of its energy.

    The drive is forced onto one- and two-photon resonance with static
    control.  Bisection runs on log(OD) inside ``bracket`` after a
    three-point monotonicity probe.  Raises ``CalibrationError`` (carrying
    the bracket end nearest the target) when the target is not bracketed.
    """
    if not 0.0 < target_eit_loss < 1.0:
        raise ValidationError(Issue("target_eit_loss", "must lie in the open interval (0, 1)"))
    goal = 1.0 - target_eit_loss
    eit = eit_drive(drive)
    omega = fourier_frequencies(pulse)
    unit = kernel_values(replace(medium, optical_depth=1.0), eit, omega)
    spectrum = np.fft.fft(pulse.amplitude)
    e_in = float(np.sum(pulse.intensity))
    history = []

    def transmission(od):
        if len(history) >= max_evaluations:
            raise CalibrationError(f"no convergence within {max_evaluations} evaluations", od, history[-1][1])
        out = pulse.with_amplitude(np.fft.ifft(spectrum * np.exp(-od * unit * medium.length)))
        # reuse the propagator's wrap-around guard
        propagate_spectral(out, _identity_kernel(omega), 0.0)
        tr = float(np.sum(out.intensity)) / e_in
        history.append((od, tr))
        return tr

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    t_lo, t_mid, t_hi = (transmission(math.exp(x)) for x in (lo, 0.5 * (lo + hi), hi))
    if not t_lo >= t_mid >= t_hi:
        raise CalibrationError("transmission is not monotone in OD across the bracket", math.exp(hi), t_hi)
    if t_hi > goal + tol:
        raise CalibrationError(
            f"EIT transmission {t_hi:.4g} at OD={bracket[1]:g} still above target {goal:.4g}",
            bracket[1], t_hi)
    if t_lo < goal - tol:
        raise CalibrationError(
            f"EIT transmission {t_lo:.4g} at OD={bracket[0]:g} already below target {goal:.4g}",
            bracket[0], t_lo)
    for x, tr in ((lo, t_lo), (hi, t_hi)):
        if abs(tr - goal) <= tol:
            return Calibration(math.exp(x), tr, goal, len(history), tuple(history))
    while True:
        mid = 0.5 * (lo + hi)
        tr = transmission(math.exp(mid))
        if abs(tr - goal) <= tol:
            return Calibration(math.exp(mid), tr, goal, len(history), tuple(history))
        if tr > goal:
            lo = mid
        else:
            hi = mid


def _identity_kernel(omega):
    return ResponseKernel(omega, np.zeros_like(omega, dtype=complex))


@dataclass(frozen=True)
class Fig2Report:
    eit: Metrics
    raman: Metrics
    t: np.ndarray
    input: np.ndarray
    eit_output: np.ndarray
    raman_output: np.ndarray


def fig2_comparison(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope) -> Fig2Report:
    """EIT (one-photon resonance) versus Raman (``drive``'s detuning), same pulse and OD."""
    eit_out, eit_m = _run(medium, eit_drive(drive), pulse)
    raman_out, raman_m = _run(medium, replace(drive, control=None), pulse)
    return Fig2Report(eit_m, raman_m, pulse.t, pulse.amplitude, eit_out.amplitude, raman_out.amplitude)


@dataclass(frozen=True)
class SweepRow:
    value: float
    metrics: Metrics
    slope_delay: float


def _sweep(medium, drives, pulse, workers):
    def one(d):
        _, m = _run(medium, d, pulse)
        k = response_kernel(medium, d, np.zeros(1))
        return m, group_delay(k, medium.length)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, drives))
    return [one(d) for d in drives]


@dataclass(frozen=True)
class DetuningSweep:
    rows: tuple
    crossover: Optional[float]


def detuning_sweep(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope,
                   detunings: Sequence[float], workers: Optional[int] = None,
                   rise: float = 0.1) -> DetuningSweep:
    """Metrics per one-photon detuning at fixed control.

    ``crossover`` is the smallest detuning whose group velocity exceeds the
    one at the smallest detuning by more than ``rise`` (None if none does).
    """
    if any(d <= 0 for d in detunings):
        raise ValidationError(Issue("detunings", "must all be positive"))
    dets = list(detunings)
    drives = [replace(drive, delta_one_photon=d, control=None) for d in dets]
    results = _sweep(medium, drives, pulse, workers)
    rows = tuple(SweepRow(d, m, s) for d, (m, s) in zip(dets, results))
    ordered = sorted(rows, key=lambda r: r.value)
    ref = ordered[0].metrics.group_velocity
    crossover = next((r.value for r in ordered if r.metrics.group_velocity > (1 + rise) * ref), None)
    return DetuningSweep(rows, crossover)


@dataclass(frozen=True)
class LinearFit:
    slope_origin: float
    r2_origin: float
    slope: float
    intercept: float
    r2: float


def _r2(y, fit):
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def linear_fit(x, y) -> LinearFit:
    """Least-squares lines through the origin and with a free intercept."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    s0 = float(np.dot(x, y) / np.dot(x, x))
    slope, intercept = np.polyfit(x, y, 1)
    return LinearFit(s0, _r2(y, s0 * x), float(slope), float(intercept), _r2(y, slope * x + intercept))


@dataclass(frozen=True)
class PowerSweep:
    rows: tuple
    fit: LinearFit


def power_sweep(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope,
                multipliers: Sequence[float], workers: Optional[int] = None) -> PowerSweep:
    """Metrics versus control power ``multiplier * |omega_c|**2`` at the drive's detuning.

    The fit is of group velocity against control power.
    """
    if any(m <= 0 for m in multipliers):
        raise ValidationError(Issue("multipliers", "must all be positive"))
    mults = list(multipliers)
    drives = [replace(drive, omega_c=drive.omega_c * math.sqrt(m), control=None) for m in mults]
    results = _sweep(medium, drives, pulse, workers)
    rows = tuple(SweepRow(m, r, s) for m, (r, s) in zip(mults, results))
    power = np.array([d.omega_c**2 for d in drives])
    fit = linear_fit(power, [r.metrics.group_velocity for r in rows])
    return PowerSweep(rows, fit)


@dataclass(frozen=True)
class StoragePlan:
    """Timing of a write pulse followed by retrieval windows.

    ``t_off`` ends the write segment; each window is ``(t_on, t_off)``.
    """

    t_off: float
    windows: tuple
    ramp_time: float = 0.2e-6
    t_start: float = 0.0

    def schedule(self) -> ControlProfile:
        segs = [ControlSegment(self.t_start, self.t_off, 1.0, self.ramp_time)]
        segs += [ControlSegment(a, b, 1.0, self.ramp_time) for a, b in self.windows]
        return ControlProfile(tuple(segs))


def storage_grid(tau: float, t_end: float, dt: float = 25e-9, lead_in_tau: float = 4.0):
    """Time grid and pulse launch time for a storage run ending at ``t_end``."""
    t0 = lead_in_tau * tau
    n = int(math.ceil(t_end / dt))
    return TimeGrid(n=n, span=n * dt), t0


def default_storage_plan(medium: MediumParams, drive: DriveConfig, tau: float, t0: float,
                         store_time: float = 10e-6, n_windows: int = 1,
                         window_length: Optional[float] = None, gap: float = 5e-6,
                         ramp_time: float = 0.2e-6) -> StoragePlan:
    """Control off when the pulse peak reaches mid-cell, then ``n_windows`` readouts.

    The mid-cell arrival time uses the dispersion-slope delay of the static
    drive.  Windows default to the full delay plus two pulse widths.
    """
    delay = group_delay(response_kernel(medium, replace(drive, control=None), np.zeros(1)), medium.length)
    t_off = t0 + 0.5 * delay
    if window_length is None:
        window_length = delay + 2 * tau
    windows = []
    start = t_off + store_time
    for _ in range(n_windows):
        windows.append((start, start + window_length))
        start += window_length + gap
    return StoragePlan(t_off, tuple(windows), ramp_time)


@dataclass(frozen=True)
class StorageRun:
    label: str
    report: object
    output: np.ndarray
    control: np.ndarray


@dataclass(frozen=True)
class StorageComparison:
    t: np.ndarray
    input: np.ndarray
    raman: StorageRun
    eit: StorageRun


def storage_sequence(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope, plan: StoragePlan,
                     grid: SolverGrid = SolverGrid()) -> StorageComparison:
    """Raman (``drive``'s detuning) and EIT storage on one schedule."""
    schedule = plan.schedule()
    runs = []
    for label, d in (("raman", drive), ("eit", eit_drive(drive))):
        history, report = store_and_retrieve(medium, d, pulse, schedule, replace(grid, check_window=False))
        runs.append(StorageRun(label, report, history.probe[-1].copy(), history.control_trace))
    return StorageComparison(pulse.t, pulse.amplitude, runs[0], runs[1])
