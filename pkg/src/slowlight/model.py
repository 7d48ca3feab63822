"""Domain types, validation and closed-form helpers.

Units are SI throughout: rad/s for Rabi frequencies, detunings and decay
rates, seconds, meters.  A Rabi frequency ``Omega`` enters the equations of
motion as ``Omega / 2``; a detuning is positive when the laser is above the
atomic transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from slowlight.errors import Issue, ValidationError

C_LIGHT = 299_792_458.0
TWO_PI = 2.0 * math.pi

# Homogeneous optical linewidth; Doppler broadening is treated separately.
DEFAULT_GAMMA20 = TWO_PI * 3e6
# Ground-coherence lifetime set by diffusion out of the beam (~300 us).
DEFAULT_GAMMA10 = 1.0 / 300e-6
DEFAULT_DOPPLER_FWHM = TWO_PI * 560e6
DEFAULT_DOPPLER_NODES = 64

WEAK_PROBE_RATIO = 0.2
FAR_DETUNED_RATIO = 10.0
EDGE_TOLERANCE = 1e-6
MIN_SPAN_IN_TAU = 8.0


def _finite(name, value, issues):
    if not np.isfinite(value):
        issues.append(Issue(name, f"must be finite, got {value!r}"))
        return False
    return True


@dataclass(frozen=True)
class MediumParams:
    """Atomic medium: a uniform cell of length ``length``.

    ``optical_depth`` is the resonant, Doppler-free intensity attenuation
    exponent of the probe transition (``exp(-OD)`` for a two-level medium).
    ``doppler_nodes = 0`` disables Doppler averaging.
    """

    length: float = 0.1
    optical_depth: float = 1000.0
    gamma20: float = DEFAULT_GAMMA20
    gamma10: float = DEFAULT_GAMMA10
    doppler_fwhm: float = DEFAULT_DOPPLER_FWHM
    doppler_nodes: int = DEFAULT_DOPPLER_NODES

    def __post_init__(self):
        issues = []
        for name in ("length", "optical_depth", "gamma20", "gamma10", "doppler_fwhm"):
            _finite(name, getattr(self, name), issues)
        if not self.length > 0:
            issues.append(Issue("length", "must be > 0 m"))
        if not self.optical_depth >= 0:
            issues.append(Issue("optical_depth", "must be >= 0"))
        if not self.gamma20 > 0:
            issues.append(Issue("gamma20", "must be > 0 rad/s"))
        if not self.gamma10 >= 0:
            issues.append(Issue("gamma10", "must be >= 0 rad/s"))
        if not self.doppler_fwhm >= 0:
            issues.append(Issue("doppler_fwhm", "must be >= 0 rad/s"))
        if int(self.doppler_nodes) != self.doppler_nodes or self.doppler_nodes < 0:
            issues.append(Issue("doppler_nodes", "must be a non-negative integer"))
        elif self.doppler_nodes > 0 and self.doppler_fwhm == 0:
            issues.append(Issue("doppler_nodes", "must be 0 when doppler_fwhm is 0"))
        if issues:
            raise ValidationError(issues)
        object.__setattr__(self, "doppler_nodes", int(self.doppler_nodes))

    @property
    def kappa(self) -> float:
        """Field coupling constant ``OD * gamma20 / L`` in rad/(s m)."""
        return self.optical_depth * self.gamma20 / self.length

    @property
    def doppler_sigma(self) -> float:
        return self.doppler_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    def velocity_classes(self, nodes: Optional[int] = None):
        """Gauss-Hermite detuning shifts and normalized weights.

        Returns ``(shifts, weights)`` with ``weights.sum() == 1``.  With
        Doppler disabled a single class with zero shift is returned.
        """
        n = self.doppler_nodes if nodes is None else nodes
        if n == 0 or self.doppler_fwhm == 0:
            return np.zeros(1), np.ones(1)
        x, w = np.polynomial.hermite.hermgauss(n)
        return math.sqrt(2.0) * self.doppler_sigma * x, w / math.sqrt(math.pi)


@dataclass(frozen=True)
class ControlSegment:
    t_start: float
    t_end: float
    level: float = 1.0
    ramp_time: float = 0.0


@dataclass(frozen=True)
class ControlProfile:
    """Piecewise control schedule with raised-cosine ramps.

    The control is zero outside every segment.  Inside a segment it rises
    over ``ramp_time`` from ``t_start``, holds ``level`` and falls over
    ``ramp_time`` ending at ``t_end``.
    """

    segments: tuple = ()

    def __post_init__(self):
        segs = tuple(s if isinstance(s, ControlSegment) else ControlSegment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        issues = []
        for k, s in enumerate(segs):
            tag = f"control.segments[{k}]"
            if not s.t_end > s.t_start:
                issues.append(Issue(tag, "t_end must exceed t_start"))
            if not 0.0 <= s.level <= 1.0:
                issues.append(Issue(tag, "level must lie in [0, 1]"))
            if not s.ramp_time >= 0:
                issues.append(Issue(tag, "ramp_time must be >= 0"))
            elif 2 * s.ramp_time > s.t_end - s.t_start:
                issues.append(Issue(tag, "ramps longer than half the segment"))
            if k and s.t_start < segs[k - 1].t_end:
                issues.append(Issue(tag, "segments must be time-ordered and non-overlapping"))
        if issues:
            raise ValidationError(issues)

    def level(self, t):
        """Control amplitude as a fraction of the nominal Rabi frequency."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for s in self.segments:
            inside = (t >= s.t_start) & (t <= s.t_end)
            lev = np.full_like(t, s.level)
            if s.ramp_time > 0:
                up = (t - s.t_start) / s.ramp_time
                down = (s.t_end - t) / s.ramp_time
                lev = np.where(up < 1, s.level * 0.5 * (1 - np.cos(np.pi * up)), lev)
                lev = np.where(down < 1, s.level * 0.5 * (1 - np.cos(np.pi * down)), lev)
            out = np.where(inside, lev, out)
        return out

    def initial_level(self) -> float:
        """Plateau level of the first segment (0 for an empty schedule)."""
        return self.segments[0].level if self.segments else 0.0


@dataclass(frozen=True)
class DriveConfig:
    """Control and probe fields.

    ``control=None`` means the control is on at full amplitude for all time.
    The two-photon detuning defaults to exact Raman resonance.
    """

    omega_c: float = TWO_PI * 15e6
    omega_p_peak: float = TWO_PI * 1.3e6
    delta_one_photon: float = 0.0
    delta_two_photon: float = 0.0
    control: Optional[ControlProfile] = None

    def __post_init__(self):
        issues = []
        for name in ("omega_c", "omega_p_peak", "delta_one_photon", "delta_two_photon"):
            _finite(name, getattr(self, name), issues)
        if not self.omega_c >= 0:
            issues.append(Issue("omega_c", "Rabi frequency magnitude must be >= 0"))
        if not self.omega_p_peak >= 0:
            issues.append(Issue("omega_p_peak", "Rabi frequency magnitude must be >= 0"))
        if self.omega_c > 0 and self.omega_p_peak > WEAK_PROBE_RATIO * self.omega_c:
            issues.append(Issue(
                "omega_p_peak",
                f"weak-probe bound violated: omega_p_peak <= {WEAK_PROBE_RATIO} * omega_c",
            ))
        if issues:
            raise ValidationError(issues)

    def static_omega_c(self) -> float:
        level = 1.0 if self.control is None else self.control.initial_level()
        return self.omega_c * level

    def control_trace(self, t):
        t = np.asarray(t, dtype=float)
        if self.control is None:
            return np.full_like(t, self.omega_c)
        return self.omega_c * self.control.level(t)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform, FFT-friendly time grid ``start + k * span / n``."""

    n: int = 4096
    span: float = 16 * 7.3e-6
    start: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValidationError(Issue("grid.n", "need an integer >= 4"))
        if not self.span > 0:
            raise ValidationError(Issue("grid.span", "must be > 0 s"))

    @property
    def dt(self) -> float:
        return self.span / self.n

    @property
    def midpoint(self) -> float:
        return self.start + (self.n // 2) * self.dt

    def times(self):
        return self.start + np.arange(self.n) * self.dt


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex probe Rabi envelope on a uniform time grid."""

    t: np.ndarray
    amplitude: np.ndarray
    tau: float

    def __post_init__(self):
        t = _readonly(np.asarray(self.t, dtype=float))
        a = _readonly(np.asarray(self.amplitude, dtype=complex))
        if t.ndim != 1 or a.shape != t.shape or t.size < 4:
            raise ValidationError(Issue("pulse", "t and amplitude must be 1-D arrays of equal length >= 4"))
        steps = np.diff(t)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValidationError(Issue("pulse.t", "time grid must be uniform"))
        if not self.tau > 0:
            raise ValidationError(Issue("pulse.tau", "must be > 0 s"))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "amplitude", a)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def span(self) -> float:
        return self.dt * self.t.size

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    @property
    def energy(self) -> float:
        """Time-integrated ``|amplitude|**2`` (rectangle rule)."""
        return float(np.sum(self.intensity) * self.dt)

    def with_amplitude(self, amplitude) -> "PulseEnvelope":
        return PulseEnvelope(self.t, amplitude, self.tau)


def gaussian_sigma(tau: float) -> float:
    """Amplitude 1/e-width parameter giving an intensity FWHM of ``tau``."""
    return tau / (2.0 * math.sqrt(math.log(2.0)))


def make_gaussian_pulse(tau: float, peak: float, grid: TimeGrid, t0: Optional[float] = None) -> PulseEnvelope:
    """Gaussian probe envelope whose intensity FWHM equals ``tau``.

    The pulse is centred on the grid midpoint unless ``t0`` is given.
    """
    if not tau > 0:
        raise ValidationError(Issue("tau", "must be > 0 s"))
    if grid.span < MIN_SPAN_IN_TAU * tau:
        raise ValidationError(Issue(
            "grid.span",
            f"window {grid.span:.3g} s is shorter than the 8*tau rule ({MIN_SPAN_IN_TAU * tau:.3g} s)",
        ))
    sigma = gaussian_sigma(tau)
    if t0 is None:
        t0 = grid.midpoint
        offset = (np.arange(grid.n) - grid.n // 2) * grid.dt
        t = t0 + offset
    else:
        t = grid.times()
        offset = t - t0
    amp = peak * np.exp(-offset**2 / (2.0 * sigma**2))
    return PulseEnvelope(t, amp.astype(complex), tau)


def ac_stark_shift(omega_c: float, delta_one_photon: float) -> float:
    """Light shift ``|omega_c|**2 / delta`` of the ground coherence (signed)."""
    if delta_one_photon == 0:
        raise ValueError("ac Stark shift |omega_c|^2/delta is singular at zero one-photon detuning")
    return abs(omega_c) ** 2 / delta_one_photon


@dataclass(frozen=True)
class Metrics:
    energy_transmission: float
    peak_delay: float
    fwhm_ratio: float
    group_velocity: float
    reliable: bool = True

    def as_dict(self):
        return {
            "energy_transmission": self.energy_transmission,
            "peak_delay": self.peak_delay,
            "fwhm_ratio": self.fwhm_ratio,
            "group_velocity": self.group_velocity,
            "reliable": self.reliable,
        }


@dataclass(frozen=True)
class RegimeFlags:
    """Non-fatal validity indicators for the adiabatic Raman treatment.

    ``None`` means the condition is undefined (zero one-photon detuning).
    """

    far_detuned: bool
    stark_adiabatic: Optional[bool]
    ac_stark_shift: Optional[float]
    stark_phase: Optional[float]


@dataclass(frozen=True)
class ValidatedBundle:
    medium: MediumParams
    drive: DriveConfig
    pulse: PulseEnvelope
    flags: RegimeFlags = field(repr=True, default=None)


def validate(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope) -> ValidatedBundle:
    """Check cross-object invariants and compute regime flags.

    Raises ``ValidationError`` listing every violated bound.
    """
    issues = []
    for obj, name in ((medium, "medium"), (drive, "drive"), (pulse, "pulse")):
        expected = {"medium": MediumParams, "drive": DriveConfig, "pulse": PulseEnvelope}[name]
        if not isinstance(obj, expected):
            issues.append(Issue(name, f"expected {expected.__name__}"))
    if issues:
        raise ValidationError(issues)

    bound_ref = drive.omega_c if drive.omega_c > 0 else medium.gamma20
    if drive.omega_p_peak > WEAK_PROBE_RATIO * bound_ref:
        ref = "omega_c" if drive.omega_c > 0 else "gamma20"
        issues.append(Issue("omega_p_peak", f"weak-probe bound violated: omega_p_peak <= {WEAK_PROBE_RATIO} * {ref}"))
    if pulse.span < MIN_SPAN_IN_TAU * pulse.tau:
        issues.append(Issue("pulse.t", f"window shorter than the 8*tau rule ({MIN_SPAN_IN_TAU * pulse.tau:.3g} s)"))
    peak = np.max(np.abs(pulse.amplitude))
    if peak > 0 and max(abs(pulse.amplitude[0]), abs(pulse.amplitude[-1])) > EDGE_TOLERANCE * peak:
        issues.append(Issue("pulse.amplitude", "envelope not negligible (<1e-6 of peak) at the window edges"))
    if issues:
        raise ValidationError(issues)

    delta = drive.delta_one_photon
    far = delta != 0 and abs(delta) >= FAR_DETUNED_RATIO * abs(drive.omega_c)
    if delta == 0:
        shift = phase = adiabatic = None
    else:
        shift = ac_stark_shift(drive.omega_c, delta)
        phase = abs(shift) * pulse.tau
        adiabatic = phase > 1.0
    return ValidatedBundle(medium, drive, pulse, RegimeFlags(far, adiabatic, shift, phase))
