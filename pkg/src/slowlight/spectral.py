"""Frequency-domain propagation through a medium with static control."""

from __future__ import annotations

import numpy as np

from slowlight.errors import WindowError
from slowlight.model import C_LIGHT, DriveConfig, MediumParams, Metrics, PulseEnvelope
from slowlight.response import ResponseKernel, response_kernel

WRAP_TOLERANCE = 1e-3
UNRELIABLE_ENERGY = 1e-8


def fourier_frequencies(pulse: PulseEnvelope):
    """Envelope frequencies of the FFT bins in the ``exp(-i w t)`` convention.

    numpy's inverse transform synthesizes ``exp(+2 pi i f t)``, so bin ``f``
    carries the physical envelope frequency ``w = -2 pi f``.
    """
    return -2.0 * np.pi * np.fft.fftfreq(pulse.t.size, pulse.dt)


def propagate_spectral(pulse: PulseEnvelope, kernel: ResponseKernel, L: float) -> PulseEnvelope:
    """Output envelope after a length ``L``, in the retarded frame.

    ``kernel`` must be sampled on :func:`fourier_frequencies` of ``pulse``.
    """
    omega = fourier_frequencies(pulse)
    if np.shape(kernel.omega) != omega.shape or not np.allclose(kernel.omega, omega, rtol=1e-12, atol=0):
        raise ValueError("kernel must be evaluated on fourier_frequencies(pulse)")
    spectrum = np.fft.fft(pulse.amplitude)
    out = np.fft.ifft(spectrum * np.exp(-np.asarray(kernel.values) * L))
    peak = np.max(np.abs(out))
    if peak > 0 and max(abs(out[0]), abs(out[-1])) > WRAP_TOLERANCE * peak:
        raise WindowError(
            "output wraps around the periodic time window; enlarge the grid span "
            f"(edge/peak = {max(abs(out[0]), abs(out[-1])) / peak:.2e})"
        )
    return pulse.with_amplitude(out)


def propagate(medium: MediumParams, drive: DriveConfig, pulse: PulseEnvelope):
    """Build the kernel on the pulse's Fourier grid and propagate ``medium.length``."""
    kernel = response_kernel(medium, drive, fourier_frequencies(pulse))
    return propagate_spectral(pulse, kernel, medium.length), kernel


def peak_time(t, intensity) -> float:
    """Intensity-peak time refined by a three-point parabola."""
    i = int(np.argmax(intensity))
    if 0 < i < intensity.size - 1:
        a, b, c = intensity[i - 1], intensity[i], intensity[i + 1]
        denom = a - 2 * b + c
        if denom != 0:
            return float(t[i] + 0.5 * (a - c) / denom * (t[1] - t[0]))
    return float(t[i])


def fwhm(t, intensity) -> float:
    """Distance between the outermost half-maximum crossings (linear interpolation)."""
    half = 0.5 * np.max(intensity)
    above = np.flatnonzero(intensity >= half)
    i, j = above[0], above[-1]
    left = t[i]
    if i > 0:
        left = t[i - 1] + (half - intensity[i - 1]) / (intensity[i] - intensity[i - 1]) * (t[i] - t[i - 1])
    right = t[j]
    if j < intensity.size - 1:
        right = t[j] + (intensity[j] - half) / (intensity[j] - intensity[j + 1]) * (t[j + 1] - t[j])
    return float(right - left)


def pulse_metrics(inp: PulseEnvelope, out: PulseEnvelope, L: float) -> Metrics:
    if inp.t.shape != out.t.shape or not np.array_equal(inp.t, out.t):
        raise ValueError("input and output envelopes must share a time grid")
    i_in, i_out = inp.intensity, out.intensity
    e_in = float(np.sum(i_in))
    ratio = float(np.sum(i_out)) / e_in
    delay = peak_time(out.t, i_out) - peak_time(inp.t, i_in)
    return Metrics(
        energy_transmission=ratio,
        peak_delay=delay,
        fwhm_ratio=fwhm(out.t, i_out) / fwhm(inp.t, i_in),
        group_velocity=L / (L / C_LIGHT + delay),
        reliable=ratio >= UNRELIABLE_ENERGY,
    )
