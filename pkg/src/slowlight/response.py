"""Steady-state weak-probe response of the Lambda medium.

The propagation exponent per unit length is

    K(w) = (kappa/2) D10 / (D20 D10 + |Omega_c|^2 / 4)

with ``D20 = gamma20 - i(Delta + delta + w)`` and ``D10 = gamma10 - i(delta + w)``,
where ``w`` is the envelope frequency in the ``exp(-i w t)`` convention.  The
probe amplitude transfer over a length ``L`` is ``exp(-K L)``.  Doppler
broadening shifts ``Delta`` per velocity class; the polarization (not the
transmission) is averaged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from slowlight.errors import ResolutionError
from slowlight.model import C_LIGHT, DriveConfig, MediumParams

_CHUNK = 4096
DERIVATIVE_RTOL = 1e-3


def kernel_values(medium: MediumParams, drive: DriveConfig, omega, nodes: Optional[int] = None, omega_c: Optional[float] = None):
    """Doppler-averaged ``K(omega)`` in 1/m for a constant control amplitude."""
    omega = np.asarray(omega, dtype=float)
    flat = omega.ravel()
    wc = drive.static_omega_c() if omega_c is None else omega_c
    shifts, weights = medium.velocity_classes(nodes)
    half_kappa = 0.5 * medium.kappa
    coupling = abs(wc) ** 2 / 4.0
    delta2 = drive.delta_two_photon
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, flat.size, _CHUNK):
        w = flat[lo:lo + _CHUNK, None]
        d20 = medium.gamma20 - 1j * (drive.delta_one_photon + shifts[None, :] + delta2 + w)
        d10 = medium.gamma10 - 1j * (delta2 + w)
        if coupling == 0.0:
            # two-level limit; avoids 0/0 when d10 vanishes too
            per_class = half_kappa / d20
        else:
            per_class = half_kappa * d10 / (d20 * d10 + coupling)
        out[lo:lo + _CHUNK] = np.sum(per_class * weights[None, :], axis=-1)
    return out.reshape(omega.shape)


@dataclass(frozen=True)
class ResponseKernel:
    """Sampled propagation exponent ``values`` on ``omega``.

    Kernels built by :func:`response_kernel` keep their medium and drive so
    they can be re-evaluated off-grid (needed for derivatives).
    """

    omega: np.ndarray
    values: np.ndarray
    medium: Optional[MediumParams] = None
    drive: Optional[DriveConfig] = None

    def evaluate(self, omega):
        if self.medium is None or self.drive is None:
            raise ValueError("kernel has no source model; only its samples are available")
        return kernel_values(self.medium, self.drive, omega)

    @property
    def attenuation(self):
        """Amplitude attenuation per meter."""
        return self.values.real

    @property
    def phase(self):
        """Phase accumulation per meter."""
        return -self.values.imag


def response_kernel(medium: MediumParams, drive: DriveConfig, omega_grid) -> ResponseKernel:
    omega = np.array(omega_grid, dtype=float)
    values = kernel_values(medium, drive, omega)
    omega.setflags(write=False)
    values.setflags(write=False)
    return ResponseKernel(omega, values, medium, drive)


def _derivative_step(medium: MediumParams, drive: DriveConfig) -> float:
    scale = medium.gamma20
    wc = drive.static_omega_c()
    if wc > 0:
        spread = abs(drive.delta_one_photon) + abs(drive.delta_two_photon) + 3 * medium.doppler_fwhm + medium.gamma20
        scale = min(scale, wc**2 / (4.0 * spread))
    if drive.delta_two_photon != 0:
        scale = min(scale, abs(drive.delta_two_photon))
    return 1e-2 * scale


def _central_difference(kernel: ResponseKernel, h: float) -> float:
    if kernel.medium is not None:
        k = kernel.evaluate(np.array([-h, h]))
        return float((k[1].imag - k[0].imag) / (2 * h))
    om = kernel.omega
    i0 = int(np.argmin(np.abs(om)))
    return float((kernel.values[i0 + 1].imag - kernel.values[i0 - 1].imag) / (om[i0 + 1] - om[i0 - 1]))


def group_delay(kernel: ResponseKernel, L: float) -> float:
    """Medium-induced envelope delay at the carrier, ``-L dIm K/dw`` (positive = slow).

    The central difference is repeated with the step halved; a relative
    change above 1e-3 raises ``ResolutionError``.  The returned value is the
    Richardson extrapolation of the two estimates.
    """
    if kernel.medium is None:
        return _sampled_group_delay(kernel, L)
    h = _derivative_step(kernel.medium, kernel.drive)
    d1 = _central_difference(kernel, h)
    d2 = _central_difference(kernel, h / 2)
    if d2 == 0 and d1 == 0:
        return 0.0
    if abs(d1 - d2) > DERIVATIVE_RTOL * abs(d2):
        raise ResolutionError(f"dispersion slope not converged under step halving (h={h:.3g} rad/s)")
    return -L * (4 * d2 - d1) / 3


def _sampled_group_delay(kernel: ResponseKernel, L: float) -> float:
    om = np.asarray(kernel.omega)
    order = np.argsort(om)
    om, val = om[order], np.asarray(kernel.values)[order]
    i0 = int(np.argmin(np.abs(om)))
    if om[i0] != 0 or i0 < 2 or i0 > om.size - 3:
        raise ResolutionError("sampled kernel needs omega = 0 and two neighbours on each side")
    d1 = (val[i0 + 2].imag - val[i0 - 2].imag) / (om[i0 + 2] - om[i0 - 2])
    d2 = (val[i0 + 1].imag - val[i0 - 1].imag) / (om[i0 + 1] - om[i0 - 1])
    if d1 == 0 and d2 == 0:
        return 0.0
    if abs(d1 - d2) > DERIVATIVE_RTOL * abs(d2):
        raise ResolutionError("sampled kernel too coarse for a converged dispersion slope")
    return -L * (4 * d2 - d1) / 3


def group_velocity(kernel: ResponseKernel, L: float) -> float:
    """``L / (L/c + group_delay)``, vacuum transit included."""
    return L / (L / C_LIGHT + group_delay(kernel, L))


def transmission_spectrum(kernel: ResponseKernel, L: float):
    """Intensity transmission ``exp(-2 Re K L)`` per frequency sample."""
    return np.exp(-2.0 * np.asarray(kernel.values).real * L)


def transparency_width(kernel: ResponseKernel, L: float) -> float:
    """Full width of the transmission peak at the carrier.

    The half level is taken midway between the carrier transmission and the
    minimum transmission on the grid; crossings are linearly interpolated.
    """
    om = np.asarray(kernel.omega)
    order = np.argsort(om)
    om = om[order]
    tr = transmission_spectrum(kernel, L)[order]
    i0 = int(np.argmin(np.abs(om)))
    level = 0.5 * (tr[i0] + tr.min())

    def crossing(step):
        i = i0
        while 0 < i < om.size - 1 and tr[i + step] >= level:
            i += step
        j = i + step
        if not 0 <= j < om.size or tr[j] >= level:
            raise ResolutionError("transparency window extends past the frequency grid")
        return om[i] + (level - tr[i]) * (om[j] - om[i]) / (tr[j] - tr[i])

    return float(crossing(1) - crossing(-1))
