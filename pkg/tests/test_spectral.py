import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowlight.errors import WindowError
from slowlight.model import C_LIGHT, TWO_PI, DriveConfig, MediumParams, TimeGrid, make_gaussian_pulse
from slowlight.response import ResponseKernel
from slowlight.spectral import (
    fourier_frequencies,
    fwhm,
    peak_time,
    propagate,
    propagate_spectral,
    pulse_metrics,
)

TAU = 7.3e-6
MHZ = TWO_PI * 1e6
L = 0.1


@pytest.fixture
def pulse():
    return make_gaussian_pulse(TAU, 1.3 * MHZ, TimeGrid(n=4096, span=64 * TAU))


def test_frequency_convention(pulse):
    # a carrier exp(-i w0 t) must land in the bin labelled w0
    w = fourier_frequencies(pulse)
    k = 37
    sig = np.exp(-1j * w[k] * pulse.t)
    assert int(np.argmax(np.abs(np.fft.fft(sig)))) == k


def test_empty_medium_identity(pulse):
    out, _ = propagate(MediumParams(optical_depth=0.0), DriveConfig(), pulse)
    assert np.max(np.abs(out.amplitude - pulse.amplitude)) <= 1e-10 * np.max(np.abs(pulse.amplitude))
    m = pulse_metrics(pulse, out, L)
    assert m.energy_transmission == pytest.approx(1, abs=1e-12)
    assert m.peak_delay == pytest.approx(0, abs=1e-15)
    assert m.fwhm_ratio == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("shift_steps", [10, 173, 333.5])
def test_linear_phase_is_time_shift(pulse, shift_steps):
    w = fourier_frequencies(pulse)
    shift = shift_steps * pulse.dt
    a = shift / L
    out = propagate_spectral(pulse, ResponseKernel(w, -1j * a * w), L)
    assert out.energy == pytest.approx(pulse.energy, rel=1e-12)
    expected = make_gaussian_pulse(TAU, 1.3 * MHZ, TimeGrid(n=4096, span=64 * TAU), t0=pulse.t[2048] + shift)
    np.testing.assert_allclose(out.amplitude, expected.amplitude, atol=1e-9 * 1.3 * MHZ)
    assert pulse_metrics(pulse, out, L).peak_delay == pytest.approx(shift, abs=1e-3 * pulse.dt)


def test_constructed_delay_metrics():
    grid = TimeGrid(n=8192, span=64 * TAU)
    inp = make_gaussian_pulse(TAU, 1.0, grid, t0=grid.midpoint)
    out = make_gaussian_pulse(TAU, 1.0, grid, t0=grid.midpoint + 3.3e-6)
    m = pulse_metrics(inp, out, L)
    assert abs(m.peak_delay - 3.3e-6) <= grid.dt
    assert m.group_velocity == pytest.approx(L / (L / C_LIGHT + 3.3e-6), rel=1e-3)
    assert m.group_velocity == pytest.approx(C_LIGHT / 1e4, rel=0.02)


def test_peak_and_fwhm_subgrid():
    t = np.linspace(-1, 1, 201)
    y = np.exp(-((t - 0.013) ** 2) / 0.02)
    assert peak_time(t, y) == pytest.approx(0.013, abs=2e-3)
    assert fwhm(t, y) == pytest.approx(2 * np.sqrt(0.02 * np.log(2)), rel=5e-3)


@settings(max_examples=30, deadline=None)
@given(
    od=st.floats(0, 3000),
    delta=st.floats(-1.2e10, 1.2e10),
    g10=st.floats(0, 1e5),
)
def test_parseval_and_passivity(od, delta, g10):
    grid = TimeGrid(n=2048, span=64 * TAU)
    p = make_gaussian_pulse(TAU, 1.0, grid)
    med = MediumParams(optical_depth=od, gamma10=g10, doppler_nodes=16)
    w = fourier_frequencies(p)
    from slowlight.response import response_kernel
    kern = response_kernel(med, DriveConfig(delta_one_photon=delta), w)
    spectrum = np.fft.fft(p.amplitude) * np.exp(-kern.values * L)
    out = np.fft.ifft(spectrum)
    e_time = np.sum(np.abs(out) ** 2)
    e_freq = np.sum(np.abs(spectrum) ** 2) / spectrum.size
    assert e_time == pytest.approx(e_freq, rel=1e-8)
    assert e_time / np.sum(p.intensity) <= 1 + 1e-10


def test_wrap_detected():
    grid = TimeGrid(n=1024, span=16 * TAU)
    p = make_gaussian_pulse(TAU, 1.0, grid)
    w = fourier_frequencies(p)
    with pytest.raises(WindowError):
        propagate_spectral(p, ResponseKernel(w, -1j * (grid.span / 2 / L) * w), L)


def test_kernel_grid_mismatch(pulse):
    with pytest.raises(ValueError):
        propagate_spectral(pulse, ResponseKernel(np.zeros(3), np.zeros(3)), L)


def test_unreliable_flag(pulse):
    assert not pulse_metrics(pulse, pulse.with_amplitude(pulse.amplitude * 1e-5), L).reliable
    assert pulse_metrics(pulse, pulse.with_amplitude(pulse.amplitude * 1e-3), L).reliable


def test_two_level_energy_transmission():
    # spectrally narrow pulse against a 2*pi*3 MHz line: transmission ~ exp(-OD)
    grid = TimeGrid(n=4096, span=64 * TAU)
    p = make_gaussian_pulse(TAU, 0.1 * MHZ, grid)
    med = MediumParams(optical_depth=0.1, doppler_fwhm=0.0, doppler_nodes=0)
    out, _ = propagate(med, DriveConfig(omega_c=0.0, omega_p_peak=0.1 * MHZ), p)
    assert pulse_metrics(p, out, L).energy_transmission == pytest.approx(np.exp(-0.1), rel=1e-3)
