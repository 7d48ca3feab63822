import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slowlight.errors import ValidationError
from slowlight.model import (
    TWO_PI,
    ControlProfile,
    ControlSegment,
    DriveConfig,
    MediumParams,
    PulseEnvelope,
    TimeGrid,
    ac_stark_shift,
    make_gaussian_pulse,
    validate,
)

TAU = 7.3e-6
MHZ = TWO_PI * 1e6


def test_defaults_valid():
    med = MediumParams()
    assert med.doppler_nodes == 64
    assert med.gamma20 == pytest.approx(TWO_PI * 3e6)
    assert med.gamma10 == pytest.approx(1 / 300e-6)
    assert med.kappa == pytest.approx(1000 * med.gamma20 / 0.1)


@pytest.mark.parametrize("field,value", [
    ("length", 0.0), ("length", -1.0), ("optical_depth", -1.0), ("gamma20", 0.0),
    ("gamma10", -1.0), ("doppler_fwhm", -1.0), ("doppler_nodes", -2), ("doppler_nodes", 2.5),
    ("length", float("nan")), ("optical_depth", float("inf")),
])
def test_medium_rejects(field, value):
    with pytest.raises(ValidationError) as exc:
        MediumParams(**{field: value})
    assert any(i.field == field for i in exc.value.issues)


@settings(max_examples=200, deadline=None)
@given(
    length=st.floats(-1, 1, allow_nan=False),
    od=st.floats(-10, 1e4, allow_nan=False),
    g20=st.floats(-1e8, 1e8, allow_nan=False),
    g10=st.floats(-1e5, 1e5, allow_nan=False),
)
def test_medium_accepts_exactly_the_valid_region(length, od, g20, g10):
    valid = length > 0 and od >= 0 and g20 > 0 and g10 >= 0
    try:
        MediumParams(length=length, optical_depth=od, gamma20=g20, gamma10=g10)
    except ValidationError:
        assert not valid
    else:
        assert valid


@settings(max_examples=200, deadline=None)
@given(omega_c=st.floats(-1e9, 1e9, allow_nan=False), ratio=st.floats(0, 2))
def test_drive_weak_probe_region(omega_c, ratio):
    omega_p = ratio * abs(omega_c)
    valid = omega_c >= 0 and (omega_c == 0 or omega_p <= 0.2 * omega_c)
    try:
        DriveConfig(omega_c=omega_c, omega_p_peak=omega_p)
    except ValidationError:
        assert not valid
    else:
        assert valid


def test_probe_equal_to_control_rejected():
    with pytest.raises(ValidationError, match="weak-probe"):
        DriveConfig(omega_c=15 * MHZ, omega_p_peak=15 * MHZ)


def test_control_segments_validated():
    with pytest.raises(ValidationError):
        ControlProfile(((0.0, 2e-6), (1e-6, 3e-6)))
    with pytest.raises(ValidationError):
        ControlProfile(((2e-6, 1e-6),))
    with pytest.raises(ValidationError):
        ControlProfile(((0.0, 1e-6, 1.5),))
    with pytest.raises(ValidationError):
        ControlProfile(((0.0, 1e-6, 1.0, -1e-9),))


@settings(max_examples=100, deadline=None)
@given(
    start=st.floats(0, 1e-5), dur=st.floats(1e-7, 1e-5),
    level=st.floats(0, 1), ramp_frac=st.floats(0, 0.5),
)
def test_control_level_bounded(start, dur, level, ramp_frac):
    prof = ControlProfile((ControlSegment(start, start + dur, level, ramp_frac * dur),))
    t = np.linspace(start - dur, start + 2 * dur, 301)
    v = prof.level(t)
    assert np.all(v >= 0) and np.all(v <= level + 1e-15)
    assert np.all(v[t < start] == 0) and np.all(v[t > start + dur] == 0)


def test_control_ramp_shape():
    prof = ControlProfile((ControlSegment(0.0, 10e-6, 1.0, 1e-6),))
    assert prof.level(0.5e-6) == pytest.approx(0.5)
    assert prof.level(5e-6) == 1.0
    assert prof.level(9.5e-6) == pytest.approx(0.5)


def test_time_grid():
    g = TimeGrid(n=8, span=8.0, start=1.0)
    assert g.dt == 1.0
    np.testing.assert_array_equal(g.times(), np.arange(8) + 1.0)
    for bad in ({"n": 1}, {"span": 0.0}):
        with pytest.raises(ValidationError):
            TimeGrid(**bad)


@pytest.mark.parametrize("n", [4096, 4097, 1000])
def test_gaussian_symmetric_and_fwhm(n):
    p = make_gaussian_pulse(TAU, 1.0, TimeGrid(n=n, span=16 * TAU))
    c = n // 2
    k = min(c, n - 1 - c)
    np.testing.assert_array_equal(p.amplitude[c - k:c], p.amplitude[c + 1:c + 1 + k][::-1])
    assert abs(p.amplitude[c]) == 1.0
    from slowlight.spectral import fwhm
    assert fwhm(p.t, p.intensity) == pytest.approx(TAU, rel=1e-4)


def test_gaussian_requires_span():
    with pytest.raises(ValidationError, match="8"):
        make_gaussian_pulse(TAU, 1.0, TimeGrid(n=512, span=7 * TAU))


def test_pulse_envelope_immutable():
    p = make_gaussian_pulse(TAU, 1.0, TimeGrid())
    with pytest.raises(ValueError):
        p.amplitude[0] = 1.0
    with pytest.raises(ValidationError):
        PulseEnvelope(np.array([0.0, 1.0, 3.0]), np.zeros(3, complex), TAU)


@settings(max_examples=200, deadline=None)
@given(omega=st.floats(1e3, 1e10), delta=st.floats(1e3, 1e11), sign=st.sampled_from([1, -1]))
def test_ac_stark_symmetries(omega, delta, sign):
    d = sign * delta
    assert ac_stark_shift(omega, -d) == -ac_stark_shift(omega, d)
    assert ac_stark_shift(2 * omega, d) == pytest.approx(4 * ac_stark_shift(omega, d), rel=1e-15)


def test_ac_stark_singular_at_resonance():
    with pytest.raises(ValueError):
        ac_stark_shift(1.0, 0.0)


def test_validate_flags():
    pulse = make_gaussian_pulse(TAU, 1.3 * MHZ, TimeGrid())
    b = validate(MediumParams(), DriveConfig(delta_one_photon=20 * MHZ), pulse)
    assert b.flags.far_detuned is False
    b = validate(MediumParams(), DriveConfig(delta_one_photon=774 * MHZ), pulse)
    assert b.flags.far_detuned is True
    assert b.flags.ac_stark_shift == pytest.approx((15 * MHZ) ** 2 / (774 * MHZ))
    assert b.flags.stark_adiabatic is (b.flags.stark_phase > 1)
    b = validate(MediumParams(), DriveConfig(), pulse)
    assert b.flags.far_detuned is False and b.flags.ac_stark_shift is None


def test_validate_edges_and_bound():
    grid = TimeGrid()
    pulse = make_gaussian_pulse(TAU, 1.0, grid, t0=grid.span * 0.05)
    with pytest.raises(ValidationError, match="edges"):
        validate(MediumParams(), DriveConfig(), pulse)
    strong = make_gaussian_pulse(TAU, 2 * MHZ, grid)
    with pytest.raises(ValidationError) as exc:
        validate(MediumParams(), DriveConfig(omega_c=0.0, omega_p_peak=2 * MHZ), strong)
    assert exc.value.issues[0].field == "omega_p_peak"
    assert math.isfinite(validate(MediumParams(), DriveConfig(), make_gaussian_pulse(TAU, 1.0, grid)).pulse.energy)
