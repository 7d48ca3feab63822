"""Weak-probe slow light and light storage in a three-level Lambda medium.

The package compares on-resonance EIT with a detuned Raman configuration in a
Doppler-broadened vapor.  Two independent solvers are provided: a
frequency-domain propagator for static control fields and a time-domain
Maxwell-Bloch integrator for switched control (storage and retrieval).
"""

from slowlight.model import (
    C_LIGHT,
    ControlProfile,
    ControlSegment,
    DriveConfig,
    MediumParams,
    Metrics,
    PulseEnvelope,
    TimeGrid,
    ValidationError,
    ac_stark_shift,
    make_gaussian_pulse,
    validate,
)
from slowlight.response import (
    ResponseKernel,
    group_delay,
    group_velocity,
    response_kernel,
    transmission_spectrum,
)
from slowlight.spectral import propagate, propagate_spectral, pulse_metrics
from slowlight.maxwell_bloch import (
    FieldHistory,
    SolverGrid,
    evolve,
    spinwave_snapshot,
    store_and_retrieve,
)

__version__ = "0.1.0"

__all__ = [
    "C_LIGHT",
    "ControlProfile",
    "ControlSegment",
    "DriveConfig",
    "FieldHistory",
    "MediumParams",
    "Metrics",
    "PulseEnvelope",
    "ResponseKernel",
    "SolverGrid",
    "TimeGrid",
    "ValidationError",
    "ac_stark_shift",
    "evolve",
    "group_delay",
    "group_velocity",
    "make_gaussian_pulse",
    "propagate",
    "propagate_spectral",
    "pulse_metrics",
    "response_kernel",
    "spinwave_snapshot",
    "store_and_retrieve",
    "transmission_spectrum",
    "validate",
]
