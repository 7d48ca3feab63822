"""Exception hierarchy shared by the solvers, scenarios and CLI."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Issue:
    field: str
    message: str


class SlowlightError(Exception):
    """Base class; ``code`` is the CLI exit status for this error class."""

    code = 1


class ValidationError(SlowlightError, ValueError):
    """One or more hard invariants were violated."""

    code = 3

    def __init__(self, issues):
        if isinstance(issues, Issue):
            issues = [issues]
        self.issues = list(issues)
        super().__init__("; ".join(f"{i.field}: {i.message}" for i in self.issues))


class NumericalError(SlowlightError, RuntimeError):
    code = 5


class ResolutionError(NumericalError):
    """A finite-difference estimate did not converge under step halving."""


class WindowError(NumericalError):
    """The time window is too short for the propagated signal."""


class StiffnessError(NumericalError):
    """The time integration produced non-physical growth."""


class CalibrationError(SlowlightError):
    """The calibration target cannot be bracketed.

    ``best_od`` and ``best_transmission`` describe the bracket end closest to
    the requested target so callers can fall back to it explicitly.
    """

    code = 4

    def __init__(self, message, best_od, best_transmission):
        super().__init__(message)
        self.best_od = best_od
        self.best_transmission = best_transmission
