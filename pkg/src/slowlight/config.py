"""Scenario configuration files: INI sections with unit-bearing values.

Frequencies written in Hz/kHz/MHz/GHz are cyclic and converted to rad/s
(``15 MHz`` -> ``2*pi*15e6``); ``rad/s`` and ``1/s`` are taken as is.  Times
accept s/ms/us/ns and lengths m/cm/mm.  Every dimensional value must carry a
unit.  :func:`emit_config` writes SI values with 17 significant digits so
``parse_config_text(emit_config(c)) == c``.
"""

from __future__ import annotations

import configparser
import math
import re
from decimal import Decimal
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from slowlight.errors import SlowlightError, ValidationError
from slowlight.model import (
    TWO_PI,
    ControlProfile,
    ControlSegment,
    DriveConfig,
    MediumParams,
)
from slowlight.scenarios import PULSE_TAU, SWEEP_SAMPLES, SWEEP_SPAN_IN_TAU


class ConfigError(SlowlightError, ValueError):
    code = 2


# unit -> (factor, decimal exponent); the exponent is applied to the decimal
# literal itself so "0.2 us" parses to exactly the float 0.2e-6
_ANGULAR = {"hz": (TWO_PI, 0), "khz": (TWO_PI, 3), "mhz": (TWO_PI, 6), "ghz": (TWO_PI, 9), "rad/s": (1.0, 0)}
_RATE = dict(_ANGULAR, **{"1/s": (1.0, 0), "/s": (1.0, 0), "s^-1": (1.0, 0)})
_TIME = {"s": (1.0, 0), "ms": (1.0, -3), "us": (1.0, -6), "µs": (1.0, -6), "μs": (1.0, -6), "ns": (1.0, -9)}
_LENGTH = {"m": (1.0, 0), "cm": (1.0, -2), "mm": (1.0, -3)}
_UNITS = {"angular": _ANGULAR, "rate": _RATE, "time": _TIME, "length": _LENGTH}
_SI = {"angular": "rad/s", "rate": "1/s", "time": "s", "length": "m"}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(\S*)\s*$")


@dataclass(frozen=True)
class PulseConfig:
    tau: float = PULSE_TAU


@dataclass(frozen=True)
class GridConfig:
    n_t: int = SWEEP_SAMPLES
    span: Optional[float] = None
    n_z: int = 201
    td_doppler_nodes: int = 16
    td_dt: float = 25e-9

    def spectral_span(self, tau: float) -> float:
        return SWEEP_SPAN_IN_TAU * tau if self.span is None else self.span


@dataclass(frozen=True)
class CalibrationConfig:
    target_eit_loss: float = 0.99
    mode: str = "calibrate"

    def __post_init__(self):
        if self.mode not in ("calibrate", "best-effort", "fixed"):
            raise ConfigError("calibration.mode must be calibrate, best-effort or fixed")


@dataclass(frozen=True)
class SweepConfig:
    detunings: tuple = tuple(TWO_PI * f * 1e6 for f in (500.0, 600.0, 774.0, 900.0, 1000.0, 1200.0))
    power_multipliers: tuple = (0.5, 1.0, 1.5, 2.0)
    workers: int = 1


@dataclass(frozen=True)
class StorageConfig:
    store_time: float = 10e-6
    windows: int = 3
    window_length: Optional[float] = None
    gap: float = 5e-6
    ramp_time: float = 0.2e-6


@dataclass(frozen=True)
class ResponseConfig:
    omega_span: float = TWO_PI * 1e6
    n_omega: int = 2001


@dataclass(frozen=True)
class ScenarioConfig:
    medium: MediumParams = field(default_factory=MediumParams)
    drive: DriveConfig = field(default_factory=DriveConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    storage: StorageConfig = field(default_factory=StorageConfig)
    response: ResponseConfig = field(default_factory=ResponseConfig)


# (section, key) -> kind; kinds: a unit family, "number", "int", "str", "list:<kind>", "optional:<kind>"
_SCHEMA = {
    "medium": {
        "length": "length", "optical_depth": "number", "gamma20": "angular",
        "gamma10": "rate", "doppler_fwhm": "angular", "doppler_nodes": "int",
    },
    "drive": {
        "omega_c": "angular", "omega_p_peak": "angular",
        "delta_one_photon": "angular", "delta_two_photon": "angular",
    },
    "control": {"segments": "segments"},
    "pulse": {"tau": "time"},
    "grid": {"n_t": "int", "span": "optional:time", "n_z": "int", "td_doppler_nodes": "int", "td_dt": "time"},
    "calibration": {"target_eit_loss": "number", "mode": "str"},
    "sweep": {"detunings": "list:angular", "power_multipliers": "list:number", "workers": "int"},
    "storage": {
        "store_time": "time", "windows": "int", "window_length": "optional:time",
        "gap": "time", "ramp_time": "time",
    },
    "response": {"omega_span": "angular", "n_omega": "int"},
}


def _quantity(section, key, text, kind):
    where = f"{section}.{key}"
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"{where}: cannot parse {text!r} as a number with unit")
    literal, unit = m.group(1), m.group(2)
    value = float(literal)
    if kind == "number":
        if unit:
            raise ConfigError(f"{where}: dimensionless value must not carry a unit (got {unit!r})")
        return value
    table = _UNITS[kind]
    if not unit:
        raise ConfigError(f"{where}: missing unit; expected one of {', '.join(table)}")
    scale = table.get(unit) or table.get(unit.lower())
    if scale is None:
        raise ConfigError(f"{where}: unit {unit!r} is not a {kind} unit ({', '.join(table)})")
    factor, exponent = scale
    if exponent and math.isfinite(value):
        value = float(Decimal(literal).scaleb(exponent))
    return value * factor if factor != 1.0 else value


def _convert(section, key, text, kind):
    where = f"{section}.{key}"
    if kind.startswith("optional:"):
        if text.strip().lower() in ("", "auto", "none"):
            return None
        return _convert(section, key, text, kind.split(":", 1)[1])
    if kind.startswith("list:"):
        sub = kind.split(":", 1)[1]
        return tuple(_quantity(section, key, part, sub) for part in text.split(",") if part.strip())
    if kind == "int":
        try:
            return int(text.strip())
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if kind == "str":
        return text.strip()
    if kind == "segments":
        segs = []
        for chunk in text.split(";"):
            if not chunk.strip():
                continue
            parts = [p.strip() for p in chunk.split(",")]
            if len(parts) != 4:
                raise ConfigError(f"{where}: each segment is 't_start, t_end, level, ramp_time'")
            segs.append(ControlSegment(
                _quantity(section, key, parts[0], "time"), _quantity(section, key, parts[1], "time"),
                _quantity(section, key, parts[2], "number"), _quantity(section, key, parts[3], "time"),
            ))
        return ControlProfile(tuple(segs))
    return _quantity(section, key, text, kind)


def _read(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}: parse error at line {exc.lineno}: no [section] header before {exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}: parse error at line {lineno}: {line.strip()!r}") from None
    except configparser.Error as exc:
        where = f" at line {exc.lineno}" if getattr(exc, "lineno", None) else ""
        raise ConfigError(f"{source}: parse error{where}: {exc.message}") from None
    return parser


def _values(parser: configparser.ConfigParser) -> dict:
    out = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, text in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            out.setdefault(section, {})[key] = _convert(section, key, text, _SCHEMA[section][key])
    return out


def _build(values: dict, base: ScenarioConfig) -> ScenarioConfig:
    def upd(obj, section):
        kw = dict(values.get(section, {}))
        return replace(obj, **kw) if kw else obj

    try:
        drive_kw = dict(values.get("drive", {}))
        if "control" in values:
            segs = values["control"]["segments"]
            drive_kw["control"] = segs if segs.segments else None
        return ScenarioConfig(
            medium=upd(base.medium, "medium"),
            drive=replace(base.drive, **drive_kw) if drive_kw else base.drive,
            pulse=upd(base.pulse, "pulse"),
            grid=upd(base.grid, "grid"),
            calibration=upd(base.calibration, "calibration"),
            sweep=upd(base.sweep, "sweep"),
            storage=upd(base.storage, "storage"),
            response=upd(base.response, "response"),
        )
    except ValidationError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str, base: Optional[ScenarioConfig] = None, source: str = "<config>") -> ScenarioConfig:
    """Parse config text on top of ``base`` (defaults when None)."""
    return _build(_values(_read(text, source)), base or ScenarioConfig())


def parse_config(path, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text, base, source=str(path))


def preset_names():
    root = resources.files("slowlight") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    res = resources.files("slowlight") / "presets" / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config_text(res.read_text(encoding="utf-8"), base, source=f"preset:{name}")


def _fmt(value, kind):
    if kind.startswith("optional:"):
        return "auto" if value is None else _fmt(value, kind.split(":", 1)[1])
    if kind.startswith("list:"):
        sub = kind.split(":", 1)[1]
        return ", ".join(_fmt(v, sub) for v in value)
    if kind in ("int", "str"):
        return str(value)
    if kind == "number":
        return format(value, ".17g")
    if kind == "segments":
        return "; ".join(
            f"{s.t_start:.17g} s, {s.t_end:.17g} s, {s.level:.17g}, {s.ramp_time:.17g} s" for s in value.segments
        )
    return f"{value:.17g} {_SI[kind]}"


def emit_config(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` in SI units; the inverse of :func:`parse_config_text`."""
    lines = []
    objs = {
        "medium": cfg.medium, "drive": cfg.drive, "pulse": cfg.pulse, "grid": cfg.grid,
        "calibration": cfg.calibration, "sweep": cfg.sweep, "storage": cfg.storage, "response": cfg.response,
    }
    for section, keys in _SCHEMA.items():
        if section == "control":
            if cfg.drive.control is None:
                continue
            lines += ["[control]", f"segments = {_fmt(cfg.drive.control, 'segments')}", ""]
            continue
        lines.append(f"[{section}]")
        for key, kind in keys.items():
            lines.append(f"{key} = {_fmt(getattr(objs[section], key), kind)}")
        lines.append("")
    return "\n".join(lines)


def config_dict(cfg: ScenarioConfig) -> dict:
    """Plain nested dict (SI units) for manifests."""

    def conv(obj):
        if isinstance(obj, ControlProfile):
            return [conv(s) for s in obj.segments]
        if hasattr(obj, "__dataclass_fields__"):
            return {f.name: conv(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, tuple):
            return [conv(v) for v in obj]
        if isinstance(obj, float) and not math.isfinite(obj):
            return repr(obj)
        return obj

    return conv(cfg)
