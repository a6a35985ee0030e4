"""Parsing of quantities written with a unit suffix (``19mm``, ``20C``)."""

import re

from .errors import UnitError

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERN = re.compile(rf"^\s*({_NUMBER})\s*((?:[A-Za-z/%][A-Za-z0-9/%]*)?)\s*$")

LENGTH = {"": 1.0, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6}
TIME = {"": 1.0, "s": 1.0, "min": 60.0, "h": 3600.0}
VELOCITY = {"": 1.0, "m/s": 1.0, "mm/s": 1e-3, "cm/s": 1e-2}
FLUX = {"": 1.0, "W/m2": 1.0, "kW/m2": 1e3}

CELSIUS_OFFSET = 273.15


def _split(text):
    m = _PATTERN.match(str(text))
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2)


def _scaled(text, table, kind):
    value, unit = _split(text)
    try:
        return value * table[unit]
    except KeyError:
        raise UnitError(f"unit {unit!r} is not a {kind} unit (got {text!r})") from None


def length(text):
    """Return a length in metres; bare numbers are taken as metres."""
    return _scaled(text, LENGTH, "length")


def duration(text):
    return _scaled(text, TIME, "time")


def velocity(text):
    return _scaled(text, VELOCITY, "velocity")


def flux(text):
    return _scaled(text, FLUX, "heat-flux")


def temperature(text):
    """Return a temperature in kelvin. ``C`` suffix is converted, bare numbers are kelvin."""
    value, unit = _split(text)
    if unit in ("", "K"):
        return value
    if unit == "C":
        return value + CELSIUS_OFFSET
    raise UnitError(f"unit {unit!r} is not a temperature unit (got {text!r})")
