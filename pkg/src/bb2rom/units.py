"""Unit strings accepted in input documents and their SI conversion factors."""

from __future__ import annotations

import math

from .events import SchemaError

KNOT = 1852.0 / 3600.0

_FACTORS = {
    "m": 1.0,
    "m/s": 1.0,
    "kn": KNOT,
    "kts": KNOT,
    "rad": 1.0,
    "deg": math.pi / 180.0,
    "rad/s": 1.0,
    "deg/s": math.pi / 180.0,
    "rad/m": 1.0,
    "s": 1.0,
    "kg": 1.0,
    "t": 1000.0,
    "N": 1.0,
    "N*m": 1.0,
    "kg/m^3": 1.0,
    "m/s^2": 1.0,
    "kg*m^2": 1.0,
    "rev/s": 1.0,
    "rpm": 1.0 / 60.0,
    "1/s": 1.0,
    "1": 1.0,
}


def factor(unit: str) -> float:
    try:
        return _FACTORS[unit]
    except KeyError:
        raise SchemaError(f"unknown unit {unit!r}") from None


def to_si(value, unit: str):
    f = factor(unit)
    if isinstance(value, (list, tuple)):
        return [to_si(v, unit) for v in value]
    return value * f


def from_si(value, unit: str):
    f = factor(unit)
    if isinstance(value, (list, tuple)):
        return [from_si(v, unit) for v in value]
    return value / f


def quantity(node, expected_units=None, name="value"):
    """Read ``{"value": x, "unit": u}`` and return ``x`` in SI."""
    if not isinstance(node, dict) or "value" not in node or "unit" not in node:
        raise SchemaError(f"{name}: expected {{'value': ..., 'unit': ...}}, got {node!r}")
    unit = node["unit"]
    if expected_units is not None and unit not in expected_units:
        raise SchemaError(f"{name}: unit {unit!r} not one of {sorted(expected_units)}")
    extra = set(node) - {"value", "unit"}
    if extra:
        raise SchemaError(f"{name}: unknown keys {sorted(extra)}")
    return to_si(node["value"], unit)


def axis(node, expected_units=None, name="axis"):
    """Read ``{"values": [...], "unit": u}`` and return the SI list."""
    if not isinstance(node, dict) or "values" not in node or "unit" not in node:
        raise SchemaError(f"{name}: expected {{'values': [...], 'unit': ...}}")
    unit = node["unit"]
    if expected_units is not None and unit not in expected_units:
        raise SchemaError(f"{name}: unit {unit!r} not one of {sorted(expected_units)}")
    extra = set(node) - {"values", "unit"}
    if extra:
        raise SchemaError(f"{name}: unknown keys {sorted(extra)}")
    return to_si(list(node["values"]), unit)


LENGTH = {"m"}
SPEED = {"m/s", "kn", "kts"}
ANGLE = {"rad", "deg"}
RATE = {"rad/s", "deg/s"}
TIME = {"s"}
MASS = {"kg", "t"}
MOMENT = {"N*m"}
DENSITY = {"kg/m^3"}
ACCEL = {"m/s^2"}
