"""Versioned JSON formats for coefficient sets and Bernstein paths.

Dimensional fields are ``{"value": x, "unit": u}``; axes are
``{"values": [...], "unit": u}``. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import units
from .events import EventLog, SchemaError, record
from .hydro_model import (
    CHANNELS,
    N_SURFACES,
    CoefficientSet,
    ControlSurfaceTable,
    HullTable,
    MotionDerivativeSet,
    Normalization,
    PropellerModel,
    QuadraticSurfaceModel,
)
from .path_geometry import BernsteinPath
from .tables import GridTable

SCHEMA_VERSION = 1


def check_keys(node, required, optional=(), name="document"):
    if not isinstance(node, dict):
        raise SchemaError(f"{name}: expected an object")
    missing = set(required) - set(node)
    if missing:
        raise SchemaError(f"{name}: missing keys {sorted(missing)}")
    extra = set(node) - set(required) - set(optional)
    if extra:
        raise SchemaError(f"{name}: unknown keys {sorted(extra)}")


def check_version(node, name):
    v = node.get("schema_version")
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{name}: unsupported schema_version {v!r} (expected {SCHEMA_VERSION})")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})", code="E_CONFIG") from None


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def _axis_node(values, unit):
    return {"values": [float(units.from_si(v, unit)) for v in values], "unit": unit}


def _q(value, unit):
    return {"value": float(units.from_si(value, unit)), "unit": unit}


# --------------------------------------------------------------------------
# Coefficients


def coefficients_from_dict(doc: dict, log: EventLog | None = None) -> CoefficientSet:
    check_keys(doc, ["schema_version", "L", "hull_tables", "motion_derivatives",
                     "control_surfaces", "propeller"],
               ["label", "synthetic", "normalization", "notes"], "coefficients")
    check_version(doc, "coefficients")
    L = units.quantity(doc["L"], units.LENGTH, "L")
    norm = Normalization(**doc.get("normalization", {}))

    h = doc["hull_tables"]
    check_keys(h, ["speed", "depth", "beta", "alpha", "resistance", "beta_tables", "alpha_tables"],
               name="hull_tables")
    U = units.axis(h["speed"], units.SPEED, "hull speed")
    D = units.axis(h["depth"], units.LENGTH, "hull depth")
    B = units.axis(h["beta"], units.ANGLE, "hull beta")
    A = units.axis(h["alpha"], units.ANGLE, "hull alpha")
    res = GridTable([U, D], h["resistance"], "R0")
    for key in ("beta_tables", "alpha_tables"):
        check_keys(h[key], CHANNELS, name=key)
    bt = [GridTable([U, B, D], h["beta_tables"][c], f"beta_{c}") for c in CHANNELS]
    at = [GridTable([U, A, D], h["alpha_tables"][c], f"alpha_{c}") for c in CHANNELS]
    hull = HullTable(res, bt, at)

    motion = MotionDerivativeSet.from_mapping(doc["motion_derivatives"])
    if motion.defaulted:
        record(log, "W_DEFAULTED", f"{len(motion.defaulted)} motion derivatives defaulted to 0")

    cs = doc["control_surfaces"]
    if cs.get("mode", "table") == "quadratic":
        check_keys(cs, ["mode", "coefficients"], ["hard_stop"], "control_surfaces")
        stop = units.quantity(cs.get("hard_stop", {"value": 30, "unit": "deg"}), units.ANGLE)
        surfaces = QuadraticSurfaceModel(cs["coefficients"], stop)
    else:
        check_keys(cs, ["deflection", "speed", "depth", "planes"], ["mode", "hard_stop"],
                   "control_surfaces")
        dax = units.axis(cs["deflection"], units.ANGLE, "deflection")
        sax = units.axis(cs["speed"], units.SPEED, "plane speed")
        zax = units.axis(cs["depth"], units.LENGTH, "plane depth")
        if len(cs["planes"]) != N_SURFACES:
            raise SchemaError(f"control_surfaces: need {N_SURFACES} planes")
        tabs, names = [], []
        for k, pl in enumerate(cs["planes"]):
            check_keys(pl, CHANNELS, ["name"], f"plane {k + 1}")
            names.append(pl.get("name", f"plane{k + 1}"))
            tabs.append([GridTable([dax, sax, zax], pl[c], f"{names[-1]}_{c}") for c in CHANNELS])
        stop = units.quantity(cs.get("hard_stop", {"value": 30, "unit": "deg"}), units.ANGLE)
        surfaces = ControlSurfaceTable(tabs, names, stop)

    p = doc["propeller"]
    check_keys(p, ["D", "kt", "kq", "thrust_deduction"], ["j_range"], "propeller")
    td = p["thrust_deduction"]
    check_keys(td, ["speed", "depth", "values"], name="thrust_deduction")
    t_table = GridTable([units.axis(td["speed"], units.SPEED), units.axis(td["depth"], units.LENGTH)],
                        td["values"], "t")
    prop = PropellerModel(units.quantity(p["D"], units.LENGTH, "D"), p["kt"], p["kq"], t_table,
                          tuple(p.get("j_range", (0.0, 1.2))))
    return CoefficientSet(L, hull, motion, surfaces, prop, norm, doc.get("label", ""))


def coefficients_to_dict(cs: CoefficientSet, synthetic: bool = False) -> dict:
    h = cs.hull
    U, B, D = h.beta_tables[0].axes
    A = h.alpha_tables[0].axes[1]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "label": cs.label,
        "synthetic": synthetic,
        "L": _q(cs.L, "m"),
        "normalization": {
            "force_power": cs.normalization.force_power,
            "force_divisor": cs.normalization.force_divisor,
            "moment_power": cs.normalization.moment_power,
            "moment_divisor": cs.normalization.moment_divisor,
        },
        "hull_tables": {
            "speed": _axis_node(U, "kn"),
            "depth": _axis_node(D, "m"),
            "beta": _axis_node(B, "deg"),
            "alpha": _axis_node(A, "deg"),
            "resistance": h.resistance.values.tolist(),
            "beta_tables": {c: t.values.tolist() for c, t in zip(CHANNELS, h.beta_tables)},
            "alpha_tables": {c: t.values.tolist() for c, t in zip(CHANNELS, h.alpha_tables)},
        },
        "motion_derivatives": {k: v for k, v in cs.motion.values.items()
                               if k not in cs.motion.defaulted},
    }
    s = cs.surfaces
    if isinstance(s, QuadraticSurfaceModel):
        doc["control_surfaces"] = {"mode": "quadratic", "coefficients": s.coeffs.tolist(),
                                   "hard_stop": _q(s.hard_stop, "deg")}
    else:
        d, sp, dep = s.surfaces[0][0].axes
        doc["control_surfaces"] = {
            "mode": "table",
            "hard_stop": _q(s.hard_stop, "deg"),
            "deflection": _axis_node(d, "deg"),
            "speed": _axis_node(sp, "kn"),
            "depth": _axis_node(dep, "m"),
            "planes": [dict(name=n, **{c: t.values.tolist() for c, t in zip(CHANNELS, chans)})
                       for n, chans in zip(s.names, s.surfaces)],
        }
    p = cs.propeller
    doc["propeller"] = {
        "D": _q(p.D, "m"), "kt": list(p.kt), "kq": list(p.kq), "j_range": list(p.j_range),
        "thrust_deduction": {"speed": _axis_node(p.t_table.axes[0], "kn"),
                             "depth": _axis_node(p.t_table.axes[1], "m"),
                             "values": p.t_table.values.tolist()},
    }
    return doc


def load_coefficients(path, log: EventLog | None = None) -> CoefficientSet:
    return coefficients_from_dict(read_json(path), log)


# --------------------------------------------------------------------------
# Paths


def path_from_dict(doc: dict, log: EventLog | None = None) -> BernsteinPath:
    check_keys(doc, ["schema_version", "control_points", "T_f"],
               ["label", "frame_samples", "notes", "terrain"], "path")
    check_version(doc, "path")
    cp = doc["control_points"]
    check_keys(cp, ["values", "unit"], name="control_points")
    pts = np.asarray(units.to_si(cp["values"], cp["unit"]) if cp["unit"] in units.LENGTH
                     else _bad_unit(cp["unit"]), dtype=float)
    T_f = units.quantity(doc["T_f"], units.TIME, "T_f")
    return BernsteinPath(pts, T_f, int(doc.get("frame_samples", 512)), log)


def _bad_unit(u):
    raise SchemaError(f"control_points: unit {u!r} is not a length")


def path_to_dict(path: BernsteinPath, label: str = "") -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": label,
        "control_points": {"values": path.points.tolist(), "unit": "m"},
        "T_f": _q(path.T_f, "s"),
        "frame_samples": path.frame_samples,
    }


def load_path(path, log: EventLog | None = None) -> BernsteinPath:
    return path_from_dict(read_json(path), log)


def terrain_from_dict(doc: dict):
    """Optional elevation grid ``{"x", "y", "depth"}`` used for clearance checks."""
    t = doc.get("terrain")
    if t is None:
        return None
    check_keys(t, ["x", "y", "depth"], ["clearance"], "terrain")
    x = units.axis(t["x"], units.LENGTH, "terrain x")
    y = units.axis(t["y"], units.LENGTH, "terrain y")
    z = units.axis(t["depth"], units.LENGTH, "terrain depth")
    grid = GridTable([x, y], np.asarray(z).reshape(len(x), len(y)), "terrain")
    clearance = units.quantity(t.get("clearance", {"value": 5.0, "unit": "m"}), units.LENGTH)
    return grid, clearance


def finite_or_raise(x, name):
    if not math.isfinite(x):
        raise SchemaError(f"{name} is not finite")
    return x
