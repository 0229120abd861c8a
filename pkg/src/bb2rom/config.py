"""Scenario configuration documents: strict schema, SI ingestion and the pre-run audit.

A configuration is one JSON document that references the coefficient file,
the hull mesh and optionally a path file by relative path. Every dimensional
field carries an explicit unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import units
from .actuation import ActuatorState, AutopilotGains
from .events import (
    ConfigurationError,
    DesignError,
    EmergenceError,
    EventLog,
    SchemaError,
    record,
)
from .fileio import SCHEMA_VERSION, check_keys, check_version, load_coefficients, load_path, read_json
from .guidance import PFConfig
from .hydro_model import CoefficientSet, ControlSurfaceTable
from .l1_adaptive import DesiredModel, L1Controller, second_order_model
from .path_geometry import BernsteinPath
from .simulator import Environment, Plant, SimConfig, check_sample_time, trim
from .vehicle import Particulars
from .wave_hydrostatics import HullMesh, WaveField, read_ascii_stl

TOP_REQUIRED = ["schema_version", "vehicle", "coefficients", "environment", "wave", "autopilot",
                "pf", "l1", "rate_autopilot", "sim", "scenario"]
TOP_OPTIONAL = ["mesh", "label", "notes"]


def _num(node, name):
    if isinstance(node, bool) or not isinstance(node, (int, float)) or not math.isfinite(node):
        raise SchemaError(f"{name}: expected a finite number, got {node!r}")
    return float(node)


def _triple(node, name):
    if not isinstance(node, list) or len(node) != 3:
        raise SchemaError(f"{name}: expected [kp, ki, kd]")
    return tuple(_num(v, name) for v in node)


def _flag(node, name):
    if not isinstance(node, bool):
        raise SchemaError(f"{name}: expected true or false")
    return node


@dataclass
class RuntimeConfig:
    """Fully ingested configuration, all values SI and radians."""

    particulars: Particulars
    coefficients: CoefficientSet
    coefficients_file: str
    env: Environment
    wave: dict
    autopilot: AutopilotGains
    rate_limit: float
    pf: PFConfig
    l1: dict
    rate_autopilot: dict
    sim: SimConfig
    scenario: dict
    mesh: HullMesh | None = None
    mesh_file: str | None = None
    path: BernsteinPath | None = None
    base_dir: Path = Path(".")
    label: str = ""
    events: EventLog = field(default_factory=EventLog)

    def desired_model(self) -> DesiredModel:
        p = self.l1
        return second_order_model(p["omega_n"], p["zeta"], p["zero"], p["T_s"])

    def l1_controller(self) -> L1Controller:
        return L1Controller(self.desired_model(), bandwidth=self.l1["bandwidth"])

    def plant(self, log: EventLog | None = None, disturbance=None) -> Plant:
        return Plant(self.coefficients, particulars=self.particulars, env=self.env, mesh=self.mesh,
                     mesh_buoyancy=self.sim.mesh_buoyancy, log=log, disturbance=disturbance)

    def actuators(self) -> ActuatorState:
        return ActuatorState(rate_limit=self.rate_limit)

    def to_dict(self) -> dict:
        """Normalized document (SI units) that reloads to an identical configuration."""
        p = self.particulars
        g = self.autopilot
        doc = {
            "schema_version": SCHEMA_VERSION,
            "label": self.label,
            "vehicle": {
                "length": {"value": p.length, "unit": "m"},
                "beam": {"value": p.beam, "unit": "m"},
                "depth_to_sail_top": {"value": p.depth_to_sail_top, "unit": "m"},
                "displacement": {"value": p.displacement, "unit": "kg"},
                "xg_from_nose": {"value": p.xg_from_nose, "unit": "m"},
                "zg_below_axis": {"value": p.zg_below_axis, "unit": "m"},
                "gyration_radii": {"values": list(p.radii), "unit": "m"},
            },
            "coefficients": self.coefficients_file,
            "environment": {
                "rho": {"value": self.env.rho, "unit": "kg/m^3"},
                "g": {"value": self.env.g, "unit": "m/s^2"},
            },
            "wave": {
                "amplitude": {"value": self.wave["amplitude"], "unit": "m"},
                "wavelength": {"value": self.wave["wavelength"], "unit": "m"},
                "heading": {"value": self.wave["heading"], "unit": "rad"},
            },
            "autopilot": {
                "depth_weight": g.depth_weight, "pitch_weight": g.pitch_weight,
                "lateral_weight": g.lateral_weight, "yaw_weight": g.yaw_weight,
                "vertical": list(g.vertical), "horizontal": list(g.horizontal),
                "saturation": {"value": g.saturation, "unit": "rad"},
                "rate_limit": {"value": self.rate_limit, "unit": "rad/s"},
            },
            "pf": {
                "k_gamma": self.pf.k_gamma, "k_R": self.pf.k_R,
                "d": {"value": self.pf.d, "unit": "m"}, "c": self.pf.c,
                "c1": {"value": self.pf.c1, "unit": "m"}, "lambda": self.pf.lam,
                "delta_lambda": self.pf.delta_lam,
                "v_min": {"value": self.pf.v_min, "unit": "m/s"},
                "omega_c_max": {"value": self.pf.omega_c_max, "unit": "rad/s"},
            },
            "l1": {
                "omega_n": {"values": list(self.l1["omega_n"]), "unit": "rad/s"},
                "zeta": list(self.l1["zeta"]),
                "zero": {"values": list(self.l1["zero"]), "unit": "rad/s"},
                "bandwidth": {"value": self.l1["bandwidth"], "unit": "rad/s"},
                "T_s": {"value": self.l1["T_s"], "unit": "s"},
            },
            "rate_autopilot": {k: list(v) for k, v in self.rate_autopilot.items()},
            "sim": {
                "dt": {"value": self.sim.dt, "unit": "s"},
                "duration": {"value": self.sim.duration, "unit": "s"},
                "decimation": self.sim.decimation,
                "mesh_buoyancy": self.sim.mesh_buoyancy,
                "adaptation": self.sim.adaptation,
            },
            "scenario": {
                "speed": {"value": self.scenario["speed"], "unit": "m/s"},
                "depth": {"value": self.scenario["depth"], "unit": "m"},
            },
        }
        if self.pf.omega_T_max is not None:
            doc["pf"]["omega_T_max"] = {"value": self.pf.omega_T_max, "unit": "rad/s"}
        if self.mesh_file is not None:
            doc["mesh"] = self.mesh_file
        sc = self.scenario
        if sc.get("path_file") is not None:
            doc["scenario"]["path"] = sc["path_file"]
        if sc.get("pitch_moment", 0.0) != 0.0:
            doc["scenario"]["pitch_moment"] = {"value": sc["pitch_moment"], "unit": "N*m"}
        return doc


def _resolve(base: Path, ref, name) -> Path:
    if not isinstance(ref, str) or not ref:
        raise SchemaError(f"{name}: expected a file reference")
    p = (base / ref) if not Path(ref).is_absolute() else Path(ref)
    if not p.is_file():
        raise ConfigurationError(f"{name}: referenced file {ref!r} not found")
    return p


def config_from_dict(doc: dict, base_dir=".", log: EventLog | None = None) -> RuntimeConfig:
    """Parse a configuration document; file references resolve against ``base_dir``."""
    log = log if log is not None else EventLog()
    base = Path(base_dir)
    check_keys(doc, TOP_REQUIRED, TOP_OPTIONAL, "config")
    check_version(doc, "config")

    v = doc["vehicle"]
    check_keys(v, ["length", "beam", "depth_to_sail_top", "displacement", "xg_from_nose",
                   "zg_below_axis", "gyration_radii"], name="vehicle")
    L = units.LENGTH
    try:
        particulars = Particulars(
            length=units.quantity(v["length"], L, "length"),
            beam=units.quantity(v["beam"], L, "beam"),
            depth_to_sail_top=units.quantity(v["depth_to_sail_top"], L, "depth_to_sail_top"),
            displacement=units.quantity(v["displacement"], units.MASS, "displacement"),
            xg_from_nose=units.quantity(v["xg_from_nose"], L, "xg_from_nose"),
            zg_below_axis=units.quantity(v["zg_below_axis"], L, "zg_below_axis"),
            radii=tuple(units.axis(v["gyration_radii"], L, "gyration_radii")),
        )
    except ValueError as exc:
        raise ConfigurationError(f"vehicle: {exc}") from None

    coeff_file = doc["coefficients"]
    coeffs = load_coefficients(_resolve(base, coeff_file, "coefficients"), log)

    mesh_file = doc.get("mesh")
    mesh = read_ascii_stl(_resolve(base, mesh_file, "mesh"), log) if mesh_file is not None else None

    e = doc["environment"]
    check_keys(e, ["rho", "g"], name="environment")
    rho = units.quantity(e["rho"], units.DENSITY, "rho")
    grav = units.quantity(e["g"], units.ACCEL, "g")
    if not (rho > 0 and grav > 0):
        raise ConfigurationError("rho and g must be positive")

    w = doc["wave"]
    check_keys(w, ["amplitude", "wavelength"], ["heading"], "wave")
    wave = {
        "amplitude": units.quantity(w["amplitude"], L, "wave amplitude"),
        "wavelength": units.quantity(w["wavelength"], L, "wavelength"),
        "heading": units.quantity(w.get("heading", {"value": 0.0, "unit": "rad"}), units.ANGLE,
                                  "wave heading"),
    }
    try:
        wf = WaveField.deep_water(wave["amplitude"], wavelength=wave["wavelength"],
                                  heading=wave["heading"], rho=rho, g=grav)
    except ValueError as exc:
        raise ConfigurationError(f"wave: {exc}") from None
    env = Environment(rho, grav, wf)

    a = doc["autopilot"]
    check_keys(a, ["depth_weight", "pitch_weight", "lateral_weight", "yaw_weight", "vertical",
                   "horizontal", "saturation", "rate_limit"], name="autopilot")
    gains = AutopilotGains(
        depth_weight=_num(a["depth_weight"], "depth_weight"),
        pitch_weight=_num(a["pitch_weight"], "pitch_weight"),
        lateral_weight=_num(a["lateral_weight"], "lateral_weight"),
        yaw_weight=_num(a["yaw_weight"], "yaw_weight"),
        vertical=_triple(a["vertical"], "autopilot.vertical"),
        horizontal=_triple(a["horizontal"], "autopilot.horizontal"),
        saturation=units.quantity(a["saturation"], units.ANGLE, "saturation"),
    )
    rate_limit = units.quantity(a["rate_limit"], units.RATE, "rate_limit")
    if not rate_limit > 0:
        raise ConfigurationError("rate_limit must be positive")

    p = doc["pf"]
    check_keys(p, ["k_gamma", "k_R", "d", "c", "c1", "lambda", "delta_lambda", "v_min",
                   "omega_c_max"], ["omega_T_max"], "pf")
    pf = PFConfig(
        k_gamma=_num(p["k_gamma"], "k_gamma"), k_R=_num(p["k_R"], "k_R"),
        d=units.quantity(p["d"], L, "d"), c=_num(p["c"], "c"),
        c1=units.quantity(p["c1"], L, "c1"), lam=_num(p["lambda"], "lambda"),
        delta_lam=_num(p["delta_lambda"], "delta_lambda"),
        v_min=units.quantity(p["v_min"], units.SPEED, "v_min"),
        omega_c_max=units.quantity(p["omega_c_max"], units.RATE, "omega_c_max"),
        omega_T_max=(units.quantity(p["omega_T_max"], units.RATE, "omega_T_max")
                     if "omega_T_max" in p else None),
    )

    l1 = doc["l1"]
    check_keys(l1, ["omega_n", "zeta", "zero", "bandwidth", "T_s"], name="l1")
    l1p = {
        "omega_n": units.axis(l1["omega_n"], units.RATE, "omega_n"),
        "zeta": [_num(z, "zeta") for z in l1["zeta"]],
        "zero": units.axis(l1["zero"], units.RATE, "zero"),
        "bandwidth": units.quantity(l1["bandwidth"], units.RATE, "bandwidth"),
        "T_s": units.quantity(l1["T_s"], units.TIME, "T_s"),
    }
    for key in ("omega_n", "zeta", "zero"):
        if len(l1p[key]) != 2:
            raise SchemaError(f"l1.{key}: expected two channels")

    r = doc["rate_autopilot"]
    check_keys(r, ["pitch", "yaw"], name="rate_autopilot")
    rate_ap = {"pitch": _triple(r["pitch"], "rate_autopilot.pitch"),
               "yaw": _triple(r["yaw"], "rate_autopilot.yaw")}

    s = doc["sim"]
    check_keys(s, ["dt", "duration"], ["decimation", "mesh_buoyancy", "adaptation",
                                       "frozen_controls"], "sim")
    dec = s.get("decimation", 1)
    if isinstance(dec, bool) or not isinstance(dec, int):
        raise SchemaError("sim.decimation: expected an integer")
    sim = SimConfig(
        dt=units.quantity(s["dt"], units.TIME, "dt"),
        duration=units.quantity(s["duration"], units.TIME, "duration"),
        decimation=dec,
        mesh_buoyancy=_flag(s.get("mesh_buoyancy", False), "mesh_buoyancy"),
        adaptation=_flag(s.get("adaptation", False), "adaptation"),
        frozen_controls=_flag(s.get("frozen_controls", False), "frozen_controls"),
    )
    if sim.mesh_buoyancy and mesh is None:
        raise ConfigurationError("sim.mesh_buoyancy requires a mesh reference")
    if wave["amplitude"] > 0 and not sim.mesh_buoyancy:
        raise ConfigurationError("wave loads need sim.mesh_buoyancy = true")

    sc = doc["scenario"]
    check_keys(sc, ["speed", "depth"], ["path", "pitch_moment"], "scenario")
    scenario = {
        "speed": units.quantity(sc["speed"], units.SPEED, "scenario speed"),
        "depth": units.quantity(sc["depth"], L, "scenario depth"),
        "path_file": sc.get("path"),
        "pitch_moment": units.quantity(sc.get("pitch_moment", {"value": 0.0, "unit": "N*m"}),
                                       units.MOMENT, "pitch_moment"),
    }
    path = None
    if scenario["path_file"] is not None:
        path = load_path(_resolve(base, scenario["path_file"], "scenario.path"), log)

    return RuntimeConfig(particulars, coeffs, coeff_file, env, wave, gains, rate_limit, pf, l1p,
                         rate_ap, sim, scenario, mesh, mesh_file, path, base, doc.get("label", ""),
                         log)


def load_config(path, log: EventLog | None = None) -> RuntimeConfig:
    path = Path(path)
    return config_from_dict(read_json(path), path.parent, log)


@dataclass
class AuditReport:
    lines: list
    events: EventLog

    @property
    def warnings(self) -> list[str]:
        return self.events.codes()

    def text(self) -> str:
        out = list(self.lines)
        out += [f"[{e['code']}] {e['message']}" for e in self.events.to_list()]
        return "\n".join(out)


def _speed_ceiling(cs: CoefficientSet) -> float:
    hi = cs.hull.speed_range()[1]
    if isinstance(cs.surfaces, ControlSurfaceTable):
        hi = min(hi, min(t.bounds(1)[1] for chans in cs.surfaces.surfaces for t in chans))
    return min(hi, cs.propeller.t_table.bounds(0)[1])


def audit(cfg: RuntimeConfig) -> AuditReport:
    """Cross-check coverage, controller designs and trim before any run.

    Coverage problems are warnings; infeasible designs and an emerged
    start raise.
    """
    log = cfg.events
    lines = []
    cs = cfg.coefficients
    U, depth = cfg.scenario["speed"], cfg.scenario["depth"]
    U_lo = cs.hull.speed_range()[0]
    U_hi = _speed_ceiling(cs)
    if U > U_hi * (1 + 1e-9) or U < U_lo * (1 - 1e-9):
        record(log, "W_OUT_OF_RANGE",
               f"scenario speed {U / units.KNOT:.2f} kn is outside the range of the model "
               f"({U_lo / units.KNOT:.2f} to {U_hi / units.KNOT:.2f} kn)")
    D0 = cfg.particulars.sail_top_depth(depth)
    if D0 <= 0:
        raise EmergenceError(f"scenario depth {depth} m puts the sail top above the surface")
    D_lo = cs.hull.depth_range()[0]
    if D0 <= D_lo:
        record(log, "W_SHALLOW",
               f"sail-top depth {D0:.2f} m at or below {D_lo:.2f} m where table data are unreliable")
    lines.append(f"coverage: U={U:.3f} m/s, D0={D0:.2f} m")

    issues = cfg.pf.audit(cfg.path, U)
    if issues:
        raise DesignError("path-following parameters infeasible: " + "; ".join(issues))
    lines.append("path following: parameter inequalities hold")

    ctl = cfg.l1_controller()
    check_sample_time(ctl.T_s, cfg.sim.dt)
    lines.append(f"L1: desired model order {ctl.desired.n}, filter order {ctl.filt.order}, "
                 f"T_s={ctl.T_s} s")

    if cfg.mesh is not None:
        lines.append(f"mesh: {cfg.mesh.n_elements} triangles, closure residual "
                     f"{cfg.mesh.closure_residual():.3g}, volume {cfg.mesh.volume():.1f} m^3")

    plant = cfg.plant(log=None)
    tr = trim(plant, U, depth)
    lines.append(f"trim: n={tr.n:.4f} rev/s, J={tr.J:.3f}, residual {tr.residual:.2e} N")
    return AuditReport(lines, log)


def load_and_audit(path, log: EventLog | None = None):
    cfg = load_config(path, log)
    return cfg, audit(cfg)
