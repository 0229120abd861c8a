"""Command-line entry points.

Every run audits the configuration first, then writes ``<kind>.csv`` and
``<kind>_metrics.json`` into the output directory. Failures print
``[CODE] message`` on stderr and exit with a category-specific status.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import units
from .events import Bb2RomError, EventLog
from .hydro_model import CHANNELS, ControlSurfaceTable
from .samples import DATA_DIR
from .simulator import (
    FollowSetup,
    follow,
    metrics,
    roll_decay,
    trim,
    turn,
    write_metrics,
    zigzag,
)
from .wave_hydrostatics import read_ascii_stl

DEFAULT_CONFIG = DATA_DIR / "sample_config.json"

EXIT_CODES = {
    "E_CONFIG": 3, "E_SCHEMA": 3, "E_TABLE": 3,
    "E_MESH_OPEN": 4, "E_MESH_INDEX": 4,
    "E_DESIGN": 5, "E_DEGENERATE_PATH": 5, "E_TRIM": 5,
    "E_EMERGED": 6, "E_SINGULAR": 6, "E_DIVERGED": 6,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bb2rom", description="Reduced-order submarine maneuvering simulator.")
    sub = p.add_subparsers(dest="command")

    def scenario(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", default=str(DEFAULT_CONFIG), help="scenario configuration (JSON)")
        s.add_argument("--out", default="bb2rom_out", help="output directory")
        s.add_argument("--duration", type=float, help="override sim duration [s]")
        s.add_argument("--speed", type=float, help="override scenario speed [m/s]")
        s.add_argument("--depth", type=float, help="override scenario depth [m]")
        return s

    t = scenario("trim", "propeller speed for straight-ahead equilibrium")
    t.set_defaults(func=cmd_trim)
    r = scenario("roll-decay", "release from an initial heel")
    r.add_argument("--phi0", type=float, default=10.0, help="initial heel [deg]")
    r.set_defaults(func=cmd_roll)
    tu = scenario("turn", "fixed horizontal command with depth keeping")
    tu.add_argument("--delta-h", type=float, default=10.0, help="horizontal command [deg]")
    tu.set_defaults(func=cmd_turn)
    z = scenario("zigzag", "vertical or horizontal zigzag at constant propeller speed")
    z.add_argument("--axis", choices=["vertical", "horizontal"], default="vertical")
    z.add_argument("--deflection", type=float, default=10.0, help="[deg]")
    z.add_argument("--switch-angle", type=float, default=10.0, help="[deg]")
    z.set_defaults(func=cmd_zigzag)
    f = scenario("follow", "path following with optional L1 augmentation")
    f.add_argument("--path", help="Bernstein path file (defaults to the config's path)")
    f.add_argument("--adaptation", choices=["on", "off"], default="off")
    f.add_argument("--pitch-moment", type=float, default=None,
                   help="constant pitch-moment disturbance [N*m]")
    f.set_defaults(func=cmd_follow)

    m = sub.add_parser("validate-mesh", help="check an ASCII STL hull mesh")
    m.add_argument("mesh")
    m.set_defaults(func=cmd_validate_mesh)

    ic = sub.add_parser("inspect-coeffs", help="dump an interpolated coefficient slice as CSV")
    ic.add_argument("--config", default=str(DEFAULT_CONFIG))
    ic.add_argument("--coefficients", help="coefficient file (defaults to the config's)")
    ic.add_argument("--table", choices=["resistance", "beta", "alpha", "plane", "thrust-deduction"],
                    default="beta")
    ic.add_argument("--channel", choices=list(CHANNELS), default="Y")
    ic.add_argument("--plane", type=int, default=1, help="plane number 1..5")
    ic.add_argument("--speed", type=float, default=10.0, help="[kn]")
    ic.add_argument("--depth", type=float, default=25.0, help="sail-top depth [m]")
    ic.add_argument("--points", type=int, default=61)
    ic.add_argument("--output", help="CSV path (stdout when omitted)")
    ic.set_defaults(func=cmd_inspect)
    return p


# --------------------------------------------------------------------------


def _load(args):
    from .config import audit, load_config

    cfg = load_config(args.config)
    if getattr(args, "speed", None) is not None:
        cfg.scenario["speed"] = args.speed
    if getattr(args, "depth", None) is not None:
        cfg.scenario["depth"] = args.depth
    if getattr(args, "duration", None) is not None:
        cfg.sim = replace(cfg.sim, duration=args.duration)
    report = audit(cfg)
    print(report.text(), file=sys.stderr)
    return cfg


def _emit(log, args, kind):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = metrics(log)
    log.to_csv(out / f"{kind}.csv")
    write_metrics(m, out / f"{kind}_metrics.json")
    print(json.dumps({"log": str(out / f"{kind}.csv"), "metrics": str(out / f"{kind}_metrics.json"),
                      "events": log.events.codes()}))
    return 0


def cmd_trim(args):
    cfg = _load(args)
    tr = trim(cfg.plant(), cfg.scenario["speed"], cfg.scenario["depth"])
    print(json.dumps({"n": tr.n, "speed": tr.speed, "depth": tr.depth, "J": tr.J,
                      "thrust": tr.thrust, "thrust_deduction": tr.t, "residual": tr.residual}))
    return 0


def cmd_roll(args):
    cfg = _load(args)
    plant = cfg.plant(EventLog())
    log = roll_decay(plant, math.radians(args.phi0), cfg.scenario["speed"], cfg.scenario["depth"],
                     cfg.sim)
    return _emit(log, args, "roll_decay")


def cmd_turn(args):
    cfg = _load(args)
    plant = cfg.plant(EventLog())
    log = turn(plant, math.radians(args.delta_h), cfg.scenario["speed"], cfg.scenario["depth"],
               cfg.sim, cfg.autopilot)
    return _emit(log, args, "turn")


def cmd_zigzag(args):
    cfg = _load(args)
    plant = cfg.plant(EventLog())
    gains = cfg.autopilot if args.axis == "horizontal" else None
    log = zigzag(plant, args.axis, math.radians(args.deflection), math.radians(args.switch_angle),
                 cfg.scenario["speed"], cfg.scenario["depth"], cfg.sim, gains)
    return _emit(log, args, "vzz" if args.axis == "vertical" else "hzz")


def cmd_follow(args):
    from .fileio import load_path, read_json, terrain_from_dict

    cfg = _load(args)
    events = EventLog()
    terrain = None
    if args.path:
        path = load_path(args.path, events)
        terrain = terrain_from_dict(read_json(args.path))
        issues = cfg.pf.audit(path, cfg.scenario["speed"])
        if issues:
            from .events import DesignError
            raise DesignError("path-following parameters infeasible: " + "; ".join(issues))
    else:
        path = cfg.path
        if path is None:
            raise Bb2RomError("follow needs --path or scenario.path in the config", code="E_CONFIG")
        terrain = terrain_from_dict(read_json(cfg.base_dir / cfg.scenario["path_file"]))
    moment = cfg.scenario.get("pitch_moment", 0.0) if args.pitch_moment is None else args.pitch_moment
    plant = cfg.plant(events, disturbance=[0.0, 0.0, 0.0, 0.0, moment, 0.0])
    on = args.adaptation == "on"
    setup = FollowSetup(path, cfg.pf, cfg.rate_autopilot, cfg.l1_controller() if on else None,
                        cfg.scenario["speed"], cfg.scenario["depth"], terrain)
    sim = replace(cfg.sim, adaptation=on,
                  duration=args.duration if args.duration is not None else 1.2 * path.T_f)
    log = follow(plant, setup, sim)
    return _emit(log, args, f"follow_{args.adaptation}")


def cmd_validate_mesh(args):
    mesh = read_ascii_stl(args.mesh, EventLog())
    print(json.dumps({
        "triangles": mesh.n_elements,
        "closure_residual": mesh.closure_residual(),
        "volume": mesh.volume(),
        "centroid": [float(c) for c in mesh.centroid()],
        "area": float(mesh.total_area),
    }))
    return 0


def _inspect_rows(cs, args):
    U = args.speed * units.KNOT
    D = args.depth
    n = max(2, args.points)
    ch = CHANNELS.index(args.channel)
    h = cs.hull
    if args.table == "resistance":
        lo, hi = h.speed_range()
        xs = np.linspace(lo, hi, n)
        return ("speed [kn]", "R0 [-]"), [(x / units.KNOT, h.resistance(x, D)) for x in xs]
    if args.table == "beta":
        xs = np.linspace(0.0, h.beta_max(), n)
        return ("beta [deg]", f"{args.channel} [-]"), [
            (math.degrees(x), h.beta_tables[ch](U, x, D)) for x in xs]
    if args.table == "alpha":
        lo, hi = h.alpha_range()
        xs = np.linspace(lo, hi, n)
        return ("alpha [deg]", f"{args.channel} [-]"), [
            (math.degrees(x), h.alpha_tables[ch](U, x, D)) for x in xs]
    if args.table == "plane":
        if not isinstance(cs.surfaces, ControlSurfaceTable):
            raise Bb2RomError("plane slices need tabulated control surfaces", code="E_CONFIG")
        if not 1 <= args.plane <= len(cs.surfaces.surfaces):
            raise Bb2RomError(f"plane must be 1..{len(cs.surfaces.surfaces)}", code="E_CONFIG")
        tab = cs.surfaces.surfaces[args.plane - 1][ch]
        lo, hi = tab.bounds(0)
        xs = np.linspace(lo, hi, n)
        return ("deflection [deg]", f"{args.channel} [-]"), [(math.degrees(x), tab(x, U, D)) for x in xs]
    t = cs.propeller.t_table
    lo, hi = t.bounds(1)
    xs = np.linspace(lo, hi, n)
    return ("depth [m]", "t [-]"), [(x, t(U, x)) for x in xs]


def cmd_inspect(args):
    from .config import load_config
    from .fileio import load_coefficients

    if args.coefficients:
        cs = load_coefficients(args.coefficients)
    else:
        cs = load_config(args.config).coefficients
    header, rows = _inspect_rows(cs, args)
    fh = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in rows:
            w.writerow([format(a, ".10g"), format(b, ".10g")])
    finally:
        if args.output:
            fh.close()
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except Bb2RomError as exc:
        print(str(exc), file=sys.stderr)
        if exc.context:
            print(json.dumps({"code": exc.code, "context": exc.context}, default=str), file=sys.stderr)
        return EXIT_CODES.get(exc.code, 1)
    except ValueError as exc:
        print(f"[E_CONFIG] {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
