"""Fixed-step simulation of the vehicle with actuators and controllers.

The combined state is ``[x, y, z, phi, theta, psi, u, v, w, p, q, r]``.
Controls are held constant over each step (zero-order hold) and actuator
rate limits are applied once per step before the RK4 stages.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize

from .actuation import (
    ActuatorState,
    Autopilot,
    AutopilotGains,
    RateAutopilot,
    ZigzagScheduler,
    actuator_update,
    allocate,
)
from .events import (
    ConfigurationError,
    DivergenceError,
    EmergenceError,
    EventLog,
    TrimError,
    record,
)
from .guidance import PathFollower, PFConfig, composite_error
from .hydro_model import CoefficientSet, FlowState, propeller_state, total_hydrodynamic
from .l1_adaptive import L1Controller
from .path_geometry import BernsteinPath, skew
from .rigid_body import (
    MassProperties,
    VehicleState,
    build_mass_matrix,
    coupling_acceleration_matrix,
    coupling_velocity_terms,
    euler_kinematics,
    hydrostatic_potential,
    hydrostatic_restoring,
    rotation_matrix,
    wrap_angle,
)
from .vehicle import FULL_SCALE, Particulars
from .wave_hydrostatics import HullMesh, WaveField, integrate_pressure_loads

DEG = math.pi / 180.0


@dataclass(frozen=True)
class Environment:
    rho: float = 1025.0
    g: float = 9.81
    wave: WaveField | None = None


@dataclass
class SimConfig:
    dt: float = 0.05
    duration: float = 100.0
    decimation: int = 1
    mesh_buoyancy: bool = False
    adaptation: bool = False
    frozen_controls: bool = False
    log_breakdown: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.duration >= self.dt:
            raise ConfigurationError("duration must be at least one step")
        if int(self.decimation) < 1:
            raise ConfigurationError("decimation must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def check_sample_time(T_s: float, dt: float, tol: float = 1e-9) -> None:
    """``T_s`` must be an integer multiple or an integer divisor of ``dt``."""
    r = T_s / dt
    if abs(r - round(r)) > tol * max(1.0, r) and abs(1 / r - round(1 / r)) > tol * max(1.0, 1 / r):
        raise ConfigurationError(f"L1 sample time {T_s} is neither a multiple nor a divisor of dt={dt}")


# --------------------------------------------------------------------------
# Plant


class Plant:
    """Right-hand side of the equations of motion for one vehicle."""

    def __init__(self, coeffs: CoefficientSet, mass: MassProperties | None = None,
                 particulars: Particulars = FULL_SCALE, env: Environment = Environment(),
                 mesh: HullMesh | None = None, mesh_buoyancy: bool = False,
                 log: EventLog | None = None, disturbance=None):
        self.coeffs = coeffs
        self.particulars = particulars
        self.env = env
        self.mesh = mesh
        self.mesh_buoyancy = bool(mesh_buoyancy)
        if self.mesh_buoyancy and mesh is None:
            raise ConfigurationError("mesh buoyancy requested without a mesh")
        self.mass = mass if mass is not None else particulars.mass_properties(g=env.g)
        self.log = log
        self.disturbance = np.zeros(6) if disturbance is None else np.asarray(disturbance, float)
        M = build_mass_matrix(self.mass)
        A = coeffs.motion.added_mass(coeffs.L, env.rho)
        self.M_total = M - A + coupling_acceleration_matrix(self.mass)
        try:
            self._lu = linalg.lu_factor(self.M_total, check_finite=True)
        except (ValueError, linalg.LinAlgError) as exc:
            raise ConfigurationError(f"total mass matrix cannot be factorized: {exc}") from None
        if np.linalg.cond(self.M_total) > 1e14:
            raise ConfigurationError("total mass matrix is singular")
        self.wave = (env.wave if env.wave is not None
                     else WaveField.deep_water(0.0, wavelength=100.0, rho=env.rho, g=env.g))

    def sail_top_depth(self, z: float, phi: float, theta: float) -> float:
        return z - self.particulars.sail_height_above_axis * math.cos(theta) * math.cos(phi)

    def loads(self, t: float, x, deflections, n: float):
        """Return ``(rhs, parts)`` where ``parts`` holds the force breakdown."""
        s = x[6:12]
        phi, theta = x[3], x[4]
        D0 = self.sail_top_depth(x[2], phi, theta)
        flow = FlowState.from_velocity(s, D0)
        F_h, _, parts = total_hydrodynamic(s, flow, deflections, n, self.coeffs, self.env.rho, self.log)
        if self.mesh_buoyancy:
            F_b = hydrostatic_restoring(self.mass, phi, theta, weight_only=True)
            F_w = integrate_pressure_loads(self.mesh, VehicleState(x[0:3], x[3:6], s), self.wave, t)
        else:
            if x[2] < 0.5 * self.particulars.beam:
                raise EmergenceError(f"hull axis depth {x[2]:.3f} m breaches the surface",
                                     context={"state": list(map(float, x))})
            F_b = hydrostatic_restoring(self.mass, phi, theta)
            F_w = np.zeros(6)
        b = coupling_velocity_terms(self.mass, s)
        rhs = F_b + F_w + F_h - b + self.disturbance
        return rhs, {"hydrostatic": F_b, "wave": F_w, "hull": parts.hull, "motion": parts.motion,
                     "surfaces": parts.surfaces, "propeller": parts.propeller, "D0": D0, "U": flow.U}

    def derivative(self, t: float, x, deflections, n: float) -> np.ndarray:
        rhs, _ = self.loads(t, x, deflections, n)
        sdot = linalg.lu_solve(self._lu, rhs)
        state = VehicleState(x[0:3], x[3:6], x[6:12])
        pos_rate, att_rate = euler_kinematics(state)
        return np.concatenate([pos_rate, att_rate, sdot])

    def kinetic_energy(self, x) -> float:
        s = np.asarray(x[6:12])
        Ms = 0.5 * (self.M_total + self.M_total.T)
        return 0.5 * float(s @ Ms @ s)

    def energy(self, x) -> float:
        """Kinetic plus restoring potential energy (neutral buoyancy)."""
        return self.kinetic_energy(x) + hydrostatic_potential(self.mass, x[3], x[4])


def derivative(plant: Plant, t: float, x, deflections, n: float) -> np.ndarray:
    return plant.derivative(t, x, deflections, n)


def step_rk4(plant: Plant, t: float, x, deflections, n: float, dt: float) -> np.ndarray:
    """Classical RK4 with controls held over the step."""
    x = np.asarray(x, dtype=float)
    k1 = plant.derivative(t, x, deflections, n)
    k2 = plant.derivative(t + 0.5 * dt, x + 0.5 * dt * k1, deflections, n)
    k3 = plant.derivative(t + 0.5 * dt, x + 0.5 * dt * k2, deflections, n)
    k4 = plant.derivative(t + dt, x + dt * k3, deflections, n)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_new)):
        raise DivergenceError(f"non-finite state at t={t + dt:.4f}",
                              context={"t": t, "state": list(map(float, x))})
    return x_new


# --------------------------------------------------------------------------
# Trajectory log

STATE_COLUMNS = [("x", "m"), ("y", "m"), ("z", "m"), ("phi", "rad"), ("theta", "rad"),
                 ("psi", "rad"), ("u", "m/s"), ("v", "m/s"), ("w", "m/s"), ("p", "rad/s"),
                 ("q", "rad/s"), ("r", "rad/s")]
BASE_COLUMNS = ([("t", "s")] + STATE_COLUMNS
                + [(f"delta{k}", "rad") for k in range(1, 6)]
                + [("delta_V", "rad"), ("delta_H", "rad"), ("q_c", "rad/s"), ("r_c", "rad/s"),
                   ("n", "rev/s"), ("D0", "m"), ("U", "m/s")])
_FORCE_UNITS = ["N", "N", "N", "N*m", "N*m", "N*m"]
BREAKDOWN_COLUMNS = [(f"{part}_{c}", u) for part in
                     ("hydrostatic", "wave", "hull", "motion", "surfaces", "propeller")
                     for c, u in zip("XYZKMN", _FORCE_UNITS)]
PF_COLUMNS = [("gamma", "s"), ("pT1", "m"), ("pT2", "m"), ("pT3", "m"), ("Psi", "1"),
              ("V_pf", "1"), ("rate_sat", "1"), ("u_ad_q", "rad/s"), ("u_ad_r", "rad/s")]


@dataclass
class TrajectoryLog:
    columns: list
    units: list
    rows: list = field(default_factory=list)
    events: EventLog = field(default_factory=EventLog)
    meta: dict = field(default_factory=dict)

    def append(self, row) -> None:
        if len(row) != len(self.columns):
            raise ValueError("row length does not match columns")
        self.rows.append([float(v) for v in row])

    @property
    def data(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))

    def __getitem__(self, name) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.rows)

    def has(self, name) -> bool:
        return name in self.columns

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([f"{c} [{u}]" for c, u in zip(self.columns, self.units)])
            for row in self.rows:
                w.writerow([format(v, ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r)
            cols, units = [], []
            for h in header:
                name, _, unit = h.partition(" [")
                cols.append(name)
                units.append(unit.rstrip("]"))
            log = cls(cols, units)
            for row in r:
                log.rows.append([float(v) for v in row])
        return log


def _new_log(pf: bool, breakdown: bool, events: EventLog) -> TrajectoryLog:
    cols = BASE_COLUMNS + (BREAKDOWN_COLUMNS if breakdown else []) + (PF_COLUMNS if pf else [])
    return TrajectoryLog([c for c, _ in cols], [u for _, u in cols], events=events)


# --------------------------------------------------------------------------
# Trim


@dataclass(frozen=True)
class TrimResult:
    n: float
    speed: float
    depth: float
    J: float
    thrust: float
    t: float
    residual: float


def surge_balance(plant: Plant, speed: float, depth: float, n: float) -> float:
    x = np.zeros(12)
    x[2] = depth
    x[6] = speed
    rhs, _ = plant.loads(0.0, x, np.zeros(5), n)
    return float(rhs[0])


def trim(plant: Plant, speed: float, depth: float, bracket=(0.1, 20.0), tol: float = 1e-6) -> TrimResult:
    """Propeller speed giving zero net surge force at even keel."""
    f = lambda n: surge_balance(plant, speed, depth, n)  # noqa: E731
    lo, hi = bracket
    # Bracket probes sit far outside the fitted J range; keep them out of the event log.
    saved, plant.log = plant.log, None
    try:
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0:
            raise TrimError(f"no sign change of surge force on n in [{lo}, {hi}] rev/s",
                            context={"f_lo": flo, "f_hi": fhi, "speed": speed, "depth": depth})
        n = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    finally:
        plant.log = saved
    res = f(n)
    if abs(res) > tol:
        # Fall back to plain bisection refinement around the Brent root.
        a, b = max(lo, n - 1e-9), min(hi, n + 1e-9)
        for _ in range(200):
            m = 0.5 * (a + b)
            if f(a) * f(m) <= 0:
                b = m
            else:
                a = m
        n = 0.5 * (a + b)
        res = f(n)
    x = np.zeros(12)
    x[2], x[6] = depth, speed
    D0 = plant.sail_top_depth(depth, 0.0, 0.0)
    ps = propeller_state(speed, n, FlowState.from_velocity(x[6:12], D0), plant.coeffs.propeller,
                         plant.env.rho)
    return TrimResult(n, speed, depth, ps.J, ps.thrust, ps.t, res)


# --------------------------------------------------------------------------
# Generic runner


@dataclass
class Controls:
    delta_V: float = 0.0
    delta_H: float = 0.0
    q_c: float = float("nan")
    r_c: float = float("nan")
    pf: tuple = ()


def initial_state(depth: float, speed: float, attitude=(0.0, 0.0, 0.0), position=None,
                  velocity=None) -> np.ndarray:
    x = np.zeros(12)
    if position is not None:
        x[0:3] = position
    x[2] = depth if position is None else x[2]
    x[3:6] = attitude
    x[6] = speed
    if velocity is not None:
        x[6:12] = velocity
    return x


def run(plant: Plant, x0, n: float, controller, cfg: SimConfig, pf: bool = False,
        actuators: ActuatorState | None = None, substeps: int = 1, stop=None) -> TrajectoryLog:
    """Integrate from ``x0``; ``controller(t, x, act) -> Controls`` runs once per step.

    ``substeps`` splits each control step into that many RK4 steps with the
    same held deflections.
    """
    events = plant.log if plant.log is not None else EventLog()
    plant.log = events
    log = _new_log(pf, cfg.log_breakdown, events)
    act = actuators if actuators is not None else ActuatorState()
    x = np.asarray(x0, dtype=float).copy()
    dt = cfg.dt
    h = dt / substeps
    t = 0.0
    for k in range(cfg.n_steps + 1):
        events.time = t
        ctl = controller(t, x, act) if not cfg.frozen_controls else Controls()
        if k % cfg.decimation == 0 or k == cfg.n_steps:
            _log_row(log, plant, t, x, act, ctl, n, cfg.log_breakdown, pf)
        if k == cfg.n_steps or (stop is not None and stop(t, x)):
            break
        act = actuator_update(act, allocate(ctl.delta_V, ctl.delta_H), dt)
        for _ in range(substeps):
            x = step_rk4(plant, t, x, act.deflections, n, h)
            t += h
        x[3] = wrap_angle(x[3])
        x[5] = wrap_angle(x[5])
        t = (k + 1) * dt
    log.meta["dt"] = dt
    return log


def _log_row(log, plant, t, x, act, ctl, n, breakdown, pf):
    _, parts = plant.loads(t, x, act.deflections, n)
    row = [t, *x, *act.deflections, ctl.delta_V, ctl.delta_H, ctl.q_c, ctl.r_c, n,
           parts["D0"], parts["U"]]
    if breakdown:
        for key in ("hydrostatic", "wave", "hull", "motion", "surfaces", "propeller"):
            row.extend(parts[key])
    if pf:
        row.extend(ctl.pf if ctl.pf else [float("nan")] * len(PF_COLUMNS))
    log.append(row)


# --------------------------------------------------------------------------
# Scenarios


def roll_decay(plant: Plant, phi0: float = 10 * DEG, speed: float = 3.0, depth: float = 100.0,
               cfg: SimConfig | None = None, n: float | None = None) -> TrajectoryLog:
    """Release from an initial heel with planes neutral at the trim propeller speed."""
    cfg = cfg or SimConfig(duration=60.0)
    n = trim(plant, speed, depth).n if n is None else n
    x0 = initial_state(depth, speed, attitude=(phi0, 0.0, 0.0))
    log = run(plant, x0, n, lambda t, x, a: Controls(), cfg)
    log.meta.update(kind="roll_decay", n=n, phi0=phi0)
    return log


def turn(plant: Plant, delta_H: float = 10 * DEG, speed: float = 4.0, depth: float = 100.0,
         cfg: SimConfig | None = None, gains: AutopilotGains | None = None,
         n: float | None = None) -> TrajectoryLog:
    """Fixed horizontal command with an optional depth-keeping vertical channel."""
    cfg = cfg or SimConfig(duration=400.0)
    n = trim(plant, speed, depth).n if n is None else n
    ap = Autopilot(gains) if gains is not None else None
    targets = {"depth": depth, "pitch": 0.0}

    def controller(t, x, act):
        dV = 0.0
        if ap is not None:
            dV = ap.vertical.step(ap.errors(VehicleState(x[0:3], x[3:6], x[6:12]), targets)[0], cfg.dt)
        return Controls(delta_V=dV, delta_H=delta_H)

    log = run(plant, initial_state(depth, speed), n, controller, cfg)
    log.meta.update(kind="turn", n=n, delta_H=delta_H)
    return log


def zigzag(plant: Plant, axis: str = "vertical", deflection: float = 10 * DEG,
           switch_angle: float = 10 * DEG, speed: float = 4.0, depth: float = 150.0,
           cfg: SimConfig | None = None, gains: AutopilotGains | None = None,
           initial_sign: float = -1.0, x0=None, n: float | None = None) -> TrajectoryLog:
    """Vertical (pitch) or horizontal (yaw) zigzag at constant propeller speed.

    The other channel is driven by ``gains`` when given (depth keeping during
    a horizontal zigzag), otherwise held at zero.
    """
    cfg = cfg or SimConfig(duration=200.0)
    n = trim(plant, speed, depth).n if n is None else n
    sched = ZigzagScheduler(deflection, switch_angle, axis, initial_sign)
    ap = Autopilot(gains) if gains is not None else None
    x0 = initial_state(depth, speed) if x0 is None else np.asarray(x0, float)
    psi0 = float(x0[5])
    targets = {"depth": float(x0[2]), "pitch": 0.0, "yaw": psi0}

    def controller(t, x, act):
        st = VehicleState(x[0:3], x[3:6], x[6:12])
        if axis == "vertical":
            dV = sched.command(x[4], t)
            dH = ap.horizontal.step(ap.errors(st, targets)[1], cfg.dt) if ap is not None else 0.0
        else:
            dH = sched.command(wrap_angle(x[5] - psi0), t)
            dV = ap.vertical.step(ap.errors(st, targets)[0], cfg.dt) if ap is not None else 0.0
        return Controls(delta_V=dV, delta_H=dH)

    log = run(plant, x0, n, controller, cfg)
    log.meta.update(kind="vzz" if axis == "vertical" else "hzz", n=n, axis=axis,
                    deflection=deflection, switch_angle=switch_angle,
                    switches=[list(s) for s in sched.switches])
    return log


@dataclass
class FollowSetup:
    path: BernsteinPath
    pf: PFConfig
    rate_gains: dict = field(default_factory=lambda: {"pitch": (40.0, 0.0, 0.0), "yaw": (40.0, 0.0, 0.0)})
    l1: L1Controller | None = None
    speed: float = 4.0
    trim_depth: float = 50.0
    terrain: tuple | None = None


def follow(plant: Plant, setup: FollowSetup, cfg: SimConfig | None = None,
           n: float | None = None, x0=None) -> TrajectoryLog:
    """Path following: outer guidance loop, optional L1 augmentation, rate autopilot.

    When adaptation is on and the L1 sample time is shorter than ``dt``, the
    whole loop runs at ``T_s``.
    """
    cfg = cfg or SimConfig(duration=setup.path.T_f)
    path = setup.path
    n = trim(plant, setup.speed, setup.trim_depth).n if n is None else n
    l1 = setup.l1 if cfg.adaptation else None
    if l1 is not None:
        check_sample_time(l1.T_s, cfg.dt)
        if l1.T_s < cfg.dt:
            ratio = int(round(cfg.dt / l1.T_s))
            cfg = replace(cfg, dt=l1.T_s, duration=cfg.duration,
                          decimation=cfg.decimation * ratio)
        every = max(1, int(round(l1.T_s / cfg.dt)))
    else:
        every = 1
    follower = PathFollower(path, setup.pf, 0.0, plant.log)
    rap = RateAutopilot(setup.rate_gains["pitch"], setup.rate_gains["yaw"])
    if x0 is None:
        T = path.frame(0.0)
        t1 = T.t1
        att = (0.0, -math.asin(max(-1.0, min(1.0, t1[2]))), math.atan2(t1[1], t1[0]))
        x0 = initial_state(0.0, setup.speed, attitude=att, position=path.position(0.0))
    state = {"k": 0, "u_ad": np.zeros(2)}

    def controller(t, x, act):
        R_W = rotation_matrix(*x[3:6])
        v = float(np.linalg.norm(x[6:9]))
        wc = follower.commands(x[0:3], R_W, v, cfg.dt)
        y = np.array([x[10], x[11]])
        if l1 is not None:
            if state["k"] % every == 0:
                state["u_ad"] = l1.sample(wc, y)
            u_ad = state["u_ad"]
        else:
            u_ad = wc
        state["k"] += 1
        dV, dH = rap.step(y[0], y[1], u_ad[0], u_ad[1], cfg.dt)
        st = follower.state
        V = composite_error(st.p_T, st.psi, setup.pf.c1)
        if setup.terrain is not None:
            grid, clearance = setup.terrain
            if grid(x[0], x[1]) - x[2] < clearance:
                record(plant.log, "W_COLLISION", f"terrain clearance below {clearance} m at t={t:.1f}")
        diag = (st.gamma, *st.p_T, st.psi, V, float(st.saturated), u_ad[0], u_ad[1])
        return Controls(delta_V=dV, delta_H=dH, q_c=wc[0], r_c=wc[1], pf=diag)

    log = run(plant, x0, n, controller, cfg, pf=True,
              stop=lambda t, x: follower.state.gamma >= path.T_f)
    log.meta.update(kind="follow", n=n, adaptation=l1 is not None)
    return log


# --------------------------------------------------------------------------
# Kinematic path following with a perfect inner loop


def _exp_integral(w, h):
    """``exp(skew(w) h)`` and ``int_0^h exp(skew(w) s) ds``."""
    S = skew(w)
    th = float(np.linalg.norm(w))
    if th * h < 1e-8:
        return np.eye(3) + h * S, h * np.eye(3) + 0.5 * h * h * S
    a = th * h
    S2 = S @ S
    E = np.eye(3) + math.sin(a) / th * S + (1 - math.cos(a)) / th**2 * S2
    I = h * np.eye(3) + (1 - math.cos(a)) / th**2 * S + (h - math.sin(a) / th) / th**2 * S2
    return E, I


def kinematic_follow(path: BernsteinPath, pf: PFConfig, p0, R0, speed: float, dt: float = 0.05,
                     duration: float = 60.0, gamma0: float = 0.0, log: EventLog | None = None):
    """Vehicle rates equal the commands exactly; returns arrays ``t, V, p_T, Psi``."""
    follower = PathFollower(path, pf, gamma0, log)
    p = np.asarray(p0, float).copy()
    R = np.asarray(R0, float).copy()
    ts, Vs, pts, psis, sats = [], [], [], [], []
    t = 0.0
    for _ in range(int(round(duration / dt))):
        if follower.finished:
            break
        wc = follower.commands(p, R, speed, dt)
        st = follower.state
        ts.append(t)
        Vs.append(composite_error(st.p_T, st.psi, pf.c1))
        pts.append(st.p_T.copy())
        psis.append(st.psi)
        sats.append(st.saturated)
        E, I = _exp_integral(np.array([0.0, wc[0], wc[1]]), dt)
        p = p + speed * (R @ I[:, 0])
        R = R @ E
        t += dt
    return {"t": np.array(ts), "V": np.array(Vs), "p_T": np.array(pts), "Psi": np.array(psis),
            "saturated": np.array(sats)}


# --------------------------------------------------------------------------
# Metrics


def _peaks(y, sign=1.0):
    y = sign * np.asarray(y)
    return [i for i in range(1, len(y) - 1) if y[i] > y[i - 1] and y[i] >= y[i + 1]]


def zigzag_metrics(log: TrajectoryLog) -> dict:
    axis = log.meta.get("axis", "vertical")
    t = log["t"]
    ang = log["theta"] if axis == "vertical" else np.unwrap(log["psi"]) - log["psi"][0]
    cmd = log["delta_V"] if axis == "vertical" else log["delta_H"]
    flags = []
    pk = _peaks(ang, 1.0)
    T1 = float(t[pk[0]]) if pk else float("nan")
    if not pk:
        flags.append("no positive peak")
    # Reversal times from the commanded signal.
    rev = [i for i in range(1, len(cmd)) if np.sign(cmd[i]) != np.sign(cmd[i - 1]) and cmd[i] != 0]
    rev_t = [float(t[i]) for i in rev]
    # A positive command drives the angle down, so after a reversal to a
    # positive command the overshoot is the segment maximum, and vice versa.
    sw = log.meta.get("switch_angle", 10 * DEG)
    overshoots = []
    bounds = rev + [len(t) - 1]
    for a, b in zip(bounds[:-1], bounds[1:]):
        seg = ang[a:b + 1]
        ext = seg.max() if cmd[a] > 0 else seg.min()
        overshoots.append(float(abs(ext) - sw))
    periods = [rev_t[i + 2] - rev_t[i] for i in range(len(rev_t) - 2)]
    if len(periods) < 1:
        flags.append("insufficient reversals for a period")
    u = log["u"]
    z = log["z"]
    out = {
        "T1": T1,
        "reversal_times": rev_t,
        "overshoots": overshoots,
        "periods": periods,
        "period": float(np.mean(periods[1:])) if len(periods) > 1 else (periods[0] if periods else float("nan")),
        "min_speed": float(u.min()),
        "initial_speed": float(u[0]),
        "speed_loss": float(u[0] - u.min()),
        "depth_min": float(z.min()),
        "depth_max": float(z.max()),
        "depth_envelope": float(z.max() - z.min()),
        "time_normalized_by_T1": bool(np.isfinite(T1)),
        "flags": flags,
    }
    return out


def follow_metrics(log: TrajectoryLog) -> dict:
    t = log["t"]
    vert = log["pT3"]
    hor = log["pT2"]
    ok = np.isfinite(vert)
    def stats(e):
        e = np.abs(e[ok])
        if e.size == 0:
            return {"max": float("nan"), "mean": float("nan"), "t_max": float("nan")}
        i = int(np.argmax(e))
        return {"max": float(e[i]), "mean": float(e.mean()), "t_max": float(t[ok][i])}
    return {"vertical": stats(vert), "horizontal": stats(hor),
            "final_gamma": float(log["gamma"][-1]), "adaptation": log.meta.get("adaptation")}


def turn_metrics(log: TrajectoryLog) -> dict:
    x, y = log["x"], log["y"]
    psi = np.unwrap(log["psi"]) - log["psi"][0]
    out = {"flags": []}
    s = np.sign(psi[-1]) or 1.0

    def at(angle):
        i = np.nonzero(s * psi >= angle)[0]
        return int(i[0]) if i.size else None

    i90, i180 = at(math.pi / 2), at(math.pi)
    out["advance"] = float(x[i90] - x[0]) if i90 is not None else float("nan")
    out["transfer"] = float(abs(y[i90] - y[0])) if i90 is not None else float("nan")
    out["tactical_diameter"] = float(abs(y[i180] - y[0])) if i180 is not None else float("nan")
    if i180 is None:
        out["flags"].append("heading change below 180 deg")
    r = log["r"]
    out["steady_yaw_rate"] = float(r[-1])
    u = np.hypot(log["u"], log["v"])[-1]
    out["steady_diameter"] = float(2 * u / abs(r[-1])) if abs(r[-1]) > 1e-9 else float("inf")
    out["lateral_deviation"] = float(np.abs(y - y[0]).max())
    out["distance"] = float(np.hypot(x[-1] - x[0], y[-1] - y[0]))
    return out


def roll_metrics(log: TrajectoryLog) -> dict:
    t, phi = log["t"], log["phi"]
    pk = _peaks(phi, 1.0)
    out = {"phi0": float(phi[0]), "phi_final": float(phi[-1]), "flags": []}
    if len(pk) >= 2:
        out["period"] = float(t[pk[1]] - t[pk[0]])
        out["log_decrement"] = float(math.log(phi[pk[0]] / phi[pk[1]]))
    else:
        out["flags"].append("fewer than two roll peaks")
    return out


def metrics(log: TrajectoryLog, kind: str | None = None) -> dict:
    kind = kind or log.meta.get("kind")
    if kind in ("vzz", "hzz", "zigzag"):
        m = zigzag_metrics(log)
    elif kind == "follow":
        m = follow_metrics(log)
    elif kind == "turn":
        m = turn_metrics(log)
    elif kind == "roll_decay":
        m = roll_metrics(log)
    else:
        m = {"flags": []}
    if m.get("flags"):
        record(log.events, "W_PARTIAL_METRICS", "; ".join(m["flags"]))
    m["kind"] = kind
    m["events"] = log.events.to_list()
    return m


def write_metrics(m: dict, path) -> None:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.generic):
            return clean(o.item())
        return o
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(m), fh, indent=1)
