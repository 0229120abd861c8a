"""Hydrodynamic loads from tabulated and scalar coefficients.

The load vector is the sum of four independent parts:

* hull drift loads, interpolated from speed/angle/depth tables and
  superposed for the vertical and horizontal flow angles,
* velocity-product terms and the constant added-mass matrix,
* control-plane loads tabulated against deflection,
* propeller thrust reduced by thrust deduction.

Channel order everywhere is ``X, Y, Z, K, M, N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .events import EventLog, TableError, record
from .tables import GridTable

CHANNELS = ("X", "Y", "Z", "K", "M", "N")
# Channels that change sign under a port/starboard mirror.
LATERAL = (1, 3, 5)
MIRROR_SIGNS = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
N_SURFACES = 5


def _sgn(x: float) -> float:
    return float((x > 0) - (x < 0))


@dataclass(frozen=True)
class Normalization:
    """Scaling of the tabulated speed/angle and deflection terms.

    Channel ``i`` is multiplied by ``rho * L**power / divisor``. The default
    uses ``L**2 / 2`` for forces and ``L**2 / 3`` for moments.
    """

    force_power: int = 2
    force_divisor: float = 2.0
    moment_power: int = 2
    moment_divisor: float = 3.0

    def scale(self, rho: float, L: float) -> np.ndarray:
        f = rho * L**self.force_power / self.force_divisor
        mom = rho * L**self.moment_power / self.moment_divisor
        return np.array([f, f, f, mom, mom, mom])


@dataclass(frozen=True)
class FlowState:
    U: float
    u: float
    v: float
    w: float
    alpha: float
    beta: float
    depth: float

    @classmethod
    def from_velocity(cls, s, depth: float) -> "FlowState":
        u, v, w = float(s[0]), float(s[1]), float(s[2])
        U = math.sqrt(u * u + v * v + w * w)
        return cls(U=U, u=u, v=v, w=w, alpha=math.atan2(w, u), beta=math.atan2(v, u), depth=depth)


# --------------------------------------------------------------------------
# Hull tables


class HullTable:
    """Straight-ahead resistance plus per-channel drift increments.

    ``beta_tables[i]`` holds channel ``i`` against ``(U, beta, D0)`` for
    ``beta >= 0`` at zero incidence; negative drift uses the lateral
    symmetry closure. ``alpha_tables[i]`` holds channel ``i`` against
    ``(U, alpha, D0)`` at zero drift. Both store increments over the
    straight-ahead value, so they vanish at zero angle.
    """

    def __init__(self, resistance: GridTable, beta_tables, alpha_tables):
        if len(beta_tables) != 6 or len(alpha_tables) != 6:
            raise TableError("hull tables need six channels each")
        self.resistance = resistance
        self.beta_tables = list(beta_tables)
        self.alpha_tables = list(alpha_tables)
        for t in self.beta_tables:
            if t.axes[1][0] < 0:
                raise TableError(f"{t.name}: drift axis must start at 0 (symmetry closure)")
        self._check_zero_at_zero()
        tabs = self._all()
        self._speed_range = (min(t.bounds(0)[0] for t in tabs), max(t.bounds(0)[1] for t in tabs))
        self._depth_range = (min(t.bounds(t.ndim - 1)[0] for t in tabs),
                             max(t.bounds(t.ndim - 1)[1] for t in tabs))
        self._beta_max = min(t.bounds(1)[1] for t in self.beta_tables)
        self._alpha_range = (max(t.bounds(1)[0] for t in self.alpha_tables),
                             min(t.bounds(1)[1] for t in self.alpha_tables))
        self.shared_grid = (all(t.same_grid(self.beta_tables[0]) for t in self.beta_tables)
                            and all(t.same_grid(self.alpha_tables[0]) for t in self.alpha_tables))

    def _check_zero_at_zero(self):
        for t in self.beta_tables + self.alpha_tables:
            ang = t.axes[1]
            if 0.0 in ang.tolist():
                j = ang.tolist().index(0.0)
                sl = np.take(t.values, j, axis=1)
                if np.abs(sl).max() > 1e-12:
                    raise TableError(f"{t.name}: increment table is not zero at zero angle")

    def speed_range(self):
        return self._speed_range

    def depth_range(self):
        return self._depth_range

    def beta_max(self):
        return self._beta_max

    def alpha_range(self):
        return self._alpha_range

    def _all(self):
        return [self.resistance] + self.beta_tables + self.alpha_tables


def _clamped_lookup_args(flow: FlowState, tables: HullTable, log: EventLog | None):
    U_lo, U_hi = tables.speed_range()
    D_lo, _ = tables.depth_range()
    if flow.U > U_hi * (1 + 1e-9):
        record(log, "W_OUT_OF_RANGE",
               f"speed {flow.U:.3f} m/s outside the range of the model (max {U_hi:.3f} m/s)")
    if flow.depth < D_lo:
        record(log, "W_SHALLOW",
               f"sail-top depth {flow.depth:.3f} m below {D_lo:.3f} m; results unreliable")
    bmax = tables.beta_max()
    alo, ahi = tables.alpha_range()
    beta = flow.beta
    alpha = flow.alpha
    if abs(beta) > bmax:
        record(log, "W_ANGLE_CLAMP", f"drift angle {math.degrees(beta):.2f} deg clamped")
        beta = math.copysign(bmax, beta)
    if alpha < alo or alpha > ahi:
        record(log, "W_ANGLE_CLAMP", f"incidence angle {math.degrees(alpha):.2f} deg clamped")
        alpha = min(max(alpha, alo), ahi)
    return alpha, beta


def hull_drift_coefficients(flow: FlowState, tables: HullTable, log: EventLog | None = None):
    """Nondimensional hull coefficients (before the ``N_i U^2`` factor)."""
    alpha, beta = _clamped_lookup_args(flow, tables, log)
    U, D = flow.U, flow.depth
    sign = 1.0 if beta >= 0 else -1.0
    bt, at = tables.beta_tables, tables.alpha_tables
    sb = bt[0].stencil(U, abs(beta), D) if tables.shared_grid else None
    sa = at[0].stencil(U, alpha, D) if tables.shared_grid else None
    out = np.empty(6)
    for i in range(6):
        tb = bt[i].apply(sb) if sb is not None else bt[i](U, abs(beta), D)
        if i in LATERAL:
            tb *= sign
        out[i] = tb + (at[i].apply(sa) if sa is not None else at[i](U, alpha, D))
    out[0] += tables.resistance(U, D)
    return out


def hull_drift_loads(flow: FlowState, tables: HullTable, L: float, rho: float,
                     log: EventLog | None = None, norm: Normalization = Normalization()):
    coef = hull_drift_coefficients(flow, tables, log)
    return norm.scale(rho, L) * coef * flow.U**2


# --------------------------------------------------------------------------
# Velocity-product terms and added mass

# (channel, name, scale power for force channels/moment channels, feature)
_VELOCITY_TERMS = [
    (0, "X_vr", 3, "vr"), (0, "X_wq", 3, "wq"),
    (0, "X_qq", 4, "qq"), (0, "X_rr", 4, "rr"), (0, "X_rp", 4, "rp"),
    (1, "Y_up", 3, "up"), (1, "Y_ur", 3, "ur"), (1, "Y_vq", 3, "vq"), (1, "Y_wp", 3, "wp"),
    (1, "Y_wr", 3, "wr"), (1, "Y_v|r|", 3, "v|r|"),
    (1, "Y_|p|p", 4, "|p|p"), (1, "Y_pq", 4, "pq"), (1, "Y_pr", 4, "pr"),
    (2, "Z_vp", 3, "vp"), (2, "Z_vr", 3, "vr"), (2, "Z_uq", 3, "uq"), (2, "Z_w|q|", 3, "w|q|"),
    (2, "Z_pp", 4, "pp"), (2, "Z_rr", 4, "rr"), (2, "Z_pr", 4, "pr"),
    (3, "K_up", 4, "up"), (3, "K_ur", 4, "ur"), (3, "K_vq", 4, "vq"), (3, "K_wp", 4, "wp"),
    (3, "K_wr", 4, "wr"),
    (3, "K_qr", 5, "qr"), (3, "K_pq", 5, "pq"), (3, "K_|p|p", 5, "|p|p"),
    (4, "M_uq", 4, "uq"), (4, "M_vp", 4, "vp"), (4, "M_vr", 4, "vr"), (4, "M_|vw|q", 4, "|vw|q"),
    (4, "M_pp", 5, "pp"), (4, "M_rr", 5, "rr"), (4, "M_rp", 5, "rp"), (4, "M_|q|q", 5, "|q|q"),
    (5, "N_up", 4, "up"), (5, "N_ur", 4, "ur"), (5, "N_vq", 4, "vq"), (5, "N_wp", 4, "wp"),
    (5, "N_|vw|r", 4, "|vw|r"),
    (5, "N_pq", 5, "pq"), (5, "N_qr", 5, "qr"), (5, "N_|r|r", 5, "|r|r"),
]

# (row, name, power, column of sdot)
_ADDED_MASS_TERMS = [
    (0, "X_udot", 3, 0),
    (1, "Y_vdot", 3, 1), (1, "Y_rdot", 4, 5), (1, "Y_pdot", 4, 3),
    (2, "Z_wdot", 3, 2), (2, "Z_qdot", 4, 4),
    (3, "K_vdot", 4, 1), (3, "K_pdot", 5, 3), (3, "K_rdot", 5, 5),
    (4, "M_wdot", 4, 2), (4, "M_qdot", 5, 4),
    (5, "N_vdot", 4, 1), (5, "N_rdot", 5, 5), (5, "N_pdot", 5, 3),
]

MOTION_DERIVATIVE_NAMES = tuple(sorted(
    {t[1] for t in _VELOCITY_TERMS} | {t[1] for t in _ADDED_MASS_TERMS}))

_FEATURES = sorted({t[3] for t in _VELOCITY_TERMS})
_FEATURE_INDEX = {f: k for k, f in enumerate(_FEATURES)}


def velocity_features(s) -> np.ndarray:
    u, v, w, p, q, r = (float(x) for x in s)
    cross = math.sqrt(v * v + w * w)
    vals = {
        "vr": v * r, "wq": w * q, "qq": q * q, "rr": r * r, "rp": r * p,
        "up": u * p, "ur": u * r, "vq": v * q, "wp": w * p, "wr": w * r,
        "v|r|": _sgn(v) * cross * abs(r), "|p|p": abs(p) * p, "pq": p * q, "pr": p * r,
        "vp": v * p, "uq": u * q, "w|q|": _sgn(w) * cross * abs(q), "pp": p * p,
        "qr": q * r, "|vw|q": q * cross, "|vw|r": r * cross, "|q|q": abs(q) * q,
        "|r|r": abs(r) * r,
    }
    return np.array([vals[f] for f in _FEATURES])


@dataclass(frozen=True)
class MotionDerivativeSet:
    """Named nondimensional motion derivatives; absent names are zero."""

    values: dict = field(default_factory=dict)
    defaulted: tuple = ()

    @classmethod
    def from_mapping(cls, mapping) -> "MotionDerivativeSet":
        unknown = set(mapping) - set(MOTION_DERIVATIVE_NAMES)
        if unknown:
            raise TableError(f"unknown motion derivatives: {sorted(unknown)}", code="E_SCHEMA")
        vals = {k: float(mapping.get(k, 0.0)) for k in MOTION_DERIVATIVE_NAMES}
        for k, x in vals.items():
            if not math.isfinite(x):
                raise TableError(f"motion derivative {k} is not finite")
        defaulted = tuple(k for k in MOTION_DERIVATIVE_NAMES if k not in mapping)
        return cls(values=vals, defaulted=defaulted)

    def __post_init__(self):
        object.__setattr__(self, "_cache_key",
                           tuple(self.values.get(k, 0.0) for k in MOTION_DERIVATIVE_NAMES))

    def __getitem__(self, name):
        return self.values.get(name, 0.0)

    def _key(self):
        return self._cache_key

    def velocity_matrix(self, L: float, rho: float) -> np.ndarray:
        return _velocity_matrix(self._key(), L, rho)

    def added_mass(self, L: float, rho: float) -> np.ndarray:
        return _added_mass(self._key(), L, rho)


def _power(channel: int, group: int) -> int:
    # Moments carry one extra length relative to forces.
    return group + (1 if channel >= 3 else 0)


@lru_cache(maxsize=64)
def _velocity_matrix(key, L, rho):
    vals = dict(zip(MOTION_DERIVATIVE_NAMES, key))
    C = np.zeros((6, len(_FEATURES)))
    for ch, name, power, feat in _VELOCITY_TERMS:
        C[ch, _FEATURE_INDEX[feat]] += 0.5 * rho * L**power * vals[name]
    C.setflags(write=False)
    return C


@lru_cache(maxsize=64)
def _added_mass(key, L, rho):
    vals = dict(zip(MOTION_DERIVATIVE_NAMES, key))
    A = np.zeros((6, 6))
    for row, name, power, col in _ADDED_MASS_TERMS:
        A[row, col] += 0.5 * rho * L**power * vals[name]
    A.setflags(write=False)
    return A


def motion_coupling_loads(s, coeffs: MotionDerivativeSet, L: float, rho: float) -> np.ndarray:
    return coeffs.velocity_matrix(L, rho) @ velocity_features(s)


def added_mass_matrix(coeffs: MotionDerivativeSet, L: float, rho: float) -> np.ndarray:
    return coeffs.added_mass(L, rho).copy()


# --------------------------------------------------------------------------
# Control planes


class ControlSurfaceTable:
    """Per-plane, per-channel coefficients against ``(deflection, U, D0)``."""

    mode = "table"

    def __init__(self, surfaces, names=None, hard_stop=math.radians(30.0)):
        if len(surfaces) != N_SURFACES:
            raise TableError(f"expected {N_SURFACES} control surfaces, got {len(surfaces)}")
        for chans in surfaces:
            if len(chans) != 6:
                raise TableError("each control surface needs six channel tables")
            for t in chans:
                lo, hi = t.bounds(0)
                if lo > -math.radians(30.0) + 1e-9 or hi < math.radians(30.0) - 1e-9:
                    raise TableError(f"{t.name}: deflection axis must cover +-30 deg")
        self.surfaces = [list(c) for c in surfaces]
        self.names = list(names) if names else [f"plane{k + 1}" for k in range(N_SURFACES)]
        self.hard_stop = hard_stop
        self._shared = [all(t.same_grid(c[0]) for t in c) for c in self.surfaces]

    def coefficients(self, deflections, U, depth) -> np.ndarray:
        out = np.zeros(6)
        for chans, shared, d in zip(self.surfaces, self._shared, deflections):
            if shared:
                st = chans[0].stencil(d, U, depth)
                for i in range(6):
                    out[i] += chans[i].apply(st)
            else:
                for i in range(6):
                    out[i] += chans[i](d, U, depth)
        return out


class QuadraticSurfaceModel:
    """Literal ``F'_{i,l} u^2 delta_l^2`` form; ``coeffs`` is 5 x 6."""

    mode = "quadratic"

    def __init__(self, coeffs, hard_stop=math.radians(30.0)):
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(N_SURFACES, 6)
        self.hard_stop = hard_stop

    def coefficients(self, deflections, U, depth) -> np.ndarray:
        d = np.asarray(deflections, dtype=float)
        return (d * d) @ self.coeffs


def saturate_deflections(deflections, hard_stop, log: EventLog | None = None):
    d = np.asarray(deflections, dtype=float)
    if np.any(np.abs(d) > hard_stop):
        record(log, "W_DEFLECTION_SAT", "deflection beyond hard stop saturated")
        d = np.clip(d, -hard_stop, hard_stop)
    return d


def control_surface_loads(deflections, u, depth, tables, L, rho, U=None,
                          log: EventLog | None = None, norm: Normalization = Normalization()):
    if u == 0.0:
        return np.zeros(6)
    d = saturate_deflections(deflections, tables.hard_stop, log)
    speed = abs(u) if U is None else U
    return norm.scale(rho, L) * u * u * tables.coefficients(d, speed, depth)


# --------------------------------------------------------------------------
# Propeller


@dataclass
class PropellerModel:
    D: float
    kt: tuple
    kq: tuple
    t_table: GridTable
    j_range: tuple = (0.0, 1.2)

    def __post_init__(self):
        self.kt = tuple(float(c) for c in self.kt)
        self.kq = tuple(float(c) for c in self.kq)
        if len(self.kt) != 3 or len(self.kq) != 3:
            raise TableError("kt and kq need three quadratic coefficients")
        if not self.D > 0:
            raise TableError("propeller diameter must be positive")
        if not self.kt[0] > 0:
            raise TableError("bollard thrust coefficient kt(0) must be positive")
        t = self.t_table.values
        if t.min() < 0 or t.max() >= 0.5:
            raise TableError("thrust deduction must lie in [0, 0.5)")

    def KT(self, J):
        c0, c1, c2 = self.kt
        return c0 + c1 * J + c2 * J * J

    def KQ(self, J):
        d0, d1, d2 = self.kq
        return d0 + d1 * J + d2 * J * J


@dataclass(frozen=True)
class PropellerOutput:
    J: float
    thrust: float
    torque: float
    t: float
    X: float


def propeller_state(u, n, flow: FlowState, prop: PropellerModel, rho,
                    log: EventLog | None = None) -> PropellerOutput:
    if n < 0:
        raise ValueError("propeller speed must be non-negative")
    if n == 0:
        return PropellerOutput(0.0, 0.0, 0.0, 0.0, 0.0)
    J = u / (n * prop.D)
    lo, hi = prop.j_range
    if J < lo or J > hi:
        record(log, "W_J_CLAMP", f"advance coefficient {J:.3f} clamped to [{lo}, {hi}]")
        J = min(max(J, lo), hi)
    T = prop.KT(J) * rho * n * n * prop.D**4
    Q = prop.KQ(J) * rho * n * n * prop.D**5
    t = prop.t_table(flow.U, flow.depth)
    return PropellerOutput(J, T, Q, t, (1.0 - t) * T)


def propeller_loads(u, n, flow: FlowState, prop: PropellerModel, rho,
                    log: EventLog | None = None) -> np.ndarray:
    out = np.zeros(6)
    out[0] = propeller_state(u, n, flow, prop, rho, log).X
    return out


# --------------------------------------------------------------------------
# Assembly


@dataclass
class CoefficientSet:
    L: float
    hull: HullTable
    motion: MotionDerivativeSet
    surfaces: object
    propeller: PropellerModel
    normalization: Normalization = Normalization()
    label: str = ""


@dataclass
class HydroBreakdown:
    hull: np.ndarray
    motion: np.ndarray
    surfaces: np.ndarray
    propeller: np.ndarray

    @property
    def total(self):
        return self.hull + self.motion + self.surfaces + self.propeller


def total_hydrodynamic(s, flow: FlowState, deflections, n, coeffs: CoefficientSet, rho,
                       log: EventLog | None = None):
    """Return ``(force, added_mass, breakdown)``."""
    L = coeffs.L
    norm = coeffs.normalization
    parts = HydroBreakdown(
        hull=hull_drift_loads(flow, coeffs.hull, L, rho, log, norm),
        motion=motion_coupling_loads(s, coeffs.motion, L, rho),
        surfaces=control_surface_loads(deflections, flow.u, flow.depth, coeffs.surfaces, L, rho,
                                       U=flow.U, log=log, norm=norm),
        propeller=propeller_loads(flow.u, n, flow, coeffs.propeller, rho, log),
    )
    return parts.total, coeffs.motion.added_mass(L, rho), parts
