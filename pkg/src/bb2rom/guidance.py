"""Path-following outer loop: virtual-time dynamics and pitch/yaw-rate commands.

Frames: ``I`` inertial, ``T`` parallel transport frame of the virtual target,
``W`` vehicle (x along the velocity), ``D`` desired frame at the vehicle.
``R_A^B`` maps A-frame coordinates to B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .events import ConfigurationError, DegeneratePathError, EventLog, record
from .path_geometry import EPS_SPEED, BernsteinPath, cross3, vee

PI_R = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
_E1 = np.eye(3) - PI_R.T @ PI_R


@dataclass
class PFConfig:
    k_gamma: float = 0.1
    k_R: float = 0.5
    d: float = 40.0
    c: float = 0.5
    c1: float = 40.0
    lam: float = 1e-4
    delta_lam: float = 0.5
    v_min: float = 1.0
    omega_c_max: float = math.radians(6.0)
    omega_T_max: float | None = None

    def __post_init__(self):
        if not (self.k_gamma > 0 and self.k_R > 0):
            raise ConfigurationError("k_gamma and k_R must be positive")
        if not (self.d > 0 and self.c > 0 and self.c1 > 0):
            raise ConfigurationError("d, c and c1 must be positive")
        if not 0 < self.delta_lam < 1:
            raise ConfigurationError("delta_lambda must lie in (0, 1)")

    def audit(self, path: BernsteinPath | None = None, speed: float | None = None) -> list[str]:
        """Check the parameter inequalities with conservative bounds over the domain.

        Inside the domain ``|p_T| <= c c1`` and the heading error to the aim
        direction is at most ``acos(1 - 2 c^2)``. The virtual-time rate is
        bounded by ``(v + k_gamma c c1) / min|p_d'|``. The D-to-T rate is
        bounded by the perpendicular relative speed over the aim distance
        ``d - c c1``, widened by ``1 + tan(chi)`` for the projected y-axis.
        """
        issues = []
        v = self.v_min if speed is None else speed
        if not self.c < 1 / math.sqrt(2):
            issues.append(f"c={self.c} must be < 1/sqrt(2)")
        if path is not None:
            r = self.c * self.c1
            if not self.d > r:
                issues.append(f"d={self.d} must exceed c*c1={r}")
            else:
                bounds = self.rate_bounds(path, v)
                margin = self.omega_c_max - bounds["omega_T_gamma_dot"] - bounds["omega_DT"]
                if margin <= 0:
                    issues.append(f"omega_c_max margin {margin:.4g} rad/s is not positive")
                elif not self.c < margin / (2 * self.k_R):
                    issues.append(f"c={self.c} must be < {margin / (2 * self.k_R):.4g}")
        lam_max = self.v_min / (self.c1**2 * math.sqrt(self.d**2 + self.c**2 * self.c1**2))
        if not self.lam < lam_max:
            issues.append(f"lambda={self.lam} must be < {lam_max:.4g}")
        return issues

    def rate_bounds(self, path: BernsteinPath, v: float) -> dict:
        gam, _, omega = path._frame_grid
        sp = min(path.speed(g) for g in gam)
        wT = self.omega_T_max if self.omega_T_max is not None else float(
            np.linalg.norm(omega, axis=1).max())
        r = self.c * self.c1
        gdot = (v + self.k_gamma * r) / sp
        chi = math.asin(min(1.0, r / self.d))
        phi = math.acos(max(-1.0, 1.0 - 2.0 * self.c**2))
        perp = v * math.sin(min(math.pi / 2, phi + chi)) + self.k_gamma * r + wT * gdot * r
        w_dt = perp / (self.d - r) * (1.0 + math.tan(chi))
        return {"gamma_dot": gdot, "omega_T_gamma_dot": wT * gdot, "omega_DT": w_dt}


def position_error(p, path: BernsteinPath, gamma: float) -> np.ndarray:
    R_T = path.frame(gamma).R
    return R_T.T @ (np.asarray(p, float) - path.position(gamma))


def _check_rotation(R, name):
    if np.abs(R.T @ R - np.eye(3)).max() > 1e-6 or np.linalg.det(R) < 0:
        raise ValueError(f"{name} is not a rotation matrix")


def attitude_error(R_W, R_D):
    """Return ``(R_tilde, Psi, e_R)`` for vehicle frame ``R_W`` and desired ``R_D``.

    ``R_tilde = R_D^T R_W``. With this ordering ``R_tilde^T`` carries
    D-frame rates into W and ``dPsi/dt = e_R . ((q, r) - feedforward)``,
    so the rate law below makes ``Psi`` non-increasing.
    """
    R_W = np.asarray(R_W, float)
    R_D = np.asarray(R_D, float)
    _check_rotation(R_W, "R_W")
    _check_rotation(R_D, "R_D")
    Rt = R_D.T @ R_W
    psi = 0.5 * np.trace(_E1 @ (np.eye(3) - Rt))
    e = 0.5 * PI_R @ vee(_E1 @ Rt - Rt.T @ _E1)
    return Rt, float(psi), e


def gamma_rate(v: float, w1, p, path: BernsteinPath, gamma: float, k_gamma: float) -> float:
    d = path.derivative(gamma)
    nd = float(np.linalg.norm(d))
    if nd <= EPS_SPEED:
        raise DegeneratePathError(f"path speed {nd:.3e} at gamma={gamma:.4f}")
    t1 = path.frame(gamma).t1
    vec = v * np.asarray(w1, float) + k_gamma * (np.asarray(p, float) - path.position(gamma))
    return float(vec @ t1) / nd


def rate_commands(R_tilde, omega_T, omega_DT_D, R_T_D, k_R: float, e_R,
                  omega_max: float | None = None, log: EventLog | None = None):
    """Pitch/yaw-rate command; ``omega_T`` must already be per unit time."""
    ff = PI_R @ np.asarray(R_tilde).T @ (np.asarray(R_T_D) @ np.asarray(omega_T) + np.asarray(omega_DT_D))
    wc = ff - 2.0 * k_R * np.asarray(e_R)
    saturated = False
    if omega_max is not None:
        n = float(np.linalg.norm(wc))
        if n > omega_max:
            wc = wc * (omega_max / n)
            saturated = True
            record(log, "W_RATE_SAT", "rate command saturated at omega_c_max")
    return wc, saturated


def domain_check(p_T, psi: float, c: float, c1: float) -> bool:
    return psi + float(np.dot(p_T, p_T)) / c1**2 <= c**2


def composite_error(p_T, psi: float, c1: float) -> float:
    return psi + float(np.dot(p_T, p_T)) / c1**2


def desired_frame_rotation(p, path: BernsteinPath, gamma: float, d: float,
                           log: EventLog | None = None):
    """Desired frame: x toward the aim point ``p_d + d t1``, y from projected ``t2``."""
    T = path.frame(gamma)
    aim = path.position(gamma) + d * T.t1 - np.asarray(p, float)
    n = np.linalg.norm(aim)
    if n < 1e-9:
        record(log, "W_AIM_FALLBACK", "aim point coincides with vehicle; using tangent")
        d1 = T.t1.copy()
    else:
        d1 = aim / n
    b2 = T.t2 - (T.t2 @ d1) * d1
    nb = np.linalg.norm(b2)
    if nb < 1e-9:
        b2 = T.t3 - (T.t3 @ d1) * d1
        nb = np.linalg.norm(b2)
    b2 /= nb
    R_D = np.column_stack([d1, b2, cross3(d1, b2)])
    return R_D, T


def desired_frame(p, path: BernsteinPath, gamma: float, d: float,
                  previous_R_DT=None, dt: float | None = None, log: EventLog | None = None):
    """Return ``(R_D^I, omega_DT^D, R_T^D)``.

    ``omega_DT^D`` is the one-step finite difference of the D-to-T rotation
    against ``previous_R_DT`` (zero when no previous frame is given).
    """
    R_D, T = desired_frame_rotation(p, path, gamma, d, log)
    R_DT = T.R.T @ R_D  # D expressed in T
    if previous_R_DT is None or not dt:
        w = np.zeros(3)
    else:
        w = Rotation.from_matrix(previous_R_DT.T @ R_DT).as_rotvec() / dt
    return R_D, w, R_D.T @ T.R


@dataclass
class PFState:
    gamma: float = 0.0
    p_T: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R_tilde: np.ndarray = field(default_factory=lambda: np.eye(3))
    psi: float = 0.0
    e_R: np.ndarray = field(default_factory=lambda: np.zeros(2))
    R_DT: np.ndarray | None = None
    gamma_dot: float = 0.0
    saturated: bool = False


class PathFollower:
    """Stateful outer loop advanced once per control step."""

    def __init__(self, path: BernsteinPath, config: PFConfig, gamma0: float = 0.0,
                 log: EventLog | None = None):
        self.path = path
        self.config = config
        self.state = PFState(gamma=gamma0)
        self.log = log

    def commands(self, p, R_W, v: float, dt: float):
        """Compute ``(q_c, r_c)`` at the current virtual time, then advance it."""
        cfg = self.config
        st = self.state
        g = st.gamma
        path = self.path
        R_D, w_DT, R_TD = desired_frame(p, path, g, cfg.d, st.R_DT, dt, self.log)
        T = path.frame(g)
        Rt, psi, e = attitude_error(R_W, R_D)
        gdot = gamma_rate(v, R_W[:, 0], p, path, g, cfg.k_gamma)
        wc, sat = rate_commands(Rt, T.omega * gdot, w_DT, R_TD, cfg.k_R, e,
                                cfg.omega_c_max, self.log)
        st.p_T = T.R.T @ (np.asarray(p, float) - path.position(g))
        st.R_tilde, st.psi, st.e_R = Rt, psi, e
        st.R_DT = T.R.T @ R_D
        st.gamma_dot = gdot
        st.saturated = sat
        new_g = g + gdot * dt
        if new_g < 0.0:
            record(self.log, "W_GAMMA_CLAMP", "virtual time clamped at the path start")
            new_g = 0.0
        # Reaching T_f ends the run; that clamp is not reported.
        new_g = min(new_g, path.T_f)
        st.gamma = new_g
        return wc

    @property
    def finished(self) -> bool:
        return self.state.gamma >= self.path.T_f
