"""X-plane allocation, plane actuators, baseline autopilot and zigzag scheduling.

Sign conventions: a positive vertical command ``delta_V`` pitches the bow
down and a positive horizontal command ``delta_H`` turns the bow to port.
All autopilot errors are formed so that positive gains are stabilizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rigid_body import VehicleState, wrap_angle

DEG = math.pi / 180.0

# Rows: planes 1..5 (lower stbd, upper stbd, upper port, lower port, sail).
# Columns: (delta_V, delta_H).
ALLOCATION = np.array([
    [-1.0, -1.0],
    [-1.0, 1.0],
    [1.0, 1.0],
    [1.0, -1.0],
    [-1.0, 0.0],
])


def allocate(delta_V: float, delta_H: float) -> np.ndarray:
    return np.array([
        -delta_H - delta_V,
        delta_H - delta_V,
        delta_H + delta_V,
        -delta_H + delta_V,
        -delta_V,
    ])


@dataclass(frozen=True)
class ActuatorState:
    deflections: np.ndarray = field(default_factory=lambda: np.zeros(5))
    commanded: np.ndarray = field(default_factory=lambda: np.zeros(5))
    position_limit: float = 30.0 * DEG
    rate_limit: float = 10.0 * DEG

    def __post_init__(self):
        object.__setattr__(self, "deflections", np.asarray(self.deflections, float).reshape(5))
        object.__setattr__(self, "commanded", np.asarray(self.commanded, float).reshape(5))


def actuator_update(act: ActuatorState, commands, dt: float) -> ActuatorState:
    """Move each plane toward its (position-limited) command at the rate limit."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    lim = act.position_limit
    cmd = np.clip(np.asarray(commands, float), -lim, lim)
    step = act.rate_limit * dt
    delta = np.clip(cmd - act.deflections, -step, step)
    new = np.clip(act.deflections + delta, -lim, lim)
    return replace(act, deflections=new, commanded=cmd)


@dataclass
class PIDChannel:
    """PID on a scalar error with integral clamping and output saturation."""

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    saturation: float = 30.0 * DEG
    integral: float = 0.0
    previous: float | None = None

    def step(self, error: float, dt: float) -> float:
        if not dt > 0:
            raise ValueError("dt must be positive")
        deriv = 0.0 if self.previous is None else (error - self.previous) / dt
        self.previous = error
        if self.ki != 0.0:
            self.integral += error * dt
            bound = self.saturation / abs(self.ki)
            self.integral = min(max(self.integral, -bound), bound)
        out = self.kp * error + self.ki * self.integral + self.kd * deriv
        return min(max(out, -self.saturation), self.saturation)

    def reset(self):
        self.integral = 0.0
        self.previous = None


@dataclass
class AutopilotGains:
    """Weights form each channel's error sum; PID gains act on that sum."""

    depth_weight: float = 1.0
    pitch_weight: float = 1.0
    lateral_weight: float = 0.0
    yaw_weight: float = 1.0
    vertical: tuple = (0.0, 0.0, 0.0)
    horizontal: tuple = (0.0, 0.0, 0.0)
    saturation: float = 30.0 * DEG

    def __post_init__(self):
        vals = [self.depth_weight, self.pitch_weight, self.lateral_weight, self.yaw_weight,
                *self.vertical, *self.horizontal, self.saturation]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("autopilot gains must be finite")


class Autopilot:
    """Decoupled vertical (depth + pitch) and horizontal (cross-track + yaw) PID."""

    def __init__(self, gains: AutopilotGains):
        self.gains = gains
        self.vertical = PIDChannel(*gains.vertical, saturation=gains.saturation)
        self.horizontal = PIDChannel(*gains.horizontal, saturation=gains.saturation)

    def errors(self, state: VehicleState, targets: dict):
        g = self.gains
        x, y, z = state.position
        phi, theta, psi = state.attitude
        e_v = 0.0
        if "depth" in targets:
            e_v += g.depth_weight * (targets["depth"] - z)
        if "pitch" in targets:
            e_v += g.pitch_weight * (theta - targets["pitch"])
        e_h = 0.0
        if "yaw" in targets:
            psi_t = targets["yaw"]
            e_h += g.yaw_weight * wrap_angle(psi - psi_t)
            if "lateral" in targets:
                cross = -math.sin(psi_t) * x + math.cos(psi_t) * y
                e_h += g.lateral_weight * (cross - targets["lateral"])
        return e_v, e_h

    def step(self, state: VehicleState, targets: dict, dt: float):
        e_v, e_h = self.errors(state, targets)
        return self.vertical.step(e_v, dt), self.horizontal.step(e_h, dt)


def autopilot_step(state: VehicleState, targets: dict, gains: AutopilotGains, dt: float,
                   autopilot: Autopilot | None = None):
    """One autopilot update; pass a persistent ``autopilot`` to keep integral state."""
    ap = autopilot if autopilot is not None else Autopilot(gains)
    return ap.step(state, targets, dt)


class RateAutopilot:
    """Pitch- and yaw-rate tracking loop used under the path-following controller."""

    def __init__(self, pitch=(1.0, 0.0, 0.0), yaw=(1.0, 0.0, 0.0), saturation=30.0 * DEG):
        self.pitch = PIDChannel(*pitch, saturation=saturation)
        self.yaw = PIDChannel(*yaw, saturation=saturation)

    def step(self, q: float, r: float, q_ref: float, r_ref: float, dt: float):
        return self.pitch.step(q - q_ref, dt), self.yaw.step(r - r_ref, dt)


@dataclass
class ZigzagScheduler:
    """Two-state zigzag: hold ``initial_sign * deflection`` until the attitude
    reaches ``-initial_sign * switch_angle``, then reverse, and so on.

    With the default ``initial_sign = -1`` a vertical zigzag starts at
    -deflection and reverses once pitch reaches +switch_angle.
    """

    deflection: float = 10.0 * DEG
    switch_angle: float = 10.0 * DEG
    axis: str = "vertical"
    initial_sign: float = -1.0
    sign: float = 0.0
    switches: list = field(default_factory=list)

    def __post_init__(self):
        if self.axis not in ("vertical", "horizontal"):
            raise ValueError("axis must be 'vertical' or 'horizontal'")
        if self.sign == 0.0:
            self.sign = float(np.sign(self.initial_sign)) or -1.0

    def command(self, angle: float, time: float | None = None) -> float:
        # Holding sign*deflection drives the angle toward -sign; switch on reaching it.
        target = -self.sign * self.switch_angle
        if (self.sign < 0 and angle >= target) or (self.sign > 0 and angle <= target):
            self.sign = -self.sign
            self.switches.append((time, angle, self.sign * self.deflection))
        return self.sign * self.deflection
