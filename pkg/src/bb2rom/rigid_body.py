"""Rigid-body terms of the body-frame equations of motion ``M sdot = F - b``.

Axes: body x forward, y starboard, z down. The inertial frame has z
pointing down from the calm-water surface, so depth is positive.
Generalized velocity ``s = [u, v, w, p, q, r]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .events import ConfigurationError, SingularityError

G_STANDARD = 9.81


@dataclass(frozen=True)
class MassProperties:
    """Mass, centres of gravity/buoyancy, inertia tensor, weight and buoyancy.

    ``inertia`` is the full symmetric tensor with the sign convention of the
    mass matrix (products of inertia enter with a minus sign there).
    """

    m: float
    cg: np.ndarray
    cb: np.ndarray
    inertia: np.ndarray
    W: float
    B: float

    def __post_init__(self):
        object.__setattr__(self, "cg", np.asarray(self.cg, dtype=float).reshape(3))
        object.__setattr__(self, "cb", np.asarray(self.cb, dtype=float).reshape(3))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3, 3))
        validate_mass_properties(self)

    @classmethod
    def from_gyration(cls, m, cg, radii, cb=None, W=None, B=None, g=G_STANDARD,
                      products=(0.0, 0.0, 0.0)):
        """Build from mass and gyration radii ``(r_x, r_y, r_z)``.

        Defaults to a neutrally buoyant body (``W = B = m g``) with the centre
        of buoyancy at the origin. ``products`` is ``(I_xy, I_yz, I_xz)``.
        """
        rx, ry, rz = radii
        ixy, iyz, ixz = products
        inertia = np.array([
            [m * rx**2, ixy, ixz],
            [ixy, m * ry**2, iyz],
            [ixz, iyz, m * rz**2],
        ])
        W = m * g if W is None else W
        B = W if B is None else B
        cb = np.zeros(3) if cb is None else cb
        return cls(m=m, cg=np.asarray(cg, float), cb=np.asarray(cb, float),
                   inertia=inertia, W=W, B=B)

    def with_weight(self, W, B=None):
        """Copy with new weight (and buoyancy, defaulting to ``W``)."""
        return MassProperties(self.m, self.cg, self.cb, self.inertia, W, W if B is None else B)

    def with_cb(self, cb):
        return MassProperties(self.m, self.cg, np.asarray(cb, float), self.inertia, self.W, self.B)


def validate_mass_properties(mp: MassProperties) -> None:
    if not (mp.m > 0 and math.isfinite(mp.m)):
        raise ConfigurationError(f"mass must be positive, got {mp.m}")
    I = mp.inertia
    if not np.allclose(I, I.T, rtol=0, atol=1e-9 * max(1.0, np.abs(I).max())):
        raise ConfigurationError("inertia tensor is not symmetric")
    if np.linalg.eigvalsh(I).min() <= 0:
        raise ConfigurationError("inertia tensor is not positive definite")


@dataclass
class VehicleState:
    """Inertial position (m), Euler attitude (phi, theta, psi) and body velocity."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.attitude = np.asarray(self.attitude, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(6)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.attitude, self.velocity])

    @classmethod
    def from_vector(cls, x) -> "VehicleState":
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:12].copy())

    def wrapped(self) -> "VehicleState":
        """Copy with roll and yaw wrapped to (-pi, pi]."""
        att = self.attitude.copy()
        att[0] = wrap_angle(att[0])
        att[2] = wrap_angle(att[2])
        return VehicleState(self.position.copy(), att, self.velocity.copy())


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    if w == -math.pi:
        w = math.pi
    return w


def build_mass_matrix(mp: MassProperties) -> np.ndarray:
    validate_mass_properties(mp)
    m = mp.m
    xg, yg, zg = mp.cg
    I = mp.inertia
    return np.array([
        [m, 0.0, 0.0, 0.0, m * zg, -m * yg],
        [0.0, m, 0.0, -m * zg, 0.0, m * xg],
        [0.0, 0.0, m, m * yg, -m * xg, 0.0],
        [0.0, -m * zg, m * yg, I[0, 0], -I[0, 1], -I[0, 2]],
        [m * zg, 0.0, -m * xg, -I[0, 1], I[1, 1], -I[1, 2]],
        [-m * yg, m * xg, 0.0, -I[0, 2], -I[1, 2], I[2, 2]],
    ])


def coupling_velocity_terms(mp: MassProperties, s) -> np.ndarray:
    """Velocity-only part of the non-inertial coupling vector (accelerations zero)."""
    m = mp.m
    xg, yg, zg = mp.cg
    Ixx, Iyy, Izz = mp.inertia[0, 0], mp.inertia[1, 1], mp.inertia[2, 2]
    u, v, w, p, q, r = s
    return np.array([
        m * (w * q - v * r - xg * (q * q + r * r) + yg * p * q + zg * p * r),
        m * (u * r - w * p - yg * (r * r + p * p) + zg * q * r + xg * q * p),
        m * (v * p - u * q - zg * (p * p + q * q) + xg * r * p + yg * r * q),
        (Izz - Iyy) * q * r + m * (yg * (-u * q + v * p) - zg * (-w * p + u * r)),
        (Ixx - Izz) * r * p + m * (zg * (-v * r + w * q) - xg * (-u * q + v * p)),
        (Iyy - Ixx) * p * q + m * (xg * (-w * p + u * r) - yg * (-v * r + w * q)),
    ])


def coupling_acceleration_matrix(mp: MassProperties) -> np.ndarray:
    """Constant matrix collecting every acceleration term of the coupling vector."""
    m = mp.m
    xg, yg, zg = mp.cg
    Bacc = np.zeros((6, 6))
    Bacc[0, 5] = -m * yg
    Bacc[0, 4] = m * zg
    Bacc[1, 3] = -m * zg
    Bacc[1, 5] = m * xg
    Bacc[2, 4] = -m * xg
    Bacc[2, 3] = m * yg
    Bacc[3, 2] = m * yg
    Bacc[3, 1] = -m * zg
    Bacc[4, 0] = m * zg
    Bacc[4, 2] = -m * xg
    Bacc[5, 1] = m * xg
    Bacc[5, 0] = -m * yg
    return Bacc


def coupling_vector(mp: MassProperties, s, s_dot) -> np.ndarray:
    return coupling_velocity_terms(mp, s) + coupling_acceleration_matrix(mp) @ np.asarray(s_dot, float)


def gravity_direction_body(phi: float, theta: float) -> np.ndarray:
    """Unit vector of gravity (inertial +z) resolved in body axes."""
    cth = math.cos(theta)
    return np.array([-math.sin(theta), cth * math.sin(phi), cth * math.cos(phi)])


def hydrostatic_restoring(mp: MassProperties, phi: float, theta: float,
                          weight_only: bool = False) -> np.ndarray:
    """Weight and buoyancy loads in body axes.

    The moment rows are ``r_G x W g_b - r_B x B g_b`` with ``g_b`` the body-axis
    gravity direction, so a CG below the CB restores both roll and pitch.

    With ``weight_only`` the buoyancy is dropped, for use when buoyancy
    comes from pressure integration over the hull mesh.
    """
    W = mp.W
    B = 0.0 if weight_only else mp.B
    xg, yg, zg = mp.cg
    xb, yb, zb = mp.cb
    sth, cth = math.sin(theta), math.cos(theta)
    sph, cph = math.sin(phi), math.cos(phi)
    d = W - B
    return np.array([
        -d * sth,
        d * cth * sph,
        d * cth * cph,
        (yg * W - yb * B) * cth * cph - (zg * W - zb * B) * cth * sph,
        -(zg * W - zb * B) * sth - (xg * W - xb * B) * cth * cph,
        (yg * W - yb * B) * sth + (xg * W - xb * B) * cth * sph,
    ])


def hydrostatic_potential(mp: MassProperties, phi: float, theta: float) -> float:
    """Potential of the restoring moment for a neutrally buoyant body (W = B)."""
    arm = mp.W * mp.cg - mp.B * mp.cb
    return -float(arm @ gravity_direction_body(phi, theta))


def rotation_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """Body-to-inertial rotation ``Rz(psi) Ry(theta) Rx(phi)``."""
    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    return np.array([
        [cps * cth, -sps * cph + cps * sth * sph, sps * sph + cps * cph * sth],
        [sps * cth, cps * cph + sph * sth * sps, -cps * sph + sth * sps * cph],
        [-sth, cth * sph, cth * cph],
    ])


def euler_from_rotation(R) -> np.ndarray:
    theta = -math.asin(max(-1.0, min(1.0, R[2, 0])))
    phi = math.atan2(R[2, 1], R[2, 2])
    psi = math.atan2(R[1, 0], R[0, 0])
    return np.array([phi, theta, psi])


def euler_kinematics(state: VehicleState, eps: float = math.radians(1.0)):
    """Return ``(position_rate, attitude_rate)`` for the current state."""
    phi, theta, psi = state.attitude
    if abs(theta) >= math.pi / 2 - eps:
        raise SingularityError(
            f"pitch {math.degrees(theta):.3f} deg within {math.degrees(eps):.3f} deg of +-90",
            context={"attitude": state.attitude.tolist()})
    u, v, w, p, q, r = state.velocity
    R = rotation_matrix(phi, theta, psi)
    pos_rate = R @ np.array([u, v, w])
    sph, cph = math.sin(phi), math.cos(phi)
    cth = math.cos(theta)
    qr = q * sph + r * cph
    att_rate = np.array([p + qr * math.tan(theta), q * cph - r * sph, qr / cth])
    return pos_rate, att_rate
