"""Generators for the shipped SYNTHETIC sample assets.

None of these numbers are measured. They are shaped on the published
qualitative trends (linear lateral loads in drift, near-surface
amplification, plane stall, thrust deduction rising toward the surface and
dipping at the shallowest depth) and sized to give a plausible full-scale
vehicle. Regenerate the files under ``data/`` with ``python -m bb2rom.samples``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .fileio import SCHEMA_VERSION, write_json
from .hydro_model import MOTION_DERIVATIVE_NAMES, Normalization
from .units import KNOT
from .vehicle import FULL_SCALE, Particulars
from .wave_hydrostatics import HullMesh, write_ascii_stl

DATA_DIR = Path(__file__).parent / "data"

SPEED_KN = [3.0, 6.0, 10.0]
DEPTHS = [2.5, 4.0, 7.0, 25.0]
BETA_DEG = [0.0, 4.0, 8.0, 12.0]
ALPHA_DEG = [-12.0, -8.0, -4.0, 0.0, 4.0, 8.0, 12.0]
DEFLECTION_DEG = [-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0]

# Near-surface amplification of the drift loads, per tabulated depth.
DEPTH_FACTOR = [1.33, 1.15, 1.05, 1.0]
RESISTANCE_FACTOR = [1.25, 1.12, 1.04, 1.0]
SAIL_DEPTH_FACTOR = [0.85, 0.92, 0.98, 1.0]
THRUST_DEDUCTION = [0.17, 0.20, 0.18, 0.15]

# Linear derivatives in rho L^3 / 2 units (forces) and rho L^4 / 2 (moments).
Y_V, K_V, N_V = -0.035, 0.0003, -0.010
Z_W, M_W = -0.035, 0.006
R0 = -0.0015

MOTION = {
    "X_udot": -0.001, "X_vr": 0.02, "X_wq": -0.02, "X_qq": -0.0007, "X_rr": 0.0004,
    "Y_vdot": -0.0235, "Y_rdot": 0.0006, "Y_ur": 0.010,
    "Z_wdot": -0.0235, "Z_qdot": -0.0006, "Z_uq": -0.010,
    "K_pdot": -1.0e-5, "K_up": -1.0e-4,
    "M_wdot": -0.0006, "M_qdot": -0.0015, "M_uq": -0.007,
    "N_vdot": 0.0006, "N_rdot": -0.0015, "N_ur": -0.007,
}

# Lift shape against deflection (stall beyond 20 deg) and plane magnitude at 10 deg.
LIFT_SHAPE = {0.0: 0.0, 10.0: 1.0, 20.0: 1.4, 30.0: 1.5}
PLANE_LIFT = 1.0e-3
SAIL_LIFT = 0.8e-3
PLANE_DRAG = 0.1

STERN_X = -31.6
STERN_R = 3.0
SAIL_X, SAIL_Z = 17.0, -8.0
# (y, z) position and lift direction of planes 1..4 for a positive deflection.
_S = 1.0 / math.sqrt(2.0)
STERN_PLANES = [
    ((STERN_R * _S, STERN_R * _S), (-_S, _S)),  # lower starboard
    ((STERN_R * _S, -STERN_R * _S), (_S, _S)),  # upper starboard
    ((-STERN_R * _S, -STERN_R * _S), (_S, -_S)),  # upper port
    ((-STERN_R * _S, STERN_R * _S), (-_S, -_S)),  # lower port
]


def _lift(d_deg):
    return math.copysign(LIFT_SHAPE[abs(d_deg)], d_deg) if d_deg else 0.0


def _moment_ratio(L, norm: Normalization):
    f = L**norm.force_power / norm.force_divisor
    m = L**norm.moment_power / norm.moment_divisor
    return f / m


def plane_coefficients(position, direction, magnitude, L, norm, depth_factor=None):
    """Six-channel table values on ``(deflection, speed, depth)`` for one plane."""
    x, y, z = position
    ny, nz = direction
    ratio = _moment_ratio(L, norm)
    shape = (len(DEFLECTION_DEG), len(SPEED_KN), len(DEPTHS))
    out = {c: np.zeros(shape) for c in "XYZKMN"}
    fac = np.ones(len(DEPTHS)) if depth_factor is None else np.asarray(depth_factor)
    for i, d in enumerate(DEFLECTION_DEG):
        g = _lift(d)
        fx = -PLANE_DRAG * magnitude * g * g
        fy = magnitude * g * ny
        fz = magnitude * g * nz
        vals = {
            "X": fx, "Y": fy, "Z": fz,
            "K": ratio * (y * fz - z * fy),
            "M": ratio * (z * fx - x * fz),
            "N": ratio * (x * fy - y * fx),
        }
        for c, v in vals.items():
            out[c][i] = v * fac[None, :]
    return {c: v.tolist() for c, v in out.items()}


def synthetic_coefficients(particulars: Particulars = FULL_SCALE,
                           norm: Normalization = Normalization()) -> dict:
    L = particulars.length
    ratio = _moment_ratio(L, norm)
    # Force tables are in rho L^2 U^2 / 2; linear derivatives are rho L^3 U v / 2,
    # i.e. the same scale once v/U = sin(beta).
    moment_conv = ratio * L  # rho L^4 / 2 derivative to moment table units
    nU, nB, nA, nD = len(SPEED_KN), len(BETA_DEG), len(ALPHA_DEG), len(DEPTHS)
    sb = np.sin(np.radians(BETA_DEG))
    sa = np.sin(np.radians(ALPHA_DEG))
    fac = np.asarray(DEPTH_FACTOR)

    def grid(ang_vals, coef):
        return (coef * np.ones(nU)[:, None, None] * ang_vals[None, :, None] * fac[None, None, :])

    zeros_b = np.zeros((nU, nB, nD)).tolist()
    zeros_a = np.zeros((nU, nA, nD)).tolist()
    beta_tables = {
        "X": zeros_b, "Y": grid(sb, Y_V).tolist(), "Z": zeros_b,
        "K": grid(sb, K_V * moment_conv).tolist(), "M": zeros_b,
        "N": grid(sb, N_V * moment_conv).tolist(),
    }
    alpha_tables = {
        "X": zeros_a, "Y": zeros_a, "Z": grid(sa, Z_W).tolist(), "K": zeros_a,
        "M": grid(sa, M_W * moment_conv).tolist(), "N": zeros_a,
    }
    resistance = (R0 * np.ones(nU)[:, None] * np.asarray(RESISTANCE_FACTOR)[None, :]).tolist()

    planes = []
    names = ["lower_starboard", "upper_starboard", "upper_port", "lower_port", "sail"]
    for k, ((y, z), n) in enumerate(STERN_PLANES):
        planes.append(dict(name=names[k], **plane_coefficients((STERN_X, y, z), n, PLANE_LIFT, L, norm)))
    planes.append(dict(name="sail", **plane_coefficients((SAIL_X, 0.0, SAIL_Z), (0.0, -1.0), SAIL_LIFT,
                                                         L, norm, SAIL_DEPTH_FACTOR)))
    return {
        "schema_version": SCHEMA_VERSION,
        "label": "SYNTHETIC full-scale sample set",
        "synthetic": True,
        "notes": "Synthetic values shaped on published qualitative trends; not measured data.",
        "L": {"value": L, "unit": "m"},
        "normalization": {"force_power": norm.force_power, "force_divisor": norm.force_divisor,
                          "moment_power": norm.moment_power, "moment_divisor": norm.moment_divisor},
        "hull_tables": {
            "speed": {"values": SPEED_KN, "unit": "kn"},
            "depth": {"values": DEPTHS, "unit": "m"},
            "beta": {"values": BETA_DEG, "unit": "deg"},
            "alpha": {"values": ALPHA_DEG, "unit": "deg"},
            "resistance": resistance,
            "beta_tables": beta_tables,
            "alpha_tables": alpha_tables,
        },
        "motion_derivatives": {k: MOTION.get(k, 0.0) for k in MOTION_DERIVATIVE_NAMES},
        "control_surfaces": {
            "mode": "table",
            "hard_stop": {"value": 30.0, "unit": "deg"},
            "deflection": {"values": DEFLECTION_DEG, "unit": "deg"},
            "speed": {"values": SPEED_KN, "unit": "kn"},
            "depth": {"values": DEPTHS, "unit": "m"},
            "planes": planes,
        },
        "propeller": {
            "D": {"value": 5.0, "unit": "m"},
            "kt": [0.42, -0.30, -0.09],
            "kq": [0.060, -0.040, -0.015],
            "j_range": [0.0, 1.2],
            "thrust_deduction": {
                "speed": {"values": SPEED_KN, "unit": "kn"},
                "depth": {"values": DEPTHS, "unit": "m"},
                "values": [THRUST_DEDUCTION for _ in SPEED_KN],
            },
        },
    }


# --------------------------------------------------------------------------
# Hull mesh


def hull_radius(s, length, radius, nose, tail):
    """Body-of-revolution radius at distance ``s`` aft of the nose."""
    if s <= 0.0 or s >= length:
        return 0.0
    if s < nose:
        return radius * math.sqrt(1.0 - ((nose - s) / nose) ** 2)
    if s > length - tail:
        e = (s - (length - tail)) / tail
        return radius * (1.0 - e**2.2)
    return radius


def revolution_mesh(profile, length, n_theta=48, n_x=74) -> HullMesh:
    """Closed triangulated body of revolution about the x axis, nose at ``x = length``."""
    # Cosine clustering toward both ends.
    s = 0.5 * length * (1.0 - np.cos(np.linspace(0.0, math.pi, n_x + 1)))[1:-1]
    th = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    verts = [(length, 0.0, 0.0)]
    for si in s:
        r = profile(si)
        x = length - si
        verts += [(x, r * math.cos(t), r * math.sin(t)) for t in th]
    verts.append((0.0, 0.0, 0.0))
    tris = []
    nr = len(s)
    ring = lambda i, j: 1 + i * n_theta + (j % n_theta)  # noqa: E731
    for j in range(n_theta):
        tris.append((0, ring(0, j + 1), ring(0, j)))
    for i in range(nr - 1):
        for j in range(n_theta):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a, b, d))
            tris.append((a, d, c))
    tail = len(verts) - 1
    for j in range(n_theta):
        tris.append((tail, ring(nr - 1, j), ring(nr - 1, j + 1)))
    mesh = HullMesh(np.array(verts), np.array(tris), check=False).oriented_outward()
    mesh.validate()
    return mesh


def synthetic_hull(particulars: Particulars = FULL_SCALE, rho: float = 1025.0) -> HullMesh:
    """Stock-like bare hull whose displaced volume matches the displacement.

    The tail length is solved so that ``rho * V`` equals the displacement; the
    mesh is then shifted so its volume centroid lies at the body origin.
    """
    L, R = particulars.length, 0.5 * particulars.beam
    target = particulars.displacement / rho
    nose = 0.15 * L

    def volume(tail):
        xs = np.linspace(0.0, L, 4001)
        r = np.array([hull_radius(x, L, R, nose, tail) for x in xs])
        return float(np.trapezoid(math.pi * r * r, xs))

    lo, hi = 1.0, 0.8 * L
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if volume(mid) > target else (lo, mid)
    tail = 0.5 * (lo + hi)
    mesh = revolution_mesh(lambda s: hull_radius(s, L, R, nose, tail), L)
    # Exact volume match on the faceted surface: volume scales with the radius squared.
    v = mesh.vertices.copy()
    v[:, 1:] *= math.sqrt(target / mesh.volume())
    mesh = HullMesh(v, mesh.triangles)
    return mesh.transformed(translation=(-mesh.centroid()[0], 0.0, 0.0))


# --------------------------------------------------------------------------
# Canyon path


def canyon_control_points() -> np.ndarray:
    """Degree-7 guide curve loosely following a winding submarine-canyon thalweg."""
    return np.array([
        [0.0, 0.0, 50.0],
        [300.0, 20.0, 50.0],
        [600.0, 180.0, 58.0],
        [900.0, -150.0, 70.0],
        [1200.0, 160.0, 64.0],
        [1500.0, -60.0, 56.0],
        [1800.0, 40.0, 52.0],
        [2100.0, 60.0, 50.0],
    ])


def path_length(points, n=4000):
    from .path_geometry import de_casteljau
    pts = np.array([de_casteljau(points, t) for t in np.linspace(0.0, 1.0, n)])
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def canyon_path_document(speed: float = 4.0) -> dict:
    pts = canyon_control_points()
    T_f = round(path_length(pts) / speed, 1)
    return {
        "schema_version": SCHEMA_VERSION,
        "label": "SYNTHETIC canyon-approximation path",
        "control_points": {"values": pts.tolist(), "unit": "m"},
        "T_f": {"value": T_f, "unit": "s"},
        "frame_samples": 512,
    }


def sample_config() -> dict:
    """Stock scenario configuration referencing the shipped assets."""
    p = FULL_SCALE
    return {
        "schema_version": SCHEMA_VERSION,
        "vehicle": {
            "length": {"value": p.length, "unit": "m"},
            "beam": {"value": p.beam, "unit": "m"},
            "depth_to_sail_top": {"value": p.depth_to_sail_top, "unit": "m"},
            "displacement": {"value": p.displacement / 1000.0, "unit": "t"},
            "xg_from_nose": {"value": p.xg_from_nose, "unit": "m"},
            "zg_below_axis": {"value": p.zg_below_axis, "unit": "m"},
            "gyration_radii": {"values": list(p.radii), "unit": "m"},
        },
        "coefficients": "coefficients_synthetic.json",
        "mesh": "hull.stl",
        "environment": {
            "rho": {"value": 1025.0, "unit": "kg/m^3"},
            "g": {"value": 9.81, "unit": "m/s^2"},
        },
        "wave": {
            "amplitude": {"value": 0.0, "unit": "m"},
            "wavelength": {"value": 150.0, "unit": "m"},
            "heading": {"value": 0.0, "unit": "deg"},
        },
        "autopilot": {
            "depth_weight": 0.02, "pitch_weight": 1.0, "lateral_weight": 0.0, "yaw_weight": 1.0,
            "vertical": [1.0, 0.0, 2.0], "horizontal": [1.5, 0.0, 6.0],
            "saturation": {"value": 20.0, "unit": "deg"},
            "rate_limit": {"value": 10.0, "unit": "deg/s"},
        },
        "pf": {
            "k_gamma": 0.1, "k_R": 0.08, "d": {"value": 80.0, "unit": "m"}, "c": 0.1,
            "c1": {"value": 40.0, "unit": "m"}, "lambda": 1e-5, "delta_lambda": 0.5,
            "v_min": {"value": 3.0, "unit": "m/s"},
            "omega_c_max": {"value": 3.0, "unit": "deg/s"},
        },
        "l1": {
            "omega_n": {"values": [0.5, 0.5], "unit": "rad/s"},
            "zeta": [0.9, 0.9],
            "zero": {"values": [1.0, 1.0], "unit": "rad/s"},
            "bandwidth": {"value": 2.0, "unit": "rad/s"},
            "T_s": {"value": 0.05, "unit": "s"},
        },
        "rate_autopilot": {"pitch": [40.0, 0.0, 0.0], "yaw": [40.0, 0.0, 0.0]},
        "sim": {
            "dt": {"value": 0.05, "unit": "s"},
            "duration": {"value": 200.0, "unit": "s"},
            "decimation": 1,
            "mesh_buoyancy": False,
        },
        "scenario": {
            "speed": {"value": 4.0, "unit": "m/s"},
            "depth": {"value": 50.0, "unit": "m"},
            "path": "canyon_path.json",
        },
    }


def write_sample_assets(directory=DATA_DIR) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_json(synthetic_coefficients(), d / "coefficients_synthetic.json")
    write_json(canyon_path_document(), d / "canyon_path.json")
    write_json(sample_config(), d / "sample_config.json")
    write_ascii_stl(synthetic_hull(), d / "hull.stl", name="synthetic_hull")


if __name__ == "__main__":
    write_sample_assets()
