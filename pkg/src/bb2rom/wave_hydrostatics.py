"""Buoyancy and regular-wave loads by pressure integration over a hull mesh.

Pressure is sampled at the three edge midpoints of every triangle, which
integrates pressure fields linear in position exactly (and first moments
of them too). The wave field is a deep-water progressive regular wave whose
pressure ignores the presence of the hull.

Frame note: the simulator's inertial z axis points down (depth positive),
while the wave pressure formula uses z pointing up from the calm surface.
:func:`inertial_to_wave` is the one place where that sign map lives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import EmergenceError, EventLog, MeshError, record
from .rigid_body import VehicleState, rotation_matrix


class HullMesh:
    """Closed triangulated surface in body axes with cached quadrature data."""

    def __init__(self, vertices, triangles, closure_tol=1e-6, check=True):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        nv = len(self.vertices)
        if len(self.triangles) == 0:
            raise MeshError("mesh has no triangles", code="E_MESH_INDEX")
        if self.triangles.min() < 0 or self.triangles.max() >= nv:
            raise MeshError("triangle vertex index out of range", code="E_MESH_INDEX")
        v0 = self.vertices[self.triangles[:, 0]]
        v1 = self.vertices[self.triangles[:, 1]]
        v2 = self.vertices[self.triangles[:, 2]]
        self.area_vectors = 0.5 * np.cross(v1 - v0, v2 - v0)
        self.areas = np.linalg.norm(self.area_vectors, axis=1)
        # Edge midpoints r12, r23, r31, shape (n, 3, 3).
        self.gauss_points = np.stack([0.5 * (v0 + v1), 0.5 * (v1 + v2), 0.5 * (v2 + v0)], axis=1)
        self.total_area = float(self.areas.sum())
        if check:
            self.validate(closure_tol)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    def closure_residual(self) -> float:
        return float(np.linalg.norm(self.area_vectors.sum(axis=0)))

    def validate(self, closure_tol=1e-6):
        mean = self.total_area / self.n_elements
        if np.any(self.areas <= 1e-12 * mean):
            raise MeshError("degenerate (zero-area) triangle", code="E_MESH_INDEX")
        res = self.closure_residual()
        if res > closure_tol * self.total_area:
            raise MeshError(
                f"mesh is not closed: |sum A_i| = {res:.3e} > {closure_tol:g} * area",
                code="E_MESH_OPEN", context={"residual": res, "total_area": self.total_area})

    def volume(self) -> float:
        c = self.gauss_points.mean(axis=1)
        return float(np.einsum("ij,ij->", c, self.area_vectors) / 3.0)

    def centroid(self) -> np.ndarray:
        """Volume centroid by the divergence theorem."""
        # Integral of x_k^2 n_k / 2 over the surface; midpoint rule is exact for quadratics.
        sq = (self.gauss_points ** 2).mean(axis=1)
        return 0.5 * np.einsum("ij,ij->j", sq, self.area_vectors) / self.volume()

    def oriented_outward(self) -> "HullMesh":
        if self.volume() >= 0:
            return self
        return HullMesh(self.vertices, self.triangles[:, ::-1], check=False)

    def transformed(self, scale=1.0, rotation=None, translation=None) -> "HullMesh":
        v = self.vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return HullMesh(v, self.triangles, check=False)

    def refined(self) -> "HullMesh":
        """Split every triangle into four at the edge midpoints."""
        verts = list(self.vertices)

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                cache[key] = len(verts)
                verts.append(0.5 * (self.vertices[a] + self.vertices[b]))
            return cache[key]

        cache: dict = {}
        tris = []
        for a, b, c in self.triangles:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        return HullMesh(np.array(verts), np.array(tris), check=False)


# --------------------------------------------------------------------------
# Mesh files (ASCII STL)


def read_ascii_stl(path, log: EventLog | None = None, closure_tol=1e-6) -> HullMesh:
    text = Path(path).read_text()
    verts: list = []
    index: dict = {}
    tris = []
    normals = []
    cur: list = []
    normal = None
    for raw in text.splitlines():
        tok = raw.split()
        if not tok:
            continue
        if tok[0] == "facet":
            normal = np.array([float(x) for x in tok[2:5]])
            cur = []
        elif tok[0] == "vertex":
            key = (float(tok[1]), float(tok[2]), float(tok[3]))
            if key not in index:
                index[key] = len(verts)
                verts.append(key)
            cur.append(index[key])
        elif tok[0] == "endfacet":
            if len(cur) != 3:
                raise MeshError(f"facet with {len(cur)} vertices", code="E_MESH_INDEX")
            tris.append(cur)
            normals.append(normal)
    if not tris:
        raise MeshError(f"no facets found in {path}", code="E_MESH_INDEX")
    mesh = HullMesh(np.array(verts), np.array(tris), closure_tol=closure_tol)
    given = np.array(normals)
    dots = np.einsum("ij,ij->i", given, mesh.area_vectors)
    if np.any((np.linalg.norm(given, axis=1) > 0) & (dots < 0)):
        record(log, "W_NORMAL_MISMATCH",
               f"{int(np.sum(dots < 0))} facet normals disagree with winding; winding used")
    return mesh


def write_ascii_stl(mesh: HullMesh, path, name="hull"):
    lines = [f"solid {name}"]
    for tri, A in zip(mesh.triangles, mesh.area_vectors):
        n = A / np.linalg.norm(A)
        lines.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}")
        lines.append("    outer loop")
        for k in tri:
            x, y, z = mesh.vertices[k]
            lines.append(f"      vertex {float(x)!r} {float(y)!r} {float(z)!r}")
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    Path(path).write_text("\n".join(lines) + "\n")


def icosphere(subdivisions: int = 4, radius: float = 1.0) -> HullMesh:
    """Geodesic sphere with ``20 * 4**subdivisions`` outward-wound triangles."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache: dict = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    mesh = HullMesh(np.array(verts) * radius, np.array(faces), check=False).oriented_outward()
    mesh.validate()
    return mesh


# --------------------------------------------------------------------------
# Wave field


@dataclass(frozen=True)
class WaveField:
    amplitude: float = 0.0
    k: float = 2.0 * math.pi / 100.0
    omega: float = math.sqrt(9.81 * 2.0 * math.pi / 100.0)
    heading: float = 0.0
    phase_origin: float = 0.0
    rho: float = 1025.0
    g: float = 9.81
    dispersion_override: bool = False

    def __post_init__(self):
        if self.amplitude < 0 or not self.k > 0 or not self.omega > 0:
            raise ValueError("wave field needs amplitude >= 0, k > 0, omega > 0")
        if not self.dispersion_override:
            if abs(self.omega**2 - self.g * self.k) > 1e-9 * self.g * self.k:
                raise ValueError(
                    "omega^2 != g k; pass dispersion_override=True to allow a non-deep-water pair")

    @classmethod
    def deep_water(cls, amplitude, wavelength=None, period=None, heading=0.0, rho=1025.0,
                   g=9.81, phase_origin=0.0):
        if (wavelength is None) == (period is None):
            raise ValueError("give exactly one of wavelength or period")
        if wavelength is not None:
            k = 2.0 * math.pi / wavelength
            omega = math.sqrt(g * k)
        else:
            omega = 2.0 * math.pi / period
            k = omega**2 / g
        return cls(amplitude, k, omega, heading, phase_origin, rho, g)

    @classmethod
    def overridden(cls, amplitude, k, omega, log: EventLog | None = None, **kw):
        record(log, "W_DISPERSION", f"omega={omega} k={k} violates deep-water dispersion")
        return cls(amplitude, k, omega, dispersion_override=True, **kw)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def calm(self) -> "WaveField":
        return WaveField(0.0, self.k, self.omega, self.heading, self.phase_origin, self.rho,
                         self.g, self.dispersion_override)


def inertial_to_wave(points, wf: WaveField):
    """Map inertial points (z down) to wave coordinates ``(x_along_heading, z_up)``."""
    P = np.asarray(points, dtype=float)
    x = P[..., 0] * math.cos(wf.heading) + P[..., 1] * math.sin(wf.heading) - wf.phase_origin
    return x, -P[..., 2]


def wave_pressure(x, z, t, wf: WaveField):
    z = np.asarray(z, dtype=float)
    if np.any(z > 0):
        raise EmergenceError("pressure requested above the calm-water surface")
    rg = wf.rho * wf.g
    return -rg * z + rg * wf.amplitude * np.exp(wf.k * z) * np.sin(wf.k * np.asarray(x) - wf.omega * t)


def integrate_pressure_loads(mesh: HullMesh, pose: VehicleState, wf: WaveField, t: float):
    """Body-axes force and moment (about the body origin) from the pressure field."""
    R = rotation_matrix(*pose.attitude)
    gp = mesh.gauss_points.reshape(-1, 3)
    P = gp @ R.T + pose.position
    xw, zw = inertial_to_wave(P, wf)
    if np.any(zw > 0):
        k = int(np.argmax(zw))
        raise EmergenceError(
            f"hull point {zw[k]:.3f} m above calm surface",
            context={"position": pose.position.tolist(), "attitude": pose.attitude.tolist()})
    p = wave_pressure(xw, zw, t, wf).reshape(-1, 3)
    # Pressure acts along the inertial frame; area vectors and points stay in body axes.
    F = -(1.0 / 3.0) * (p.sum(axis=1)[:, None] * mesh.area_vectors).sum(axis=0)
    rp = (mesh.gauss_points * p[:, :, None]).sum(axis=1)
    M = -(1.0 / 3.0) * np.cross(rp, mesh.area_vectors).sum(axis=0)
    return np.concatenate([F, M])


def neutral_buoyancy_weight(mesh: HullMesh, rho: float = 1025.0, g: float = 9.81) -> float:
    mesh.validate()
    depth = 1.0 + float(np.ptp(mesh.vertices, axis=0).max()) - float(mesh.vertices[:, 2].min())
    pose = VehicleState(position=[0.0, 0.0, depth])
    wf = WaveField(0.0, rho=rho, g=g)
    return float(np.linalg.norm(integrate_pressure_loads(mesh, pose, wf, 0.0)[:3]))
