import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from bb2rom.events import EmergenceError, EventLog, MeshError
from bb2rom.rigid_body import VehicleState, rotation_matrix
from bb2rom.wave_hydrostatics import (
    HullMesh,
    WaveField,
    icosphere,
    integrate_pressure_loads,
    inertial_to_wave,
    neutral_buoyancy_weight,
    read_ascii_stl,
    wave_pressure,
    write_ascii_stl,
)

RHO, G = 1025.0, 9.81


def box(a=2.0, b=1.0, c=0.5):
    v = np.array([[x, y, z] for x in (-a, a) for y in (-b, b) for z in (-c, c)])
    # outward winding for each face (two triangles per face)
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a0, a1, a2, a3 in quads:
        tris += [(a0, a1, a2), (a0, a2, a3)]
    return HullMesh(v, tris).oriented_outward()


@pytest.fixture(scope="module")
def sphere():
    return icosphere(3, 2.0)


def test_still_water_pressure():
    wf = WaveField(0.0)
    assert wave_pressure(0.0, -10.0, 3.0, wf) == pytest.approx(RHO * G * 10.0)


def test_surface_pressure_at_crest():
    wf = WaveField.deep_water(1.5, wavelength=80.0)
    x = (math.pi / 2) / wf.k
    assert wave_pressure(x, 0.0, 0.0, wf) == pytest.approx(RHO * G * 1.5)


def test_dynamic_pressure_decays_exponentially():
    wf = WaveField.deep_water(1.0, wavelength=60.0)
    x = (math.pi / 2) / wf.k
    p1 = wave_pressure(x, -5.0, 0.0, wf) - RHO * G * 5.0
    p2 = wave_pressure(x, -17.0, 0.0, wf) - RHO * G * 17.0
    assert p2 / p1 == pytest.approx(math.exp(wf.k * (-17.0 + 5.0)), rel=1e-12)


def test_pressure_above_surface_rejected():
    with pytest.raises(EmergenceError):
        wave_pressure(0.0, 0.1, 0.0, WaveField())


def test_dispersion_check_and_override():
    with pytest.raises(ValueError):
        WaveField(1.0, k=0.1, omega=2.0)
    log = EventLog()
    wf = WaveField.overridden(1.0, 0.1, 2.0, log)
    assert wf.dispersion_override and log.has("W_DISPERSION")
    wf = WaveField.deep_water(1.0, period=10.0)
    assert wf.period == pytest.approx(10.0)
    assert wf.omega**2 == pytest.approx(G * wf.k)


def test_wave_coordinates_flip_depth():
    wf = WaveField(0.0, heading=math.pi / 2)
    x, z = inertial_to_wave(np.array([[1.0, 2.0, 30.0]]), wf)
    assert x[0] == pytest.approx(2.0) and z[0] == -30.0


def test_closed_box_volume_and_centroid():
    m = box().transformed(translation=[1.0, -2.0, 0.5])
    assert m.volume() == pytest.approx(8.0)
    np.testing.assert_allclose(m.centroid(), [1.0, -2.0, 0.5], atol=1e-12)
    assert m.closure_residual() < 1e-12


def test_constant_pressure_gives_no_net_force(sphere):
    np.testing.assert_allclose(sphere.area_vectors.sum(axis=0), 0, atol=1e-12)


def test_archimedes_equals_mesh_volume(sphere):
    pose = VehicleState(position=[0, 0, 30.0])
    F = integrate_pressure_loads(sphere, pose, WaveField(0.0), 0.0)
    np.testing.assert_allclose(F[:3], [0, 0, -RHO * G * sphere.volume()], rtol=1e-12, atol=1e-6)
    np.testing.assert_allclose(F[3:], 0, atol=1e-6 * abs(F[2]))
    assert neutral_buoyancy_weight(sphere) == pytest.approx(RHO * G * sphere.volume(), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(10, 200))
def test_calm_buoyancy_is_translation_invariant(x, y, z):
    m = box()
    F = integrate_pressure_loads(m, VehicleState(position=[x, y, z]), WaveField(0.0), 0.0)
    np.testing.assert_allclose(F[:3], [0, 0, -RHO * G * 8.0], rtol=1e-10, atol=1e-6)


def test_refinement_does_not_change_calm_buoyancy():
    m = box()
    pose = VehicleState(position=[0, 0, 20.0])
    a = integrate_pressure_loads(m, pose, WaveField(0.0), 0.0)
    b = integrate_pressure_loads(m.refined(), pose, WaveField(0.0), 0.0)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-6)


def test_scaling_volume_by_eight():
    m = box()
    pose = VehicleState(position=[0, 0, 40.0])
    a = integrate_pressure_loads(m, pose, WaveField(0.0), 0.0)
    b = integrate_pressure_loads(m.transformed(scale=2.0), pose, WaveField(0.0), 0.0)
    assert b[2] == pytest.approx(8.0 * a[2], rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-3.0, 3.0))
def test_calm_buoyancy_vertical_for_any_attitude(phi, theta, psi):
    m = box()
    att = np.array([phi, theta, psi])
    F = integrate_pressure_loads(m, VehicleState([0, 0, 30.0], att), WaveField(0.0), 0.0)
    np.testing.assert_allclose(rotation_matrix(*att) @ F[:3], [0, 0, -RHO * G * 8.0], rtol=1e-10, atol=1e-5)


def test_offset_buoyancy_moment_is_lever_arm():
    m = box().transformed(translation=[3.0, 0.0, -0.5])
    F = integrate_pressure_loads(m, VehicleState([0, 0, 30.0]), WaveField(0.0), 0.0)
    np.testing.assert_allclose(F[3:], np.cross([3.0, 0, -0.5], F[:3]), rtol=1e-10, atol=1e-5)


def test_yaw_and_heading_frames_agree(sphere):
    ell = sphere.transformed(rotation=np.diag([3.0, 1.0, 0.7]))
    wf0 = WaveField.deep_water(1.0, wavelength=50.0, heading=0.0)
    psi = 0.7
    wf1 = WaveField.deep_water(1.0, wavelength=50.0, heading=psi)
    a = integrate_pressure_loads(ell, VehicleState([0, 0, 15.0], [0, 0, 0]), wf0, 1.3)
    b = integrate_pressure_loads(ell, VehicleState([0, 0, 15.0], [0, 0, psi]), wf1, 1.3)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-6 * np.abs(a).max())


def test_wave_loads_linear_in_amplitude(sphere):
    ell = sphere.transformed(rotation=np.diag([4.0, 1.0, 1.0]))
    pose = VehicleState([5.0, 0, 20.0], [0, 0.05, 0])
    calm = integrate_pressure_loads(ell, pose, WaveField.deep_water(0.0, wavelength=70.0), 2.0)
    d1 = integrate_pressure_loads(ell, pose, WaveField.deep_water(1.0, wavelength=70.0), 2.0) - calm
    d2 = integrate_pressure_loads(ell, pose, WaveField.deep_water(2.5, wavelength=70.0), 2.0) - calm
    np.testing.assert_allclose(d2, 2.5 * d1, rtol=1e-9, atol=1e-9 * np.abs(d2).max())


def test_emerged_hull_raises(sphere):
    with pytest.raises(EmergenceError):
        integrate_pressure_loads(sphere, VehicleState([0, 0, 1.0]), WaveField(0.0), 0.0)


def test_open_mesh_rejected(sphere):
    with pytest.raises(MeshError) as exc:
        HullMesh(sphere.vertices, sphere.triangles[1:])
    assert exc.value.code == "E_MESH_OPEN"
    with pytest.raises(MeshError) as exc:
        HullMesh(sphere.vertices, np.array([[0, 1, 10**6]]))
    assert exc.value.code == "E_MESH_INDEX"


def test_icosphere_counts_and_orientation():
    m = icosphere(2, 1.0)
    assert m.n_elements == 320
    assert m.volume() > 0
    assert m.volume() == pytest.approx(4 / 3 * math.pi, rel=0.05)


def test_stl_round_trip(tmp_path, sphere):
    rot = Rotation.from_euler("xyz", [0.3, -0.2, 1.1]).as_matrix()
    m = sphere.transformed(rotation=rot, translation=[0.1, 0.2, 0.3])
    p = tmp_path / "hull.stl"
    write_ascii_stl(m, p)
    log = EventLog()
    back = read_ascii_stl(p, log)
    assert back.n_elements == m.n_elements
    np.testing.assert_array_equal(back.vertices[back.triangles], m.vertices[m.triangles])
    assert not log.codes()


def test_stl_flipped_normals_warn(tmp_path):
    m = box()
    p = tmp_path / "box.stl"
    write_ascii_stl(m, p)
    lines = p.read_text().splitlines()
    n = -m.area_vectors[0] / np.linalg.norm(m.area_vectors[0])
    lines[1] = "  facet normal " + " ".join(repr(float(c)) for c in n)
    p.write_text("\n".join(lines))
    log = EventLog()
    read_ascii_stl(p, log)
    assert log.has("W_NORMAL_MISMATCH")
