import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bb2rom.events import ConfigurationError, SingularityError
from bb2rom.rigid_body import (
    MassProperties,
    VehicleState,
    build_mass_matrix,
    coupling_acceleration_matrix,
    coupling_vector,
    coupling_velocity_terms,
    euler_from_rotation,
    euler_kinematics,
    gravity_direction_body,
    hydrostatic_potential,
    hydrostatic_restoring,
    rotation_matrix,
    wrap_angle,
)
from bb2rom.vehicle import FULL_SCALE, MODEL_SCALE

angles = st.floats(-1.2, 1.2)


def make_mp(cg=(0.0, 0.0, 0.0), cb=None, W=None, B=None, m=1000.0):
    return MassProperties.from_gyration(m, cg, (0.5, 2.0, 2.1), cb=cb, W=W, B=B,
                                        products=(3.0, -2.0, 5.0))


def test_mass_matrix_block_diagonal_without_cg_offset():
    mp = MODEL_SCALE.mass_properties()
    mp = MassProperties.from_gyration(mp.m, (0, 0, 0), MODEL_SCALE.radii)
    M = build_mass_matrix(mp)
    assert np.all(M[:3, 3:] == 0) and np.all(M[3:, :3] == 0)
    np.testing.assert_allclose(np.diag(M)[:3], 701.2)
    assert M[3, 3] == pytest.approx(701.2 * 0.1871**2, rel=1e-12)
    assert M[4, 4] == pytest.approx(701.2 * 0.9592**2, rel=1e-12)


def test_mass_matrix_cg_entries():
    mp = make_mp(cg=(0.3, -0.2, 0.1))
    M = build_mass_matrix(mp)
    np.testing.assert_allclose(M, M.T)
    assert M[0, 4] == pytest.approx(1000.0 * 0.1)
    assert M[1, 5] == pytest.approx(1000.0 * 0.3)
    assert M[0, 5] == pytest.approx(-1000.0 * -0.2)
    # products of inertia enter with a minus sign
    assert M[3, 4] == -3.0 and M[4, 5] == 2.0 and M[3, 5] == -5.0


def test_invalid_inertia_rejected():
    with pytest.raises(ConfigurationError):
        MassProperties(1.0, np.zeros(3), np.zeros(3), np.diag([1.0, -1.0, 1.0]), 9.81, 9.81)
    with pytest.raises(ConfigurationError):
        MassProperties(-1.0, np.zeros(3), np.zeros(3), np.eye(3), 9.81, 9.81)


def test_coupling_vector_zero_at_rest():
    mp = make_mp(cg=(0.1, 0.2, 0.3))
    np.testing.assert_array_equal(coupling_vector(mp, np.zeros(6), np.zeros(6)), np.zeros(6))


def test_pure_yaw_coupling():
    mp = make_mp(cg=(0.4, 0.0, 0.0))
    r = 0.3
    b = coupling_vector(mp, [0, 0, 0, 0, 0, r], np.zeros(6))
    np.testing.assert_allclose(b, [-1000.0 * 0.4 * r * r, 0, 0, 0, 0, 0], atol=1e-12)


def test_pure_surge_coupling_is_zero():
    b = coupling_vector(make_mp(), [3.0, 0, 0, 0, 0, 0], np.zeros(6))
    np.testing.assert_array_equal(b, np.zeros(6))


def test_acceleration_matrix_matches_mass_matrix_offdiagonal_block():
    mp = make_mp(cg=(0.1, -0.2, 0.3))
    B = coupling_acceleration_matrix(mp)
    M = build_mass_matrix(mp)
    np.testing.assert_allclose(B[:3, 3:], M[:3, 3:])
    np.testing.assert_allclose(B[3:, :3], M[3:, :3])
    np.testing.assert_array_equal(B[:3, :3], 0)
    np.testing.assert_array_equal(B[3:, 3:], 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=12, max_size=12), st.floats(-3, 3))
def test_split_is_exact_and_velocity_part_quadratic(vals, lam):
    mp = make_mp(cg=(0.1, -0.05, 0.2))
    s, sd = np.array(vals[:6]), np.array(vals[6:])
    full = coupling_vector(mp, s, sd)
    split = coupling_velocity_terms(mp, s) + coupling_acceleration_matrix(mp) @ sd
    np.testing.assert_allclose(full, split, rtol=0, atol=1e-9)
    np.testing.assert_allclose(coupling_velocity_terms(mp, lam * s),
                               lam**2 * coupling_velocity_terms(mp, s), rtol=1e-9, atol=1e-8)


def test_velocity_coupling_does_no_work(rng):
    mp = make_mp(cg=(0.1, -0.05, 0.2))
    for _ in range(20):
        s = rng.normal(size=6)
        assert abs(s @ coupling_velocity_terms(mp, s)) < 1e-9


def test_restoring_zero_when_neutral_and_coincident():
    mp = make_mp(cg=(0.1, 0.2, 0.3), cb=(0.1, 0.2, 0.3))
    np.testing.assert_allclose(hydrostatic_restoring(mp, 0.4, -0.3), 0, atol=1e-9)


def test_restoring_heave_only_when_heavy():
    mp = make_mp(W=12000.0, B=10000.0)
    np.testing.assert_allclose(hydrostatic_restoring(mp, 0.0, 0.0), [0, 0, 2000.0, 0, 0, 0])


def test_restoring_moments_level():
    F = 9000.0
    cg, cb = np.array([0.3, 0.2, 0.1]), np.array([-0.1, 0.05, -0.2])
    mp = make_mp(cg=cg, cb=cb, W=F, B=F)
    out = hydrostatic_restoring(mp, 0.0, 0.0)
    np.testing.assert_allclose(out[3:], [(cg[1] - cb[1]) * F, -(cg[0] - cb[0]) * F, 0.0], atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_restoring_force_rows_vanish_when_neutral(phi, theta):
    mp = make_mp(cg=(0.2, 0.1, 0.3), cb=(-0.1, 0.0, 0.0))
    np.testing.assert_allclose(hydrostatic_restoring(mp, phi, theta)[:3], 0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_restoring_moment_is_lever_cross_gravity(phi, theta):
    mp = make_mp(cg=(0.2, 0.1, 0.3), cb=(-0.1, 0.05, -0.1), W=9000.0, B=8500.0)
    g = gravity_direction_body(phi, theta)
    ref = np.cross(mp.cg, mp.W * g) - np.cross(mp.cb, mp.B * g)
    np.testing.assert_allclose(hydrostatic_restoring(mp, phi, theta)[3:], ref, atol=1e-8)


def test_pitch_and_roll_restore_with_low_cg():
    mp = make_mp(cg=(0, 0, 0.05), cb=(0, 0, 0))
    assert hydrostatic_restoring(mp, 0.0, 0.02)[4] < 0
    assert hydrostatic_restoring(mp, 0.0, -0.02)[4] > 0
    assert hydrostatic_restoring(mp, 0.02, 0.0)[3] < 0


def test_potential_gradient_matches_restoring_moment():
    mp = make_mp(cg=(0, 0, 0.05))
    h = 1e-6
    phi, theta = 0.2, 0.1
    dV_dphi = (hydrostatic_potential(mp, phi + h, theta) - hydrostatic_potential(mp, phi - h, theta)) / (2 * h)
    # at theta != 0 the roll generalized force is K alone
    assert dV_dphi == pytest.approx(-hydrostatic_restoring(mp, phi, theta)[3], rel=1e-6)


def test_kinematics_examples():
    p, a = euler_kinematics(VehicleState(velocity=[2.0, 0, 0, 0, 0, 0]))
    np.testing.assert_allclose(p, [2, 0, 0]); np.testing.assert_allclose(a, 0)
    _, a = euler_kinematics(VehicleState(velocity=[0, 0, 0, 0, 0, 0.3]))
    np.testing.assert_allclose(a, [0, 0, 0.3])
    p, _ = euler_kinematics(VehicleState(attitude=[0, 0, math.pi / 2], velocity=[2.0, 0, 0, 0, 0, 0]))
    np.testing.assert_allclose(p, [0, 2, 0], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(angles, angles, st.floats(-3.1, 3.1), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_kinematics_preserves_speed(phi, theta, psi, u, v, w):
    p, _ = euler_kinematics(VehicleState(attitude=[phi, theta, psi], velocity=[u, v, w, 0, 0, 0]))
    assert np.linalg.norm(p) == pytest.approx(math.sqrt(u * u + v * v + w * w), rel=1e-12, abs=1e-12)


def test_kinematics_singularity_guard():
    with pytest.raises(SingularityError):
        euler_kinematics(VehicleState(attitude=[0, math.radians(89.5), 0]))


def test_rotation_roundtrip(rng):
    for _ in range(20):
        e = rng.uniform([-3, -1.4, -3], [3, 1.4, 3])
        R = rotation_matrix(*e)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(euler_from_rotation(R), e, atol=1e-10)


def test_wrap_angle():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_vehicle_particulars():
    assert FULL_SCALE.length == 70.2
    mp = FULL_SCALE.mass_properties()
    assert mp.W == mp.B == pytest.approx(4440.0e3 * 9.81)
    assert mp.cg[2] == 0.0443
    assert FULL_SCALE.sail_top_depth(FULL_SCALE.origin_depth(25.0)) == pytest.approx(25.0)
