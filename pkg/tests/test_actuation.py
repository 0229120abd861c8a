import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bb2rom.actuation import (
    ALLOCATION,
    ActuatorState,
    Autopilot,
    AutopilotGains,
    PIDChannel,
    RateAutopilot,
    ZigzagScheduler,
    actuator_update,
    allocate,
    autopilot_step,
)
from bb2rom.rigid_body import VehicleState

DEG = math.pi / 180


def test_allocation_unit_commands():
    np.testing.assert_array_equal(allocate(1.0, 0.0), [-1, -1, 1, 1, -1])
    np.testing.assert_array_equal(allocate(0.0, 1.0), [-1, 1, 1, -1, 0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_allocation_matches_matrix_and_stern_sum(dv, dh):
    d = allocate(dv, dh)
    np.testing.assert_allclose(d, ALLOCATION @ [dv, dh], atol=1e-15)
    assert abs(d[:4].sum()) < 1e-12


def test_rate_limit_moves_exactly_one_step():
    act = ActuatorState()
    new = actuator_update(act, np.full(5, 20 * DEG), 0.05)
    np.testing.assert_allclose(new.deflections, 10 * DEG * 0.05)


def test_small_command_reached_in_one_step():
    act = actuator_update(ActuatorState(), np.full(5, 0.1 * DEG), 0.05)
    np.testing.assert_allclose(act.deflections, 0.1 * DEG)


def test_position_limit_settles():
    act = ActuatorState()
    for _ in range(200):
        act = actuator_update(act, np.array([50, -50, 10, 0, 31]) * DEG, 0.05)
    np.testing.assert_allclose(act.deflections, np.array([30, -30, 10, 0, 30]) * DEG)
    assert np.all(np.abs(act.deflections) <= act.position_limit)


def test_actuator_rejects_bad_dt():
    with pytest.raises(ValueError):
        actuator_update(ActuatorState(), np.zeros(5), 0.0)


def test_pid_proportional_and_saturation():
    c = PIDChannel(kp=2.0, saturation=0.5)
    assert c.step(0.1, 0.1) == pytest.approx(0.2)
    assert c.step(1.0, 0.1) == 0.5
    assert c.step(-1.0, 0.1) == -0.5


def test_pid_integral_windup_is_bounded():
    c = PIDChannel(kp=0.0, ki=0.5, saturation=0.3)
    for _ in range(10000):
        out = c.step(1.0, 0.1)
    assert out == pytest.approx(0.3)
    assert c.integral == pytest.approx(0.3 / 0.5)
    # recovers as soon as the error reverses instead of unwinding a huge integral
    out = c.step(-1.0, 0.1)
    assert out < 0.3


def test_pid_derivative_uses_previous_error():
    c = PIDChannel(kd=1.0, saturation=10.0)
    assert c.step(1.0, 0.1) == 0.0
    assert c.step(1.5, 0.1) == pytest.approx(5.0)
    c.reset()
    assert c.previous is None and c.integral == 0.0


def test_autopilot_error_signs():
    g = AutopilotGains(vertical=(1.0, 0.0, 0.0), horizontal=(1.0, 0.0, 0.0))
    ap = Autopilot(g)
    # too shallow (z < target): positive delta_V pitches the bow down
    s = VehicleState(position=[0, 0, 90.0])
    dv, dh = ap.step(s, {"depth": 100.0, "pitch": 0.0, "yaw": 0.0}, 0.05)
    assert dv > 0 and dh == 0.0
    # yawed to starboard: positive delta_H turns to port
    s = VehicleState(position=[0, 0, 100.0], attitude=[0, 0, 0.1])
    dv, dh = autopilot_step(s, {"depth": 100.0, "yaw": 0.0}, g, 0.05)
    assert dh > 0 and dv == 0.0


def test_autopilot_lateral_term():
    g = AutopilotGains(lateral_weight=0.1, yaw_weight=0.0, horizontal=(1.0, 0, 0))
    s = VehicleState(position=[0, 2.0, 100.0])
    _, e_h = Autopilot(g).errors(s, {"yaw": 0.0, "lateral": 0.0})
    assert e_h == pytest.approx(0.2)


def test_rate_autopilot():
    ra = RateAutopilot(pitch=(40.0, 0, 0), yaw=(40.0, 0, 0))
    dv, dh = ra.step(0.01, -0.002, 0.0, 0.0, 0.05)
    assert dv == pytest.approx(0.4) and dh == pytest.approx(-0.08)


def test_gains_must_be_finite():
    with pytest.raises(ValueError):
        AutopilotGains(vertical=(float("nan"), 0, 0))


def test_zigzag_schedule():
    z = ZigzagScheduler(10 * DEG, 10 * DEG)
    assert z.command(0.0, 0.0) == pytest.approx(-10 * DEG)
    assert z.command(9.9 * DEG, 1.0) == pytest.approx(-10 * DEG)
    assert z.command(10 * DEG, 2.0) == pytest.approx(10 * DEG)
    assert z.command(0.0, 3.0) == pytest.approx(10 * DEG)
    assert z.command(-10 * DEG, 4.0) == pytest.approx(-10 * DEG)
    signs = [np.sign(s[2]) for s in z.switches]
    assert signs == [1.0, -1.0]
    assert [s[0] for s in z.switches] == [2.0, 4.0]


def test_zigzag_mirror_start_and_bad_axis():
    z = ZigzagScheduler(10 * DEG, 5 * DEG, axis="horizontal", initial_sign=1.0)
    assert z.command(0.0) == pytest.approx(10 * DEG)
    assert z.command(-5 * DEG) == pytest.approx(-10 * DEG)
    with pytest.raises(ValueError):
        ZigzagScheduler(axis="diagonal")
