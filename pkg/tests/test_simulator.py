import math
from dataclasses import replace

import numpy as np
import pytest

from oddrive.config import build_control_stack, default_config
from oddrive.drive_models import BodyTwist
from oddrive.mecanum import Geometry, wheels_from_body
from oddrive.scenarios import Scenario, get_scenario
from oddrive.simulator import (ActuatorModel, Disturbance, PendulumParams,
                               PlatformPose, SimConfig, SimulationError,
                               TrajectoryLog, actuator_step, run_closed_loop,
                               run_open_loop, sense, step)

GEOM = Geometry(alpha=(math.atan(1.0), math.atan(-1.0),
                       math.atan(1.0), math.atan(-1.0)))
CFG = SimConfig()


class TestActuator:
    def test_ideal_passthrough(self):
        out = actuator_step([20, 20, 20, 20], [0, 0, 0, 0],
                            ActuatorModel(), 1e-3)
        assert np.allclose(out, 20.0)

    def test_lag_formula(self):
        # backward-Euler lag: delta = target * dt / (tau + dt)
        model = ActuatorModel(ideal=False, time_constant=0.1)
        out = actuator_step([20.0] * 4, [0.0] * 4, model, dt=0.1)
        assert np.allclose(out, 10.0)

    def test_rate_limit(self):
        model = ActuatorModel(rate_limit=15.0)
        out = actuator_step([20.0] * 4, [0.0] * 4, model, dt=1e-3)
        assert np.allclose(out, 15.0)

    def test_accel_limit(self):
        model = ActuatorModel(accel_limit=100.0)
        out = actuator_step([20.0] * 4, [0.0] * 4, model, dt=1e-3)
        assert np.allclose(out, 0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            ActuatorModel(time_constant=0.0)


class TestStep:
    def test_zero_rates_pose_unchanged(self):
        pose = PlatformPose(x=1.0, y=2.0, phi=0.5, d=0.4)
        new = step(pose, [0, 0, 0, 0], GEOM, CFG, dt=1e-3)
        assert new == pose

    def test_pure_rotation_stays_in_place(self):
        rates = wheels_from_body(BodyTwist(0, 0, 1, 0), GEOM, 0.4)
        pose = PlatformPose(d=0.4)
        n = round(2 * math.pi / 1e-3)
        for _ in range(n):
            pose = step(pose, rates, GEOM, CFG, dt=1e-3)
        assert math.hypot(pose.x, pose.y) < 1e-6
        assert pose.phi == pytest.approx(n * 1e-3, abs=1e-9)

    def test_frame_correctness(self):
        # constant body twist (v, 0, 0, 0) starting at heading theta moves
        # the platform along direction theta
        theta = 0.7
        rates = wheels_from_body(BodyTwist(0.5, 0, 0, 0), GEOM, 0.4)
        pose = PlatformPose(phi=theta, d=0.4)
        for _ in range(1000):
            pose = step(pose, rates, GEOM, CFG, dt=1e-3)
        heading = math.atan2(pose.y, pose.x)
        assert heading == pytest.approx(theta, abs=1e-9)
        assert math.hypot(pose.x, pose.y) == pytest.approx(0.5, abs=1e-9)

    def test_spacing_clamped_at_bounds(self):
        rates = wheels_from_body(BodyTwist(0, 0, 0, 0.4), GEOM, 0.79)
        pose = PlatformPose(d=0.79)
        for _ in range(100):
            pose = step(pose, rates, GEOM, CFG, dt=1e-3)
        assert pose.d == GEOM.d_max

    def test_euler_and_rk4_agree_for_straight_motion(self):
        rates = wheels_from_body(BodyTwist(1, 0, 0, 0), GEOM, 0.4)
        poses = []
        for integ in ("euler", "rk4"):
            cfg = replace(CFG, integrator=integ)
            pose = PlatformPose(d=0.4)
            for _ in range(100):
                pose = step(pose, rates, GEOM, cfg, dt=1e-3)
            poses.append(pose)
        assert poses[0].x == pytest.approx(poses[1].x, abs=1e-12)

    def test_pendulum_channel_gravity(self):
        cfg = replace(CFG, pendulum=PendulumParams())
        pose = PlatformPose(d=0.4, pitch=math.radians(1.0))
        new = step(pose, [0, 0, 0, 0], GEOM, cfg, dt=1e-3)
        assert new.pitch_rate > 0.0  # gravity tips it further

    def test_pendulum_accel_rights_it(self):
        cfg = replace(CFG, pendulum=PendulumParams())
        pose = PlatformPose(d=0.4, pitch=math.radians(1.0))
        new = step(pose, [0, 0, 0, 0], GEOM, cfg, dt=1e-3, accel_x=10.0)
        assert new.pitch_rate < 0.0


class TestSense:
    def test_noise_disabled_equals_ground_truth(self):
        pose = PlatformPose(x=1, y=2, phi=0.3, d=0.5,
                            pitch=0.02, pitch_rate=-0.1)
        rates = wheels_from_body(BodyTwist(0.4, 0.1, 0.2, 0.0), GEOM, 0.5)
        r = sense(pose, rates, GEOM, CFG)
        assert r.draw_wire_d == 0.5
        assert r.pitch == 0.02 and r.pitch_rate == -0.1
        assert r.yaw == pytest.approx(0.3)
        assert r.yaw_rate == pytest.approx(0.2, abs=1e-12)
        assert np.allclose(r.encoder_rates, rates)

    def test_yaw_reported_wrapped(self):
        pose = PlatformPose(phi=3 * math.pi, d=0.4)
        r = sense(pose, [0, 0, 0, 0], GEOM, CFG)
        assert r.yaw == pytest.approx(math.pi)

    def test_draw_wire_noise_std(self):
        # seeded statistical oracle: std should approach 0.001 * d
        cfg = replace(CFG, noise_enabled=True)
        rng = np.random.default_rng(42)
        pose = PlatformPose(d=0.5)
        samples = np.array([
            sense(pose, [0, 0, 0, 0], GEOM, cfg, rng).draw_wire_d
            for _ in range(100_000)])
        assert abs(samples.std() - 0.0005) < 0.00005
        assert abs(samples.mean() - 0.5) < 0.0001


class TestOpenLoop:
    def test_constant_velocity_line(self):
        s = Scenario("line", ((1.0, BodyTwist(1, 0, 0, 0)),),
                     PlatformPose(d=0.4))
        log = run_open_loop(s, GEOM, CFG)
        assert log.rows[-1][1] == pytest.approx(1.0, abs=1e-9)
        assert abs(log.rows[-1][2]) < 1e-12

    def test_spacing_ramp(self):
        s = Scenario("ramp", ((1.0, BodyTwist(0, 0, 0, 0.1)),),
                     PlatformPose(d=0.4))
        log = run_open_loop(s, GEOM, CFG)
        assert log.column("d")[-1] == pytest.approx(0.5, abs=1e-9)

    def test_rhombus_vertices(self):
        # piecewise-constant-velocity integration oracle
        s = get_scenario("rhombus")
        log = run_open_loop(s, GEOM, CFG)
        v, t = 0.3, 2.0
        expected = np.array([[0, 0], [v * t, v * t], [0, 2 * v * t],
                             [-v * t, v * t], [0, 0]])
        steps = np.concatenate([[0], np.cumsum(
            [round(dur / CFG.dt) for dur, _ in s.segments])])
        assert np.abs(log.xy[steps] - expected).max() < 1e-6

    def test_zero_command_is_exactly_stationary(self):
        s = Scenario("hold", ((0.5, BodyTwist(0, 0, 0, 0)),),
                     PlatformPose(x=3.0, y=-1.0, phi=0.2, d=0.4))
        log = run_open_loop(s, GEOM, CFG)
        assert all(row[1] == 3.0 and row[2] == -1.0 and row[3] == 0.2
                   for row in log.rows)

    def test_determinism(self):
        s = get_scenario("circle_x")
        a = run_open_loop(s, GEOM, CFG)
        b = run_open_loop(s, GEOM, CFG)
        assert a.rows == b.rows

    def test_disturbance_injection_bends_heading(self):
        cfg = replace(CFG, disturbances=(Disturbance(0.0, 1.0, 0.1),))
        s = Scenario("line", ((2.0, BodyTwist(0.3, 0, 0, 0)),),
                     PlatformPose(d=0.4))
        log = run_open_loop(s, GEOM, cfg)
        phi = log.column("phi")
        assert phi[-1] == pytest.approx(0.1, abs=1e-9)  # bias active 1 s only
        assert abs(log.rows[-1][2]) > 1e-3  # y displacement accumulated

    def test_error_carries_tick_index(self):
        s = Scenario("bad", ((1.0, BodyTwist(0, 0, 0, 0)),),
                     PlatformPose(d=0.1))  # outside geometry range
        with pytest.raises(SimulationError) as err:
            run_open_loop(s, GEOM, CFG)
        assert err.value.tick == 0

    def test_csv_schema_and_digits(self):
        s = Scenario("line", ((0.01, BodyTwist(1 / 3, 0, 0, 0)),),
                     PlatformPose(d=0.4))
        text = run_open_loop(s, GEOM, CFG).to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == ("t,x_E,y_E,phi,d,pitch,vx_B,vy_B,wz_B,d_dot,"
                            "theta1,theta2,theta3,theta4,clamp_flag")
        assert lines[1].split(",")[6] == "0.333333333"  # 9 significant digits
        assert lines[1].endswith(",0")


class TestClosedLoop:
    def test_zero_command_constant_pose(self):
        cfg = default_config()
        s = Scenario("hold", ((0.5, BodyTwist(0, 0, 0, 0)),),
                     PlatformPose(x=1.0, d=0.4), mode="closed")
        stack = build_control_stack(cfg)
        log = run_closed_loop(s, stack, cfg.geometry, cfg.sim)
        assert all(row[1] == 1.0 and row[2] == 0.0 for row in log.rows)

    def test_balancing_recovers_from_lean(self):
        cfg = default_config()
        sim = replace(cfg.sim, pendulum=PendulumParams())
        s = Scenario("balance", ((3.5, BodyTwist(0, 0, 0, 0)),),
                     PlatformPose(d=0.4, pitch=math.radians(5.0)),
                     mode="closed")
        stack = build_control_stack(replace(cfg, sim=sim))
        log = run_closed_loop(s, stack, cfg.geometry, sim)
        pitch = log.column("pitch")
        assert abs(pitch[-1]) < math.radians(0.5)
        assert np.abs(pitch).max() == pytest.approx(math.radians(5.0))

    def test_distance_loop_tracks_commanded_ramp(self):
        cfg = default_config()
        s = Scenario("widen", ((2.0, BodyTwist(0, 0, 0, 0.05)),
                               (1.0, BodyTwist(0, 0, 0, 0.0))),
                     PlatformPose(d=0.4), mode="closed")
        stack = build_control_stack(cfg)
        log = run_closed_loop(s, stack, cfg.geometry, cfg.sim)
        assert log.column("d")[-1] == pytest.approx(0.5, abs=0.01)

    def test_telemetry_recorded(self):
        cfg = default_config()
        s = Scenario("hold", ((0.1, BodyTwist(0, 0, 0, 0)),),
                     PlatformPose(d=0.4), mode="closed")
        stack = build_control_stack(cfg)
        log = run_closed_loop(s, stack, cfg.geometry, cfg.sim)
        loops = {row[1] for row in log.telemetry}
        assert loops == {"steer_rate", "distance_rate"}
        text = log.telemetry_csv_text()
        assert text.startswith("t,loop,setpoint,measurement,output\n")

    def test_noise_determinism_with_seed(self):
        cfg = default_config()
        sim = replace(cfg.sim, noise_enabled=True, seed=3)
        s = Scenario("hold", ((0.2, BodyTwist(0.1, 0, 0, 0)),),
                     PlatformPose(d=0.4), mode="closed")
        logs = []
        for _ in range(2):
            stack = build_control_stack(cfg)
            logs.append(run_closed_loop(s, stack, cfg.geometry, sim))
        assert logs[0].rows == logs[1].rows


class TestTrajectoryLog:
    def test_column_accessors(self):
        log = TrajectoryLog()
        log.append(0.0, PlatformPose(x=1, y=2, d=0.4),
                   BodyTwist(0.1, 0.2, 0.3, 0.0), [1, 2, 3, 4], False)
        assert log.t.tolist() == [0.0]
        assert log.xy.tolist() == [[1.0, 2.0]]
        assert log.column("theta3").tolist() == [3.0]
        assert len(log) == 1
