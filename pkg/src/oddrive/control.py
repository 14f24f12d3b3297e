"""Parallel cascade PID control stack.

Three cascades (balancing, steering, distance) each pair a position-loop PD
with a speed-loop PI; their speed outputs are summed with the external speed
command and mixed into per-wheel rate targets. A per-wheel speed-loop PI
producing current commands models the motor layer.

Controllers own mutable state and must be stepped by a single owner per
control tick; independent instances are safe to run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drive_models import BodyTwist
from .errors import NonPositiveDt, SetpointOutOfRange
from .mecanum import Geometry, wheels_from_body


def wrap_angle(x: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(float(x), math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    output_min: float = -math.inf
    output_max: float = math.inf
    integral_limit: float = math.inf
    derivative_filter_tau: float = 0.0

    def __post_init__(self):
        if not self.output_min < self.output_max:
            raise ValueError("output_min must be below output_max")
        if self.integral_limit < 0.0:
            raise ValueError("integral_limit must be >= 0")
        if self.derivative_filter_tau < 0.0:
            raise ValueError("derivative_filter_tau must be >= 0")


@dataclass
class PidState:
    integral: float = 0.0
    filtered_derivative: float = 0.0
    prev_measurement: float | None = None

    def reset(self):
        self.integral = 0.0
        self.filtered_derivative = 0.0
        self.prev_measurement = None


def pid_step(gains: PidGains, state: PidState, setpoint: float,
             measurement: float, dt: float,
             measurement_rate: float | None = None) -> float:
    """One discrete PID update.

    Backward-Euler integral with conditional-integration anti-windup,
    derivative on the measurement (optionally supplied directly as
    measurement_rate) through a first-order filter, saturated output.
    """
    if dt <= 0.0:
        raise NonPositiveDt(f"dt={dt} must be positive")
    error = setpoint - measurement

    if measurement_rate is not None:
        raw_rate = float(measurement_rate)
    elif state.prev_measurement is None:
        raw_rate = 0.0
    else:
        raw_rate = (measurement - state.prev_measurement) / dt
    tau = gains.derivative_filter_tau
    if tau > 0.0:
        state.filtered_derivative += (dt / (tau + dt)) * (
            raw_rate - state.filtered_derivative)
    else:
        state.filtered_derivative = raw_rate

    integral = state.integral + error * dt
    limit = gains.integral_limit
    if math.isfinite(limit):
        integral = min(max(integral, -limit), limit)

    # de/dt = -dm/dt for a held setpoint
    raw = (gains.kp * error + gains.ki * integral
           - gains.kd * state.filtered_derivative)
    out = min(max(raw, gains.output_min), gains.output_max)
    if (raw > gains.output_max and error > 0.0) or \
       (raw < gains.output_min and error < 0.0):
        integral = state.integral  # freeze: error drives deeper into saturation
    state.integral = integral
    state.prev_measurement = measurement
    return out


class Pid:
    """Stateful convenience wrapper over pid_step."""

    def __init__(self, gains: PidGains):
        self.gains = gains
        self.state = PidState()

    def step(self, setpoint, measurement, dt, measurement_rate=None):
        return pid_step(self.gains, self.state, setpoint, measurement, dt,
                        measurement_rate)

    def reset(self):
        self.state.reset()


@dataclass(frozen=True)
class SpeedCommand:
    """External velocity command from the host or remote channel."""

    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0
    d_dot: float = 0.0

    def clamped(self, vx_max: float, vy_max: float, wz_max: float,
                d_dot_max: float) -> "SpeedCommand":
        clip = lambda v, m: min(max(v, -m), m)
        return SpeedCommand(clip(self.vx, vx_max), clip(self.vy, vy_max),
                            clip(self.wz, wz_max), clip(self.d_dot, d_dot_max))

    @staticmethod
    def from_twist(t: BodyTwist) -> "SpeedCommand":
        return SpeedCommand(t.vx, t.vy, t.wz, t.d_dot)


@dataclass(frozen=True)
class SensorReadings:
    """One sensor snapshot consumed by the control stack."""

    pitch: float = 0.0
    pitch_rate: float = 0.0
    yaw: float = 0.0
    yaw_rate: float = 0.0
    draw_wire_d: float = 0.0
    encoder_rates: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    motor_currents: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)


class BalancingController:
    """Pitch PD cascade into a linear-speed PI.

    Speed-loop feedback is the averaged encoder rate scaled by the wheel
    radius, and it enters with reversed sign: on a velocity-commanded base,
    regulating wheel speed by conventional negative feedback is structurally
    unstable (holding a lean needs sustained acceleration, which negative
    speed feedback extinguishes). With the reversed term a drifting base
    first speeds up, tipping the body back, and the pitch loop then brakes
    it; wheel speed and pitch both settle to zero.

    Positive pitch (lean toward +x) yields a positive vx correction: the
    base drives under the lean.
    """

    def __init__(self, pitch_gains: PidGains, speed_gains: PidGains,
                 wheel_radius: float):
        self.pitch_loop = Pid(pitch_gains)
        self.speed_loop = Pid(speed_gains)
        self.wheel_radius = wheel_radius
        self.last = {}

    def step(self, pitch: float, avg_wheel_rate: float, dt: float,
             pitch_rate: float | None = None) -> float:
        # plant sign: accelerating toward the lean rights the platform
        speed_ref = -self.pitch_loop.step(0.0, pitch, dt, pitch_rate)
        v_meas = avg_wheel_rate * self.wheel_radius
        out = self.speed_loop.step(speed_ref, -v_meas, dt)
        self.last = {"pitch": pitch, "speed_ref": speed_ref,
                     "v_meas": v_meas, "output": out}
        return out

    def reset(self):
        self.pitch_loop.reset()
        self.speed_loop.reset()


class SteeringController:
    """Yaw PD cascade into a yaw-rate PI; yaw error wraps into (-pi, pi]."""

    def __init__(self, pos_gains: PidGains, rate_gains: PidGains):
        self.pos_loop = Pid(pos_gains)
        self.rate_loop = Pid(rate_gains)
        self.last = {}

    def step(self, yaw: float, yaw_rate: float, yaw_setpoint: float,
             dt: float) -> float:
        error = wrap_angle(yaw_setpoint - yaw)
        rate_ref = self.pos_loop.step(error, 0.0, dt,
                                      measurement_rate=yaw_rate)
        out = self.rate_loop.step(rate_ref, yaw_rate, dt)
        self.last = {"yaw_error": error, "rate_ref": rate_ref,
                     "yaw_rate": yaw_rate, "output": out}
        return out

    def reset(self):
        self.pos_loop.reset()
        self.rate_loop.reset()


class DistanceController:
    """Wheel-spacing PD cascade into a spacing-rate PI.

    The output is clamped so the spacing predicted over clamp_horizon stays
    inside [d_min, d_max].
    """

    def __init__(self, pos_gains: PidGains, rate_gains: PidGains,
                 d_min: float, d_max: float, clamp_horizon: float = 0.1):
        if clamp_horizon <= 0.0:
            raise ValueError("clamp_horizon must be positive")
        self.pos_loop = Pid(pos_gains)
        self.rate_loop = Pid(rate_gains)
        self.d_min = d_min
        self.d_max = d_max
        self.clamp_horizon = clamp_horizon
        self.last = {}

    def step(self, d_meas: float, d_rate: float, d_setpoint: float,
             dt: float) -> float:
        if not self.d_min <= d_setpoint <= self.d_max:
            raise SetpointOutOfRange(
                f"d setpoint {d_setpoint} outside "
                f"[{self.d_min}, {self.d_max}]")
        rate_ref = self.pos_loop.step(d_setpoint, d_meas, dt,
                                      measurement_rate=d_rate)
        out = self.rate_loop.step(rate_ref, d_rate, dt)
        lo = (self.d_min - d_meas) / self.clamp_horizon
        hi = (self.d_max - d_meas) / self.clamp_horizon
        out = min(max(out, lo), hi)
        self.last = {"d_meas": d_meas, "rate_ref": rate_ref,
                     "d_rate": d_rate, "output": out}
        return out

    def reset(self):
        self.pos_loop.reset()
        self.rate_loop.reset()


class MotorSpeedController:
    """Per-wheel rate PI producing a current command; the downstream current
    loop is treated as ideal within one simulator step."""

    def __init__(self, gains: PidGains):
        self.loop = Pid(gains)

    def step(self, target_rate: float, measured_rate: float,
             dt: float) -> float:
        return self.loop.step(target_rate, measured_rate, dt)

    def reset(self):
        self.loop.reset()


def command_mixer(ext: SpeedCommand, balance_vx: float, steer_wz: float,
                  dist_d_dot: float, geom: Geometry, d: float) -> np.ndarray:
    """Sum the cascade speed outputs with the external command and map the
    resulting body twist to per-wheel rate targets."""
    twist = BodyTwist(vx=ext.vx + balance_vx, vy=ext.vy,
                      wz=ext.wz + steer_wz, d_dot=ext.d_dot + dist_d_dot)
    return wheels_from_body(twist, geom, d)


@dataclass
class Corrections:
    balance_vx: float = 0.0
    steer_wz: float = 0.0
    dist_d_dot: float = 0.0


class ControlStack:
    """All cascades of the control architecture behind a single tick call."""

    def __init__(self, balancing: BalancingController | None,
                 steering: SteeringController | None,
                 distance: DistanceController | None,
                 motors: list[MotorSpeedController] | None = None):
        self.balancing = balancing
        self.steering = steering
        self.distance = distance
        self.motors = motors or []
        self._prev_draw_wire: float | None = None

    def step(self, readings: SensorReadings, yaw_setpoint: float,
             d_setpoint: float, dt: float) -> Corrections:
        corr = Corrections()
        if self.balancing is not None:
            avg_rate = sum(readings.encoder_rates) / 4.0
            corr.balance_vx = self.balancing.step(
                readings.pitch, avg_rate, dt, pitch_rate=readings.pitch_rate)
        if self.steering is not None:
            corr.steer_wz = self.steering.step(
                readings.yaw, readings.yaw_rate, yaw_setpoint, dt)
        if self.distance is not None:
            if self._prev_draw_wire is None:
                d_rate = 0.0
            else:
                d_rate = (readings.draw_wire_d - self._prev_draw_wire) / dt
            self._prev_draw_wire = readings.draw_wire_d
            corr.dist_d_dot = self.distance.step(
                readings.draw_wire_d, d_rate, d_setpoint, dt)
        return corr

    def motor_currents(self, target_rates, measured_rates,
                       dt: float) -> tuple[float, ...]:
        if not self.motors:
            return (0.0, 0.0, 0.0, 0.0)
        return tuple(
            m.step(t, a, dt)
            for m, t, a in zip(self.motors, target_rates, measured_rates))

    def reset(self):
        for c in (self.balancing, self.steering, self.distance):
            if c is not None:
                c.reset()
        for m in self.motors:
            m.reset()
        self._prev_draw_wire = None
