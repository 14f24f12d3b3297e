"""Deterministic fixed-step planar kinematic simulator.

Integrates the body twist implied by wheel rates into a world-frame pose and
wheel spacing, with an optional inverted-pendulum pitch channel so the
balancing cascade has a plant to act on. No slip, friction, or rigid-body
dynamics: the plant is kinematic by design, and the lateral-arrangement
disturbance is representable only as an injected yaw-rate bias schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .control import (ControlStack, SensorReadings, SpeedCommand,
                      command_mixer, wrap_angle)
from .drive_models import BodyTwist
from .errors import OddriveError
from .mecanum import Geometry, body_from_wheels, wheels_from_body

if TYPE_CHECKING:  # pragma: no cover
    from .scenarios import Scenario


@dataclass(frozen=True)
class PlatformPose:
    """World-frame pose plus spacing and the optional pitch channel.

    phi accumulates without wrapping so logged headings stay continuous.
    """

    x: float = 0.0
    y: float = 0.0
    phi: float = 0.0
    d: float = 0.4
    pitch: float = 0.0
    pitch_rate: float = 0.0


@dataclass(frozen=True)
class ActuatorModel:
    """First-order wheel actuator abstraction.

    ideal=True passes targets straight through (the default for kinematic
    reproduction runs); otherwise rates lag with the given time constant.
    Rate and acceleration limits apply in both modes.
    """

    ideal: bool = True
    time_constant: float = 0.05
    torque_constant: float = 0.3
    rate_limit: float = 80.0
    current_limit: float = 10.0
    accel_limit: float = math.inf

    def __post_init__(self):
        for name in ("time_constant", "torque_constant", "rate_limit",
                     "current_limit", "accel_limit"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PendulumParams:
    """Toy planar inverted-pendulum parameters for the pitch channel."""

    com_height: float = 0.2
    gravity: float = 9.81
    damping: float = 0.5

    def __post_init__(self):
        if self.com_height <= 0.0 or self.gravity <= 0.0:
            raise ValueError("com_height and gravity must be positive")


@dataclass(frozen=True)
class Disturbance:
    """Injected yaw-rate bias active on [t_start, t_end)."""

    t_start: float
    t_end: float
    wz_bias: float


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    control_dt: float = 5e-3
    integrator: str = "rk4"
    seed: int = 0
    noise_enabled: bool = False
    draw_wire_rel_std: float = 0.001
    imu_angle_std: float = 0.0
    encoder_std: float = 0.0
    disturbances: tuple[Disturbance, ...] = ()
    pendulum: PendulumParams | None = None
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    vx_max: float = 2.0
    vy_max: float = 2.0
    wz_max: float = 4.0
    d_dot_max: float = 0.5

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.control_dt < self.dt:
            raise ValueError("control_dt must be >= dt")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")

    def wz_bias_at(self, t: float) -> float:
        return sum(d.wz_bias for d in self.disturbances
                   if d.t_start <= t < d.t_end)


CSV_COLUMNS = ("t", "x_E", "y_E", "phi", "d", "pitch", "vx_B", "vy_B",
               "wz_B", "d_dot", "theta1", "theta2", "theta3", "theta4",
               "clamp_flag")


class TrajectoryLog:
    """Row-per-tick record of a simulation run, serializable as CSV."""

    def __init__(self):
        self.rows: list[tuple] = []
        self.telemetry: list[tuple] = []  # (t, loop, setpoint, measurement, output)

    def append(self, t, pose: PlatformPose, twist: BodyTwist, rates,
               clamped: bool):
        self.rows.append((
            t, pose.x, pose.y, pose.phi, pose.d, pose.pitch,
            twist.vx, twist.vy, twist.wz, twist.d_dot,
            float(rates[0]), float(rates[1]), float(rates[2]),
            float(rates[3]), 1 if clamped else 0))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = CSV_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.column("x_E"), self.column("y_E")])

    def to_csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(
                f"{v:.9g}" if isinstance(v, float) else str(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def telemetry_csv_text(self) -> str:
        lines = ["t,loop,setpoint,measurement,output"]
        for t, loop, sp, meas, out in self.telemetry:
            lines.append(f"{t:.9g},{loop},{sp:.9g},{meas:.9g},{out:.9g}")
        return "\n".join(lines) + "\n"


class SimulationError(OddriveError):
    """Module error re-raised with the failing tick index attached."""

    def __init__(self, tick: int, t: float, cause: Exception):
        super().__init__(f"tick {tick} (t={t:.6f} s): {cause}")
        self.tick = tick
        self.cause = cause


def actuator_step(target_rates, actual_rates, model: ActuatorModel,
                  dt: float) -> np.ndarray:
    """Advance actual wheel rates one step toward their targets."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    target = np.asarray(target_rates, dtype=float)
    actual = np.asarray(actual_rates, dtype=float)
    if model.ideal:
        new = target.copy()
    else:
        new = actual + (dt / (model.time_constant + dt)) * (target - actual)
    if math.isfinite(model.accel_limit):
        max_delta = model.accel_limit * dt
        new = np.clip(new, actual - max_delta, actual + max_delta)
    return np.clip(new, -model.rate_limit, model.rate_limit)


def _derivative(state, twist: BodyTwist, wz_bias, accel_x,
                pend: PendulumParams | None):
    x, y, phi, d, pitch, pitch_rate = state
    c, s = math.cos(phi), math.sin(phi)
    if pend is None:
        dpitch = 0.0
        dpitch_rate = 0.0
    else:
        dpitch = pitch_rate
        dpitch_rate = ((pend.gravity / pend.com_height) * math.sin(pitch)
                       - (accel_x / pend.com_height) * math.cos(pitch)
                       - pend.damping * pitch_rate)
    return np.array([
        c * twist.vx - s * twist.vy,
        s * twist.vx + c * twist.vy,
        twist.wz + wz_bias,
        twist.d_dot,
        dpitch,
        dpitch_rate,
    ])


def _integrate(pose: PlatformPose, twist: BodyTwist, geom: Geometry,
               cfg: SimConfig, dt: float, wz_bias: float,
               accel_x: float) -> tuple[PlatformPose, bool]:
    y0 = np.array([pose.x, pose.y, pose.phi, pose.d, pose.pitch,
                   pose.pitch_rate])
    f = lambda s: _derivative(s, twist, wz_bias, accel_x, cfg.pendulum)
    if cfg.integrator == "euler":
        y1 = y0 + dt * f(y0)
    else:
        k1 = f(y0)
        k2 = f(y0 + 0.5 * dt * k1)
        k3 = f(y0 + 0.5 * dt * k2)
        k4 = f(y0 + dt * k3)
        y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    d_new = y1[3]
    clamped = False
    if d_new < geom.d_min:
        d_new, clamped = geom.d_min, True
    elif d_new > geom.d_max:
        d_new, clamped = geom.d_max, True
    return PlatformPose(x=y1[0], y=y1[1], phi=y1[2], d=d_new, pitch=y1[4],
                        pitch_rate=y1[5]), clamped


def step(pose: PlatformPose, rates, geom: Geometry, cfg: SimConfig,
         dt: float, t: float = 0.0, accel_x: float = 0.0) -> PlatformPose:
    """Advance the pose one fixed step under the given wheel rates.

    The body twist is recovered from the rates at the current spacing, the
    world-frame derivative is rotated by phi, and the state is integrated
    with the configured scheme. Spacing is clamped to the geometry bounds.
    """
    twist = body_from_wheels(rates, geom, pose.d)
    new_pose, _ = _integrate(pose, twist, geom, cfg, dt,
                             cfg.wz_bias_at(t), accel_x)
    return new_pose


def sense(pose: PlatformPose, rates, geom: Geometry, cfg: SimConfig,
          rng: np.random.Generator | None = None,
          motor_currents=(0.0, 0.0, 0.0, 0.0)) -> SensorReadings:
    """Produce one sensor snapshot, optionally noisy.

    Draw-wire noise is relative (std = draw_wire_rel_std * d), mirroring a
    percent-accuracy spacing sensor. Yaw is reported wrapped to (-pi, pi].
    """
    rates = np.asarray(rates, dtype=float)
    twist = body_from_wheels(rates, geom, pose.d)
    draw_wire = pose.d
    pitch = pose.pitch
    yaw = wrap_angle(pose.phi)
    enc = rates.copy()
    if cfg.noise_enabled and rng is not None:
        draw_wire += rng.normal(0.0, cfg.draw_wire_rel_std * pose.d)
        if cfg.imu_angle_std > 0.0:
            pitch += rng.normal(0.0, cfg.imu_angle_std)
            yaw = wrap_angle(yaw + rng.normal(0.0, cfg.imu_angle_std))
        if cfg.encoder_std > 0.0:
            enc += rng.normal(0.0, cfg.encoder_std, size=4)
    return SensorReadings(
        pitch=pitch, pitch_rate=pose.pitch_rate, yaw=yaw, yaw_rate=twist.wz,
        draw_wire_d=draw_wire, encoder_rates=tuple(enc),
        motor_currents=tuple(motor_currents))


def _segment_steps(duration: float, dt: float) -> int:
    n = round(duration / dt)
    return max(1, n)


def run_open_loop(scenario: "Scenario", geom: Geometry,
                  cfg: SimConfig) -> TrajectoryLog:
    """Run a scenario without controllers: commanded twists map straight to
    wheel rates each tick. Used for ideal-kinematics references."""
    log = TrajectoryLog()
    pose = scenario.initial_pose
    t = 0.0
    tick = 0
    last = (BodyTwist(0, 0, 0, 0), np.zeros(4))
    try:
        for duration, twist in scenario.segments:
            for _ in range(_segment_steps(duration, cfg.dt)):
                rates = wheels_from_body(twist, geom, pose.d)
                log.append(t, pose, twist, rates, False)
                pose, clamped = _integrate(pose, twist, geom, cfg, cfg.dt,
                                           cfg.wz_bias_at(t), 0.0)
                if clamped:
                    log.rows[-1] = log.rows[-1][:-1] + (1,)
                t += cfg.dt
                tick += 1
                last = (twist, rates)
    except OddriveError as exc:
        raise SimulationError(tick, t, exc) from exc
    log.append(t, pose, last[0], last[1], False)
    return log


def run_closed_loop(scenario: "Scenario", stack: ControlStack,
                    geom: Geometry, cfg: SimConfig) -> TrajectoryLog:
    """Run a scenario through the full tick pipeline:
    sense -> cascades -> mixer -> actuator -> plant.

    Outer loops run every control_dt; the motor loop, actuator, and plant
    advance every dt. One log row is appended per outer tick. Deterministic
    for a fixed seed.
    """
    rng = np.random.default_rng(cfg.seed)
    decim = max(1, round(cfg.control_dt / cfg.dt))
    control_dt = decim * cfg.dt
    log = TrajectoryLog()
    pose = scenario.initial_pose
    actual = np.zeros(4)
    targets = np.zeros(4)
    currents = (0.0, 0.0, 0.0, 0.0)
    yaw_sp = pose.phi
    d_sp = pose.d
    prev_vx = 0.0
    t = 0.0
    tick = 0
    try:
        for duration, cmd_twist in scenario.segments:
            cmd = SpeedCommand.from_twist(cmd_twist).clamped(
                cfg.vx_max, cfg.vy_max, cfg.wz_max, cfg.d_dot_max)
            n = _segment_steps(duration, cfg.dt)
            for k in range(n):
                if tick % decim == 0:
                    readings = sense(pose, actual, geom, cfg, rng, currents)
                    corr = stack.step(readings, yaw_sp, d_sp, control_dt)
                    targets = command_mixer(cmd, corr.balance_vx,
                                            corr.steer_wz, corr.dist_d_dot,
                                            geom, pose.d)
                    twist_now = body_from_wheels(actual, geom, pose.d)
                    log.append(t, pose, twist_now, actual, False)
                    _append_telemetry(log, t, stack, corr)
                currents = stack.motor_currents(targets, actual, cfg.dt)
                actual = actuator_step(targets, actual, cfg.actuator, cfg.dt)
                twist = body_from_wheels(actual, geom, pose.d)
                accel_x = (twist.vx - prev_vx) / cfg.dt
                prev_vx = twist.vx
                pose, clamped = _integrate(pose, twist, geom, cfg, cfg.dt,
                                           cfg.wz_bias_at(t), accel_x)
                if clamped and log.rows:
                    log.rows[-1] = log.rows[-1][:-1] + (1,)
                yaw_sp += cmd.wz * cfg.dt
                d_sp = min(max(d_sp + cmd.d_dot * cfg.dt, geom.d_min),
                           geom.d_max)
                t += cfg.dt
                tick += 1
    except OddriveError as exc:
        raise SimulationError(tick, t, exc) from exc
    twist = body_from_wheels(actual, geom, pose.d)
    log.append(t, pose, twist, actual, False)
    return log


def _append_telemetry(log: TrajectoryLog, t: float, stack: ControlStack,
                      corr) -> None:
    if stack.balancing is not None:
        d = stack.balancing.last
        log.telemetry.append((t, "balance_speed", d["speed_ref"],
                              d["v_meas"], d["output"]))
    if stack.steering is not None:
        d = stack.steering.last
        log.telemetry.append((t, "steer_rate", d["rate_ref"],
                              d["yaw_rate"], d["output"]))
    if stack.distance is not None:
        d = stack.distance.last
        log.telemetry.append((t, "distance_rate", d["rate_ref"],
                              d["d_rate"], d["output"]))
