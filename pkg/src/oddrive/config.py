"""Shared structured configuration: geometry, controller gains, simulation.

One TOML file with [geometry], [gains.*], [control], and [sim] sections.
Every value has a library default; `default_config()` is the single source
of those defaults and `config_to_toml(default_config())` documents the
schema. Gains and physical parameters are artifact defaults tuned against
the toy pendulum plant, not published values for any hardware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .control import (BalancingController, ControlStack, DistanceController,
                      MotorSpeedController, PidGains, SteeringController)
from .errors import ScenarioParseError
from .mecanum import Geometry
from .simulator import ActuatorModel, Disturbance, PendulumParams, SimConfig

_DEG = math.pi / 180.0


def _pid(**kw) -> PidGains:
    return PidGains(**kw)


@dataclass(frozen=True)
class GainSet:
    """Gains for every loop of the cascade architecture."""

    balance_pitch: PidGains = field(default_factory=lambda: _pid(
        kp=6.0, kd=0.6, output_min=-2.0, output_max=2.0,
        derivative_filter_tau=0.01))
    balance_speed: PidGains = field(default_factory=lambda: _pid(
        kp=0.2, ki=4.0, output_min=-2.0, output_max=2.0, integral_limit=2.0))
    steer_pos: PidGains = field(default_factory=lambda: _pid(
        kp=3.0, kd=0.05, output_min=-3.0, output_max=3.0))
    steer_rate: PidGains = field(default_factory=lambda: _pid(
        kp=0.5, ki=4.0, output_min=-2.0, output_max=2.0, integral_limit=2.0))
    distance_pos: PidGains = field(default_factory=lambda: _pid(
        kp=2.0, kd=0.05, output_min=-0.4, output_max=0.4))
    distance_rate: PidGains = field(default_factory=lambda: _pid(
        kp=0.5, ki=4.0, output_min=-0.3, output_max=0.3, integral_limit=0.5))
    motor: PidGains = field(default_factory=lambda: _pid(
        kp=0.6, ki=8.0, output_min=-10.0, output_max=10.0,
        integral_limit=10.0))


@dataclass(frozen=True)
class ControlConfig:
    balance_enabled: bool | None = None   # None: follow pendulum presence
    steer_enabled: bool = True
    distance_enabled: bool = True


@dataclass(frozen=True)
class Config:
    geometry: Geometry = field(default_factory=Geometry)
    gains: GainSet = field(default_factory=GainSet)
    control: ControlConfig = field(default_factory=ControlConfig)
    sim: SimConfig = field(default_factory=SimConfig)


def default_config() -> Config:
    return Config()


def build_control_stack(cfg: Config) -> ControlStack:
    """Instantiate the cascade controllers configured in cfg."""
    balance_on = cfg.control.balance_enabled
    if balance_on is None:
        balance_on = cfg.sim.pendulum is not None
    balancing = BalancingController(
        cfg.gains.balance_pitch, cfg.gains.balance_speed,
        cfg.geometry.r) if balance_on else None
    steering = SteeringController(
        cfg.gains.steer_pos, cfg.gains.steer_rate) \
        if cfg.control.steer_enabled else None
    distance = DistanceController(
        cfg.gains.distance_pos, cfg.gains.distance_rate,
        cfg.geometry.d_min, cfg.geometry.d_max) \
        if cfg.control.distance_enabled else None
    motors = [MotorSpeedController(cfg.gains.motor) for _ in range(4)]
    return ControlStack(balancing, steering, distance, motors)


# --------------------------------------------------------------------------
# TOML I/O
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return repr(1e308 if value > 0 else -1e308)
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    if isinstance(value, str):
        return f'"{value}"'
    return repr(value)


def _gains_section(name: str, g: PidGains) -> list[str]:
    lines = [f"[gains.{name}]"]
    for f in fields(PidGains):
        v = getattr(g, f.name)
        if isinstance(v, float) and math.isinf(v):
            continue  # omitted limits default to unbounded
        lines.append(f"{f.name} = {_fmt(v)}")
    return lines


def config_to_toml(cfg: Config) -> str:
    g = cfg.geometry
    s = cfg.sim
    lines = [
        "# oddrive configuration (all values are library defaults unless edited)",
        "",
        "[geometry]",
        f"r = {_fmt(g.r)}",
        f"w = {_fmt(g.w)}",
        f"d_min = {_fmt(g.d_min)}",
        f"d_max = {_fmt(g.d_max)}",
        f"alpha_deg = {_fmt([a / _DEG for a in g.alpha])}",
        "",
    ]
    for name in ("balance_pitch", "balance_speed", "steer_pos", "steer_rate",
                 "distance_pos", "distance_rate", "motor"):
        lines += _gains_section(name, getattr(cfg.gains, name))
        lines.append("")
    lines += [
        "[control]",
        f"balance_enabled = {_fmt(cfg.control.balance_enabled)}"
        if cfg.control.balance_enabled is not None
        else "# balance_enabled defaults to: pendulum channel present",
        f"steer_enabled = {_fmt(cfg.control.steer_enabled)}",
        f"distance_enabled = {_fmt(cfg.control.distance_enabled)}",
        "",
        "[sim]",
        f"dt = {_fmt(s.dt)}",
        f"control_dt = {_fmt(s.control_dt)}",
        f"integrator = {_fmt(s.integrator)}",
        f"seed = {_fmt(s.seed)}",
        f"noise_enabled = {_fmt(s.noise_enabled)}",
        f"draw_wire_rel_std = {_fmt(s.draw_wire_rel_std)}",
        f"imu_angle_std = {_fmt(s.imu_angle_std)}",
        f"encoder_std = {_fmt(s.encoder_std)}",
        f"vx_max = {_fmt(s.vx_max)}",
        f"vy_max = {_fmt(s.vy_max)}",
        f"wz_max = {_fmt(s.wz_max)}",
        f"d_dot_max = {_fmt(s.d_dot_max)}",
        f"pendulum_enabled = {_fmt(s.pendulum is not None)}",
        "",
        "[sim.actuator]",
        f"ideal = {_fmt(s.actuator.ideal)}",
        f"time_constant = {_fmt(s.actuator.time_constant)}",
        f"torque_constant = {_fmt(s.actuator.torque_constant)}",
        f"rate_limit = {_fmt(s.actuator.rate_limit)}",
        f"current_limit = {_fmt(s.actuator.current_limit)}",
        "",
        "[sim.pendulum]",
    ]
    pend = s.pendulum if s.pendulum is not None else PendulumParams()
    lines += [
        f"com_height = {_fmt(pend.com_height)}",
        f"gravity = {_fmt(pend.gravity)}",
        f"damping = {_fmt(pend.damping)}",
    ]
    if s.disturbances:
        for dist in s.disturbances:
            lines += [
                "",
                "[[sim.disturbances]]",
                f"t_start = {_fmt(dist.t_start)}",
                f"t_end = {_fmt(dist.t_end)}",
                f"wz_bias = {_fmt(dist.wz_bias)}",
            ]
    return "\n".join(lines) + "\n"


def _gains_from_dict(d: dict, base: PidGains) -> PidGains:
    known = {f.name for f in fields(PidGains)}
    unknown = set(d) - known
    if unknown:
        raise ScenarioParseError(f"unknown gain keys: {sorted(unknown)}")
    return replace(base, **{k: float(v) for k, v in d.items()})


def config_from_toml(text: str) -> Config:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(str(exc)) from exc
    base = default_config()

    geom = base.geometry
    if "geometry" in data:
        gd = data["geometry"]
        alpha = tuple(float(a) * _DEG for a in gd.get(
            "alpha_deg", [a / _DEG for a in geom.alpha]))
        geom = Geometry(
            r=float(gd.get("r", geom.r)), w=float(gd.get("w", geom.w)),
            d_min=float(gd.get("d_min", geom.d_min)),
            d_max=float(gd.get("d_max", geom.d_max)), alpha=alpha)

    gains = base.gains
    for name in ("balance_pitch", "balance_speed", "steer_pos", "steer_rate",
                 "distance_pos", "distance_rate", "motor"):
        if name in data.get("gains", {}):
            gains = replace(gains, **{name: _gains_from_dict(
                data["gains"][name], getattr(gains, name))})

    control = base.control
    if "control" in data:
        cd = data["control"]
        control = ControlConfig(
            balance_enabled=cd.get("balance_enabled",
                                   control.balance_enabled),
            steer_enabled=bool(cd.get("steer_enabled",
                                      control.steer_enabled)),
            distance_enabled=bool(cd.get("distance_enabled",
                                         control.distance_enabled)))

    sim = base.sim
    if "sim" in data:
        sd = data["sim"]
        actuator = sim.actuator
        if "actuator" in sd:
            ad = sd["actuator"]
            actuator = ActuatorModel(
                ideal=bool(ad.get("ideal", actuator.ideal)),
                time_constant=float(ad.get("time_constant",
                                           actuator.time_constant)),
                torque_constant=float(ad.get("torque_constant",
                                             actuator.torque_constant)),
                rate_limit=float(ad.get("rate_limit", actuator.rate_limit)),
                current_limit=float(ad.get("current_limit",
                                           actuator.current_limit)))
        pendulum = None
        if sd.get("pendulum_enabled", False):
            pd = sd.get("pendulum", {})
            pendulum = PendulumParams(
                com_height=float(pd.get("com_height", 0.2)),
                gravity=float(pd.get("gravity", 9.81)),
                damping=float(pd.get("damping", 0.5)))
        disturbances = tuple(
            Disturbance(float(x["t_start"]), float(x["t_end"]),
                        float(x["wz_bias"]))
            for x in sd.get("disturbances", ()))
        sim = SimConfig(
            dt=float(sd.get("dt", sim.dt)),
            control_dt=float(sd.get("control_dt", sim.control_dt)),
            integrator=str(sd.get("integrator", sim.integrator)),
            seed=int(sd.get("seed", sim.seed)),
            noise_enabled=bool(sd.get("noise_enabled", sim.noise_enabled)),
            draw_wire_rel_std=float(sd.get("draw_wire_rel_std",
                                           sim.draw_wire_rel_std)),
            imu_angle_std=float(sd.get("imu_angle_std", sim.imu_angle_std)),
            encoder_std=float(sd.get("encoder_std", sim.encoder_std)),
            disturbances=disturbances,
            pendulum=pendulum,
            actuator=actuator,
            vx_max=float(sd.get("vx_max", sim.vx_max)),
            vy_max=float(sd.get("vy_max", sim.vy_max)),
            wz_max=float(sd.get("wz_max", sim.wz_max)),
            d_dot_max=float(sd.get("d_dot_max", sim.d_dot_max)))

    return Config(geometry=geom, gains=gains, control=control, sim=sim)


def load_config(path) -> Config:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return config_from_toml(text)
