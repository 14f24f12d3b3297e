"""Omni differential drive: kinematics, prototype wheel model, cascade PID
control stack, and a deterministic planar simulator."""

from .drive_models import (BodyTwist, DdTwist, GroupVelocities, OdTwist,
                           dd_forward, dd_inverse, od_forward, od_inverse,
                           odd_forward, odd_inverse)
from .mecanum import (Geometry, body_from_wheels, derivation_log,
                      group_from_wheels, sigma1, wheel_matrix_L,
                      wheel_matrix_R, wheels_from_body, wheels_from_group)
from .control import (BalancingController, ControlStack, DistanceController,
                      MotorSpeedController, Pid, PidGains, PidState,
                      SensorReadings, SpeedCommand, SteeringController,
                      command_mixer, pid_step)
from .simulator import (ActuatorModel, PendulumParams, PlatformPose,
                        SimConfig, TrajectoryLog, actuator_step,
                        run_closed_loop, run_open_loop, sense, step)
from .scenarios import (Scenario, TrajectoryMetrics, analytic_reference,
                        builtin_scenarios, compute_metrics, experiment_report,
                        get_scenario, parse_scenario, serialize_scenario)
from .config import Config, build_control_stack, default_config, load_config

__version__ = "0.1.0"
