"""Canned experiment scenarios, analytic references, and trajectory metrics.

Scenario speeds, durations, and spacing-ramp rates are library defaults
chosen for desk-scale runs; they are not measurements of any vehicle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drive_models import BodyTwist
from .errors import EmptyLog, NoResults, ScenarioParseError, UnsupportedSegment
from .simulator import PlatformPose, TrajectoryLog

DEFAULT_SPEED = 0.3        # m/s
DEFAULT_OMEGA = 0.6        # rad/s
DEFAULT_SEGMENT_T = 2.0    # s
DEFAULT_D = 0.4            # m
RECONFIG_D0 = 0.3          # m
RECONFIG_RATE = 0.05       # m/s
RECONFIG_T = 4.0           # s, per ramp leg: 0.3 -> 0.5 -> 0.3


@dataclass(frozen=True)
class Scenario:
    """Timed list of constant body-twist commands plus an initial pose."""

    name: str
    segments: tuple[tuple[float, BodyTwist], ...]
    initial_pose: PlatformPose = PlatformPose()
    mode: str = "open"

    def __post_init__(self):
        if not self.segments:
            raise ValueError("scenario needs at least one segment")
        for duration, _ in self.segments:
            if duration <= 0.0:
                raise ValueError("segment durations must be positive")
        if self.mode not in ("open", "closed"):
            raise ValueError(f"mode must be 'open' or 'closed', got {self.mode!r}")

    @property
    def total_duration(self) -> float:
        return sum(duration for duration, _ in self.segments)


def builtin_scenarios(v: float = DEFAULT_SPEED, omega: float = DEFAULT_OMEGA,
                      seg_t: float = DEFAULT_SEGMENT_T) -> list[Scenario]:
    """The seven canned experiments: square, rhombus, two circles, and three
    spacing-reconfiguration runs."""
    pose = PlatformPose(d=DEFAULT_D)
    pose_rc = PlatformPose(d=RECONFIG_D0)
    circle_t = math.tau / omega
    rr = RECONFIG_RATE
    return [
        Scenario("square", (
            (seg_t, BodyTwist(v, 0, 0, 0)),
            (seg_t, BodyTwist(0, v, 0, 0)),
            (seg_t, BodyTwist(-v, 0, 0, 0)),
            (seg_t, BodyTwist(0, -v, 0, 0)),
        ), pose),
        Scenario("rhombus", (
            (seg_t, BodyTwist(v, v, 0, 0)),
            (seg_t, BodyTwist(-v, v, 0, 0)),
            (seg_t, BodyTwist(-v, -v, 0, 0)),
            (seg_t, BodyTwist(v, -v, 0, 0)),
        ), pose),
        Scenario("circle_x", ((circle_t, BodyTwist(v, 0, omega, 0)),), pose),
        Scenario("circle_y", ((circle_t, BodyTwist(0, v, omega, 0)),), pose),
        Scenario("reconfig_x", (
            (RECONFIG_T, BodyTwist(v, 0, 0, rr)),
            (RECONFIG_T, BodyTwist(v, 0, 0, -rr)),
        ), pose_rc),
        Scenario("reconfig_y", (
            (RECONFIG_T, BodyTwist(0, v, 0, rr)),
            (RECONFIG_T, BodyTwist(0, v, 0, -rr)),
        ), pose_rc),
        Scenario("reconfig_xz", (
            (seg_t, BodyTwist(v, 0, 0, rr)),
            (seg_t, BodyTwist(v, 0, omega, rr)),
            (seg_t, BodyTwist(v, 0, omega, -rr)),
            (seg_t, BodyTwist(v, 0, 0, -rr)),
        ), pose_rc),
    ]


def get_scenario(name: str) -> Scenario:
    for s in builtin_scenarios():
        if s.name == name:
            return s
    raise KeyError(f"unknown scenario {name!r}; "
                   f"choose from {[s.name for s in builtin_scenarios()]}")


@dataclass(frozen=True)
class Reference:
    """Closed-form reference trajectory sampled along a scenario."""

    t: np.ndarray
    xy: np.ndarray
    phi: np.ndarray
    d: np.ndarray
    vertices: np.ndarray   # exact segment-endpoint positions, (n_seg+1, 2)

    def arc_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.xy, axis=0), axis=1).sum())


def _advance(x, y, phi, d, twist: BodyTwist, tau):
    """Exact pose after time tau under a constant body twist (vectorized
    over tau)."""
    tau = np.asarray(tau, dtype=float)
    if twist.wz == 0.0:
        c, s = math.cos(phi), math.sin(phi)
        nx = x + (c * twist.vx - s * twist.vy) * tau
        ny = y + (s * twist.vx + c * twist.vy) * tau
        nphi = phi + 0.0 * tau
    else:
        # integral of Rot(phi + wz*tau) @ (vx, vy): rotate (vy, -vx)/wz
        ux, uy = twist.vy / twist.wz, -twist.vx / twist.wz
        a0 = phi
        a1 = phi + twist.wz * tau
        nx = x + (np.cos(a1) * ux - np.sin(a1) * uy) - (
            math.cos(a0) * ux - math.sin(a0) * uy)
        ny = y + (np.sin(a1) * ux + np.cos(a1) * uy) - (
            math.sin(a0) * ux + math.cos(a0) * uy)
        nphi = a1
    return nx, ny, nphi, d + twist.d_dot * tau


def analytic_reference(s: Scenario, sample_dt: float = 0.01) -> Reference:
    """Closed-form integration of a piecewise-constant-twist scenario:
    straight lines for pure translation, circular arcs of radius |v|/|wz|
    for combined translation and rotation, linear spacing ramps."""
    ts, xs, ys, phis, ds = [0.0], [s.initial_pose.x], [s.initial_pose.y], \
        [s.initial_pose.phi], [s.initial_pose.d]
    vertices = [(s.initial_pose.x, s.initial_pose.y)]
    x, y, phi, d = xs[0], ys[0], phis[0], ds[0]
    t0 = 0.0
    for duration, twist in s.segments:
        if not isinstance(twist, BodyTwist):
            raise UnsupportedSegment(
                "analytic reference requires a constant BodyTwist per segment")
        n = max(1, math.ceil(duration / sample_dt))
        tau = np.linspace(duration / n, duration, n)
        nx, ny, nphi, nd = _advance(x, y, phi, d, twist, tau)
        ts.extend((t0 + tau).tolist())
        xs.extend(np.atleast_1d(nx).tolist())
        ys.extend(np.atleast_1d(ny).tolist())
        phis.extend(np.atleast_1d(nphi + 0 * tau).tolist())
        ds.extend(np.atleast_1d(nd).tolist())
        x, y, phi, d = (float(np.atleast_1d(v)[-1]) for v in (nx, ny, nphi + 0 * tau, nd))
        t0 += duration
        vertices.append((x, y))
    return Reference(t=np.array(ts), xy=np.column_stack([xs, ys]),
                     phi=np.array(phis), d=np.array(ds),
                     vertices=np.array(vertices))


@dataclass(frozen=True)
class TrajectoryMetrics:
    closure_error: float
    rms_deviation: float
    estimated_radius: float
    heading_drift: float
    d_tracking_rmse: float


def fit_circle(xy: np.ndarray) -> tuple[float, float, float]:
    """Algebraic least-squares circle fit; returns (cx, cy, radius)."""
    x, y = xy[:, 0], xy[:, 1]
    a = np.column_stack([2.0 * x, 2.0 * y, np.ones(len(x))])
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy, c = sol
    return float(cx), float(cy), float(math.sqrt(max(c + cx * cx + cy * cy, 0.0)))


def min_distance_to_polyline(points: np.ndarray, poly: np.ndarray,
                             chunk: int = 512) -> np.ndarray:
    """Distance from each point to the nearest point on the polyline."""
    a = poly[:-1]
    ab = poly[1:] - a
    denom = (ab * ab).sum(axis=1)
    denom = np.where(denom == 0.0, 1.0, denom)
    out = np.empty(len(points))
    for lo in range(0, len(points), chunk):
        p = points[lo:lo + chunk]
        ap = p[:, None, :] - a[None, :, :]
        frac = np.clip((ap * ab[None, :, :]).sum(-1) / denom, 0.0, 1.0)
        closest = a[None, :, :] + frac[:, :, None] * ab[None, :, :]
        delta = p[:, None, :] - closest
        out[lo:lo + chunk] = np.sqrt((delta * delta).sum(-1)).min(axis=1)
    return out


def compute_metrics(log: TrajectoryLog, ref: Reference) -> TrajectoryMetrics:
    """Shape-comparison metrics between a trajectory log and its reference.

    Deviation uses nearest-point distance to the reference polyline (shape
    comparison, not time alignment). estimated_radius is meaningful only
    for circular paths.
    """
    if len(log) == 0:
        raise EmptyLog("cannot compute metrics on an empty trajectory log")
    xy = log.xy
    closure = float(np.linalg.norm(xy[-1] - xy[0]))
    rms = float(np.sqrt(np.mean(
        min_distance_to_polyline(xy, ref.xy) ** 2)))
    _, _, radius = fit_circle(xy)
    phi = log.column("phi")
    heading_drift = float((phi[-1] - phi[0]) - (ref.phi[-1] - ref.phi[0]))
    d_ref = np.interp(log.t, ref.t, ref.d)
    d_rmse = float(np.sqrt(np.mean((log.column("d") - d_ref) ** 2)))
    return TrajectoryMetrics(closure_error=closure, rms_deviation=rms,
                             estimated_radius=radius,
                             heading_drift=heading_drift,
                             d_tracking_rmse=d_rmse)


def default_thresholds(scenario_name: str, ref: Reference) -> dict[str, float]:
    """Per-scenario acceptance thresholds on metric values (upper bounds)."""
    thresholds = {"rms_deviation": 1e-4}
    if scenario_name in ("square", "rhombus"):
        thresholds["closure_error"] = 1e-3 * ref.arc_length()
    elif scenario_name in ("circle_x", "circle_y"):
        thresholds["closure_error"] = 1e-3
        thresholds["radius_error"] = 5e-4  # 0.1% of the 0.5 m radius
    elif scenario_name.startswith("reconfig"):
        thresholds["d_tracking_rmse"] = 1e-9
    return thresholds


@dataclass(frozen=True)
class MetricCheck:
    metric: str
    value: float
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ScenarioResult:
    scenario: str
    metrics: TrajectoryMetrics
    checks: tuple[MetricCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def evaluate_scenario(name: str, log: TrajectoryLog,
                      ref: Reference) -> ScenarioResult:
    """Compute metrics and check them against the scenario's thresholds."""
    metrics = compute_metrics(log, ref)
    checks = []
    for metric, bound in default_thresholds(name, ref).items():
        if metric == "radius_error":
            value = abs(metrics.estimated_radius - 0.5)
        else:
            value = getattr(metrics, metric)
        checks.append(MetricCheck(metric, value, bound, value <= bound))
    return ScenarioResult(name, metrics, tuple(checks))


@dataclass(frozen=True)
class ExperimentReport:
    results: tuple[ScenarioResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def text(self) -> str:
        lines = ["scenario reproduction report", ""]
        for r in self.results:
            lines.append(f"[{r.scenario}] {'PASS' if r.passed else 'FAIL'}")
            m = r.metrics
            lines.append(
                f"  closure={m.closure_error:.3e} m  rms={m.rms_deviation:.3e} m"
                f"  radius={m.estimated_radius:.6f} m"
                f"  heading_drift={m.heading_drift:.3e} rad"
                f"  d_rmse={m.d_tracking_rmse:.3e} m")
            for c in r.checks:
                state = "ok" if c.passed else "FAIL"
                lines.append(f"    {c.metric}: {c.value:.3e} <= {c.threshold:.3e}  {state}")
        lines.append("")
        n_fail = sum(not r.passed for r in self.results)
        lines.append(f"{len(self.results) - n_fail}/{len(self.results)} scenarios passed")
        return "\n".join(lines)

    def csv_text(self) -> str:
        lines = ["scenario,metric,value,threshold,passed"]
        for r in self.results:
            for c in r.checks:
                lines.append(f"{r.scenario},{c.metric},{c.value:.9g},"
                             f"{c.threshold:.9g},{int(c.passed)}")
        return "\n".join(lines) + "\n"


def experiment_report(results) -> ExperimentReport:
    results = tuple(results)
    if not results:
        raise NoResults("no scenario results to report")
    return ExperimentReport(results)


# --------------------------------------------------------------------------
# Scenario (de)serialization: TOML-subset key-value text with one
# [scenario] table and repeated [[scenario.segments]] entries.
# --------------------------------------------------------------------------

def serialize_scenario(s: Scenario) -> str:
    lines = [
        "[scenario]",
        f'name = "{s.name}"',
        f'mode = "{s.mode}"',
        "",
        "[scenario.initial]",
        f"x = {s.initial_pose.x!r}",
        f"y = {s.initial_pose.y!r}",
        f"phi = {s.initial_pose.phi!r}",
        f"d = {s.initial_pose.d!r}",
    ]
    for duration, twist in s.segments:
        lines += [
            "",
            "[[scenario.segments]]",
            f"duration = {duration!r}",
            f"vx = {twist.vx!r}",
            f"vy = {twist.vy!r}",
            f"wz = {twist.wz!r}",
            f"d_dot = {twist.d_dot!r}",
        ]
    return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> Scenario:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib

    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(str(exc)) from exc
    try:
        sc = data["scenario"]
        init = sc.get("initial", {})
        pose = PlatformPose(
            x=float(init.get("x", 0.0)), y=float(init.get("y", 0.0)),
            phi=float(init.get("phi", 0.0)), d=float(init.get("d", DEFAULT_D)))
        segments = tuple(
            (float(seg["duration"]),
             BodyTwist(float(seg.get("vx", 0.0)), float(seg.get("vy", 0.0)),
                       float(seg.get("wz", 0.0)), float(seg.get("d_dot", 0.0))))
            for seg in sc["segments"])
        return Scenario(name=str(sc["name"]), segments=segments,
                        initial_pose=pose, mode=str(sc.get("mode", "open")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioParseError(f"invalid scenario file: {exc}") from exc
