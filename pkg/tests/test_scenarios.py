import math

import numpy as np
import pytest

from oddrive.drive_models import BodyTwist
from oddrive.errors import (EmptyLog, NoResults, ScenarioParseError,
                            UnsupportedSegment)
from oddrive.scenarios import (Reference, Scenario, analytic_reference,
                               builtin_scenarios, compute_metrics,
                               evaluate_scenario, experiment_report,
                               fit_circle, get_scenario,
                               min_distance_to_polyline, parse_scenario,
                               serialize_scenario)
from oddrive.simulator import PlatformPose, TrajectoryLog


def log_from_points(xy, t=None, phi=None, d=0.4):
    """Build a TrajectoryLog whose pose columns follow the given points."""
    log = TrajectoryLog()
    n = len(xy)
    t = np.arange(n) * 0.01 if t is None else t
    phi = np.zeros(n) if phi is None else phi
    d = np.full(n, d) if np.isscalar(d) else d
    for i in range(n):
        log.append(t[i], PlatformPose(x=xy[i][0], y=xy[i][1], phi=phi[i],
                                      d=d[i]),
                   BodyTwist(0, 0, 0, 0), [0, 0, 0, 0], False)
    return log


class TestBuiltins:
    def test_exactly_seven_named(self):
        names = [s.name for s in builtin_scenarios()]
        assert names == ["square", "rhombus", "circle_x", "circle_y",
                         "reconfig_x", "reconfig_y", "reconfig_xz"]

    def test_square_protocol(self):
        s = get_scenario("square")
        assert len(s.segments) == 4
        twists = [t for _, t in s.segments]
        assert twists[0] == BodyTwist(0.3, 0, 0, 0)
        assert twists[1] == BodyTwist(0, 0.3, 0, 0)
        assert twists[2] == BodyTwist(-0.3, 0, 0, 0)
        assert twists[3] == BodyTwist(0, -0.3, 0, 0)
        assert all(dur == 2.0 for dur, _ in s.segments)

    def test_circle_protocols(self):
        cx = get_scenario("circle_x")
        assert len(cx.segments) == 1
        assert cx.segments[0][1] == BodyTwist(0.3, 0, 0.6, 0)
        assert cx.segments[0][0] == pytest.approx(2 * math.pi / 0.6)
        cy = get_scenario("circle_y")
        assert cy.segments[0][1] == BodyTwist(0, 0.3, 0.6, 0)

    def test_reconfig_ramp_profile(self):
        s = get_scenario("reconfig_x")
        assert s.initial_pose.d == 0.3
        (t1, a), (t2, b) = s.segments
        assert a.d_dot == 0.05 and b.d_dot == -0.05
        # ramp reaches 0.5 m and returns
        assert s.initial_pose.d + a.d_dot * t1 == pytest.approx(0.5)
        assert 0.5 + b.d_dot * t2 == pytest.approx(0.3)

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            get_scenario("spiral")

    def test_validation(self):
        with pytest.raises(ValueError):
            Scenario("empty", ())
        with pytest.raises(ValueError):
            Scenario("bad", ((0.0, BodyTwist(0, 0, 0, 0)),))
        with pytest.raises(ValueError):
            Scenario("bad", ((1.0, BodyTwist(0, 0, 0, 0)),), mode="auto")


class TestAnalyticReference:
    def test_square_polygon(self):
        ref = analytic_reference(get_scenario("square"))
        expected = np.array([[0, 0], [0.6, 0], [0.6, 0.6], [0, 0.6], [0, 0]])
        assert np.abs(ref.vertices - expected).max() < 1e-12

    def test_circle_radius(self):
        ref = analytic_reference(get_scenario("circle_x"))
        cx, cy, radius = fit_circle(ref.xy)
        assert radius == pytest.approx(0.5, abs=1e-9)
        assert np.linalg.norm(ref.xy[-1] - ref.xy[0]) < 1e-9

    def test_circle_y_against_quadrature(self):
        # independent oracle: dense numeric quadrature of the world velocity
        s = get_scenario("circle_y")
        ref = analytic_reference(s, sample_dt=0.01)
        twist = s.segments[0][1]
        dt = 1e-5
        n = round(s.segments[0][0] / dt)
        pos = np.zeros(2)
        phi = 0.0
        path = {}
        checkpoints = {round(t / dt) for t in (1.0, 3.0, 7.0)}
        for k in range(n):
            c, sn = math.cos(phi), math.sin(phi)
            pos += dt * np.array([c * twist.vx - sn * twist.vy,
                                  sn * twist.vx + c * twist.vy])
            phi += dt * twist.wz
            if k + 1 in checkpoints:
                path[(k + 1) * dt] = pos.copy()
        for t, expected in path.items():
            interp = np.array([np.interp(t, ref.t, ref.xy[:, 0]),
                               np.interp(t, ref.t, ref.xy[:, 1])])
            assert np.abs(interp - expected).max() < 1e-4

    def test_spacing_ramp(self):
        ref = analytic_reference(get_scenario("reconfig_x"))
        assert ref.d[0] == 0.3
        assert ref.d.max() == pytest.approx(0.5)
        assert ref.d[-1] == pytest.approx(0.3)

    def test_rejects_non_constant_segment(self):
        s = get_scenario("square")
        bad = Scenario("bad", ((1.0, "not-a-twist"),), s.initial_pose)
        with pytest.raises(UnsupportedSegment):
            analytic_reference(bad)


class TestMetrics:
    def test_identical_log_all_zero(self):
        ref = analytic_reference(get_scenario("square"))
        log = log_from_points(ref.xy, t=ref.t, phi=ref.phi, d=ref.d)
        m = compute_metrics(log, ref)
        assert m.closure_error < 1e-12
        assert m.rms_deviation < 1e-12
        assert m.heading_drift == 0.0
        assert m.d_tracking_rmse < 1e-12

    def test_circle_fit_on_synthetic_points(self):
        theta = np.linspace(0, 2 * math.pi, 500)
        xy = np.column_stack([0.2 + 0.5 * np.cos(theta),
                              -0.1 + 0.5 * np.sin(theta)])
        cx, cy, radius = fit_circle(xy)
        assert radius == pytest.approx(0.5, abs=1e-9)
        assert cx == pytest.approx(0.2, abs=1e-9)
        assert cy == pytest.approx(-0.1, abs=1e-9)

    def test_uniform_lateral_offset_is_rms(self):
        ref_xy = np.column_stack([np.linspace(0, 1, 101), np.zeros(101)])
        ref = Reference(t=np.linspace(0, 1, 101), xy=ref_xy,
                        phi=np.zeros(101), d=np.full(101, 0.4),
                        vertices=ref_xy[[0, -1]])
        log = log_from_points(ref_xy + np.array([0.0, 0.01]),
                              t=ref.t, d=0.4)
        m = compute_metrics(log, ref)
        assert m.rms_deviation == pytest.approx(0.01, abs=1e-12)

    def test_empty_log_raises(self):
        ref = analytic_reference(get_scenario("square"))
        with pytest.raises(EmptyLog):
            compute_metrics(TrajectoryLog(), ref)

    def test_min_distance_endpoints(self):
        poly = np.array([[0.0, 0.0], [1.0, 0.0]])
        pts = np.array([[0.5, 0.2], [-0.3, 0.0], [1.3, 0.4]])
        d = min_distance_to_polyline(pts, poly)
        assert d == pytest.approx([0.2, 0.3, 0.5])


class TestReport:
    def make_results(self):
        name = "square"
        scenario = get_scenario(name)
        ref = analytic_reference(scenario)
        log = log_from_points(ref.xy, t=ref.t, phi=ref.phi, d=ref.d)
        return [evaluate_scenario(name, log, ref)]

    def test_all_pass(self):
        report = experiment_report(self.make_results())
        assert report.all_passed
        assert "PASS" in report.text()
        assert report.csv_text().startswith(
            "scenario,metric,value,threshold,passed")

    def test_failing_metric_listed(self):
        results = self.make_results()
        ref = analytic_reference(get_scenario("square"))
        shifted = log_from_points(ref.xy + np.array([0.05, 0.0]),
                                  t=ref.t, d=ref.d)
        results.append(evaluate_scenario("square", shifted, ref))
        report = experiment_report(results)
        assert not report.all_passed
        text = report.text()
        assert "FAIL" in text and "rms_deviation" in text

    def test_no_results(self):
        with pytest.raises(NoResults):
            experiment_report([])


class TestReproduction:
    @pytest.mark.parametrize("name", [s.name for s in builtin_scenarios()])
    def test_every_builtin_reproduces_its_reference(self, name):
        from oddrive.config import default_config
        from oddrive.simulator import run_open_loop

        cfg = default_config()
        scenario = get_scenario(name)
        log = run_open_loop(scenario, cfg.geometry, cfg.sim)
        ref = analytic_reference(scenario)
        result = evaluate_scenario(name, log, ref)
        assert result.metrics.rms_deviation < 1e-4
        assert result.passed, result.checks


class TestSerialization:
    @pytest.mark.parametrize("name", [s.name for s in builtin_scenarios()])
    def test_round_trip(self, name):
        s = get_scenario(name)
        assert parse_scenario(serialize_scenario(s)) == s

    def test_parse_error_reports_line(self):
        with pytest.raises(ScenarioParseError) as err:
            parse_scenario("[scenario\nname = 3")
        assert "line" in str(err.value)

    def test_missing_keys(self):
        with pytest.raises(ScenarioParseError):
            parse_scenario('[scenario]\nname = "x"\n')

    def test_serialized_is_readable(self):
        text = serialize_scenario(get_scenario("circle_x"))
        assert "[scenario]" in text
        assert "[[scenario.segments]]" in text
        assert 'name = "circle_x"' in text
