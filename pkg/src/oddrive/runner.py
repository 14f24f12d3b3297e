"""Scenario-run orchestration shared by the CLI and the verification suite."""

from __future__ import annotations

import os
from pathlib import Path

from .config import Config, build_control_stack
from .scenarios import (Scenario, analytic_reference, evaluate_scenario,
                        experiment_report)
from .simulator import TrajectoryLog, run_closed_loop, run_open_loop
from .svgplot import write_svg


def run_scenario(scenario: Scenario, cfg: Config,
                 mode: str | None = None) -> TrajectoryLog:
    """Run one scenario in the requested (or its own) mode."""
    mode = mode or scenario.mode
    if mode == "open":
        return run_open_loop(scenario, cfg.geometry, cfg.sim)
    if mode == "closed":
        stack = build_control_stack(cfg)
        return run_closed_loop(scenario, stack, cfg.geometry, cfg.sim)
    raise ValueError(f"mode must be 'open' or 'closed', got {mode!r}")


def run_scenario_files(scenario: Scenario, cfg: Config, outdir,
                       mode: str | None = None,
                       plot: bool = False) -> dict[str, Path]:
    """Run a scenario and write trajectory, reference, and metrics CSVs
    (plus an optional SVG overlay). Returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    mode = mode or scenario.mode
    log = run_scenario(scenario, cfg, mode)
    ref = analytic_reference(scenario)
    result = evaluate_scenario(scenario.name, log, ref)

    paths = {}
    traj_path = outdir / f"{scenario.name}_trajectory.csv"
    log.to_csv(traj_path)
    paths["trajectory"] = traj_path

    ref_path = outdir / f"{scenario.name}_reference.csv"
    with open(ref_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x_E,y_E,phi,d\n")
        for t, (x, y), phi, d in zip(ref.t, ref.xy, ref.phi, ref.d):
            fh.write(f"{t:.9g},{x:.9g},{y:.9g},{phi:.9g},{d:.9g}\n")
    paths["reference"] = ref_path

    metrics_path = outdir / f"{scenario.name}_metrics.csv"
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(experiment_report([result]).csv_text())
    paths["metrics"] = metrics_path

    if mode == "closed" and log.telemetry:
        tel_path = outdir / f"{scenario.name}_telemetry.csv"
        with open(tel_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(log.telemetry_csv_text())
        paths["telemetry"] = tel_path

    if plot:
        svg_path = outdir / f"{scenario.name}.svg"
        write_svg(svg_path,
                  [("actual", log.xy, False), ("reference", ref.xy, True)],
                  title=scenario.name)
        paths["plot"] = svg_path
    return paths


def default_output_dir() -> Path:
    return Path(os.environ.get("ODDRIVE_OUT", "oddrive_out"))
