"""Command-line frontend: kinematics calculator, scenario runner, and
self-verification suite.

Subcommands:
  kin fk|ik|odd-fk|odd-ik   evaluate the kinematic maps on given values
  sim                        run a scenario, write CSV logs and metrics
  verify                     run the full verification battery

`oddrive --print-config` prints the full config schema with defaults.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import config_to_toml, default_config, load_config
from .drive_models import BodyTwist, GroupVelocities, odd_forward, odd_inverse
from .errors import OddriveError, SingularGeometry
from .mecanum import body_from_wheels, derivation_log, sigma1, wheels_from_body
from .runner import default_output_dir, run_scenario_files
from .scenarios import builtin_scenarios, get_scenario, parse_scenario
from .verify import degenerate_pattern_report, run_all


def _print_values(pairs, as_json: bool):
    pairs = [(k, 0.0 if v == 0.0 else v, u) for k, v, u in pairs]
    if as_json:
        print(json.dumps({k: v for k, v, _ in pairs}))
    else:
        for key, value, unit in pairs:
            print(f"{key} = {value:.9g} {unit}".rstrip())


def _cmd_kin(args) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    geom = cfg.geometry
    d = args.d
    try:
        if args.kin_op == "fk":
            t = body_from_wheels(args.rates, geom, d)
            _print_values([("vx_B", t.vx, "m/s"), ("vy_B", t.vy, "m/s"),
                           ("wz_B", t.wz, "rad/s"), ("d_dot", t.d_dot, "m/s")],
                          args.json)
        elif args.kin_op == "ik":
            t = BodyTwist(args.vx, args.vy, args.wz, args.ddot)
            rates = wheels_from_body(t, geom, d)
            _print_values([(f"theta{i + 1}", float(r), "rad/s")
                           for i, r in enumerate(rates)], args.json)
        elif args.kin_op == "odd-fk":
            g = GroupVelocities(args.vxl, args.vyl, args.vxr, args.vyr)
            t = odd_forward(g, d)
            _print_values([("vx_B", t.vx, "m/s"), ("vy_B", t.vy, "m/s"),
                           ("wz_B", t.wz, "rad/s"), ("d_dot", t.d_dot, "m/s")],
                          args.json)
        else:  # odd-ik
            t = BodyTwist(args.vx, args.vy, args.wz, args.ddot)
            g = odd_inverse(t, d)
            _print_values([("vx_L", g.vx_l, "m/s"), ("vy_L", g.vy_l, "m/s"),
                           ("vx_R", g.vx_r, "m/s"), ("vy_R", g.vy_r, "m/s")],
                          args.json)
    except SingularGeometry as exc:
        print(f"error: {exc} (sigma1={sigma1(geom, d):.6g})", file=sys.stderr)
        return 2
    except OddriveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_sim(args) -> int:
    cfg = load_config(args.config) if args.config else default_config()
    from dataclasses import replace

    sim = cfg.sim
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if args.dt is not None:
        sim = replace(sim, dt=args.dt,
                      control_dt=max(sim.control_dt, args.dt))
    if args.integrator is not None:
        sim = replace(sim, integrator=args.integrator)
    cfg = replace(cfg, sim=sim)

    if args.scenario_file:
        with open(args.scenario_file, "r", encoding="utf-8") as fh:
            scenario = parse_scenario(fh.read())
    elif args.scenario:
        scenario = get_scenario(args.scenario)
    else:
        print("error: need --scenario or --scenario-file", file=sys.stderr)
        return 2
    try:
        paths = run_scenario_files(scenario, cfg, args.out, mode=args.mode,
                                   plot=args.plot)
    except OddriveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_verify(args) -> int:
    results = run_all(seed=args.seed)
    for result in results:
        print(result.line())
    print(degenerate_pattern_report())
    if args.derivation_log:
        print()
        print(derivation_log().text())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oddrive",
        description="Omni differential drive kinematics and simulation")
    parser.add_argument("--print-config", action="store_true",
                        help="print the config schema with defaults and exit")
    parser.add_argument("--config", help="shared TOML config file")
    sub = parser.add_subparsers(dest="command")

    kin = sub.add_parser("kin", help="kinematics calculator")
    kin.add_argument("--config", help="shared TOML config file")
    kin_sub = kin.add_subparsers(dest="kin_op", required=True)
    fk = kin_sub.add_parser("fk", help="wheel rates -> body twist")
    fk.add_argument("--rates", nargs=4, type=float, required=True,
                    metavar=("T1", "T2", "T3", "T4"))
    ik = kin_sub.add_parser("ik", help="body twist -> wheel rates")
    offk = kin_sub.add_parser("odd-fk", help="group velocities -> body twist")
    for name, p in (("vxl", offk), ("vyl", offk), ("vxr", offk), ("vyr", offk)):
        p.add_argument(f"--{name}", type=float, default=0.0)
    odik = kin_sub.add_parser("odd-ik", help="body twist -> group velocities")
    for p in (ik, odik):
        p.add_argument("--vx", type=float, default=0.0)
        p.add_argument("--vy", type=float, default=0.0)
        p.add_argument("--wz", type=float, default=0.0)
        p.add_argument("--ddot", type=float, default=0.0)
    for p in (fk, ik, offk, odik):
        p.add_argument("--d", type=float, default=0.4,
                       help="wheel-group spacing in meters (default 0.4)")
        p.add_argument("--json", action="store_true",
                       help="emit machine-readable JSON")

    sim = sub.add_parser("sim", help="run a scenario and write CSV logs")
    sim.add_argument("--scenario",
                     choices=[s.name for s in builtin_scenarios()],
                     help="built-in scenario name")
    sim.add_argument("--scenario-file", help="scenario TOML file")
    sim.add_argument("--config", help="shared TOML config file")
    sim.add_argument("--out", default=default_output_dir(),
                     help="output directory (env ODDRIVE_OUT overrides the default)")
    sim.add_argument("--seed", type=int, help="RNG seed override")
    sim.add_argument("--dt", type=float, help="integration step override (s)")
    sim.add_argument("--integrator", choices=("euler", "rk4"))
    sim.add_argument("--mode", choices=("open", "closed"),
                     help="override the scenario's loop mode")
    sim.add_argument("--plot", action="store_true",
                     help="also write an SVG overlay of actual vs reference")

    ver = sub.add_parser("verify", help="run the verification battery")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--derivation-log", action="store_true",
                     help="print the closed-form cross-check report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        cfg = load_config(args.config) if args.config else default_config()
        print(config_to_toml(cfg), end="")
        return 0
    if args.command == "kin":
        return _cmd_kin(args)
    if args.command == "sim":
        return _cmd_sim(args)
    if args.command == "verify":
        return _cmd_verify(args)
    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
