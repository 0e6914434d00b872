"""Batch entry point: run campaigns, list shipped scenarios, probe logdets.

Exit codes: 0 success, 1 configuration error (message on stderr),
2 runtime failure.  Progress goes to stderr; data only to files/stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import fim, harness
from .config import (ScenarioError, gamma_const, load_scenario,
                     noise_power)

_SCENARIO_FILES = (
    ("three_radar_four_target", "3r4t.toml"),
    ("six_radar_three_target", "6r3t.toml"),
    ("four_radar_four_target", "4r4t.toml"),
)


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario ('3r4t', '6r3t', '4r4t')."""
    fname = name if name.endswith(".toml") else name + ".toml"
    return Path(str(resources.files("radartrack") / "scenarios" / fname))


def list_scenarios() -> str:
    """Shipped scenarios with their initial target matrices."""
    lines = []
    for label, fname in _SCENARIO_FILES:
        loaded = load_scenario(scenario_path(fname))
        sc = loaded.scenario
        lines.append(f"{label} ({sc.num_radars} radars, {sc.num_targets} "
                     f"targets) [scenarios/{fname}]")
        lines.append("  initial targets [x y z vx vy vz]:")
        for row in sc.initial_targets:
            lines.append("    " + " ".join(f"{v:g}" for v in row))
        lines.append("")
    return "\n".join(lines)


def _build_parser() -> _Parser:
    parser = _Parser(prog="radartrack", add_help=True)
    parser.add_argument("--scenario", help="scenario TOML file")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--controller", choices=("mppi", "stationary"))
    parser.add_argument("--model", choices=("ddr", "ccr"))
    parser.add_argument("--fim", choices=("sfim", "pfim"))
    parser.add_argument("--out", default="./out")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--list-scenarios", action="store_true",
                        help="print the shipped scenarios and exit")
    parser.add_argument("--probe", metavar="X,Y,Z",
                        help="emit the information logdet for a probe "
                             "target at these coordinates and exit")
    parser.add_argument("--probe-trace", help="trace CSV supplying radar "
                                              "positions for --probe")
    parser.add_argument("--probe-step", type=int, default=0)
    return parser


def _probe(args, loaded) -> int:
    try:
        coords = [float(v) for v in args.probe.split(",")]
        if len(coords) != 3:
            raise ValueError
    except ValueError:
        raise _CliError("--probe expects X,Y,Z") from None
    if not args.probe_trace:
        raise _CliError("--probe requires --probe-trace")
    sc = loaded.scenario
    trace = harness.trace_from_csv(args.probe_trace, sc.num_radars,
                                   sc.num_targets)
    if not 0 <= args.probe_step < trace.num_steps:
        raise _CliError(f"--probe-step out of range [0, {trace.num_steps})")
    radars = trace.radar_states[args.probe_step]
    gamma = gamma_const(loaded.radar, noise_power(loaded.radar,
                                                  sc.num_targets))
    target = np.array(coords + [0.0, 0.0, 0.0])
    value = fim.logdet_objective(fim.sfim_multi(target, radars, gamma))
    print(repr(value))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    try:
        if args.list_scenarios:
            print(list_scenarios())
            return 0
        if not args.scenario:
            print("error: --scenario is required", file=sys.stderr)
            parser.print_usage(sys.stderr)
            return 1
        loaded = load_scenario(args.scenario)
        overrides = {}
        if args.controller:
            overrides["controller"] = args.controller
        if args.model:
            overrides["measurement_model"] = args.model
        if args.fim:
            overrides["fim_mode"] = args.fim
        if overrides:
            loaded = loaded._replace(
                scenario=replace(loaded.scenario, **overrides))
        if args.probe:
            return _probe(args, loaded)
        if args.trials < 1:
            raise _CliError("--trials must be ≥ 1")
    except (_CliError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)

        def progress(done, total):
            if not args.quiet:
                print(f"trial {done}/{total} complete", file=sys.stderr)

        result = harness.run_campaign(loaded, args.trials, args.seed,
                                      progress=progress)
        for i, trace in enumerate(result.traces):
            if trace is not None:
                harness.trace_to_csv(trace, out_dir / f"trial_{i:03d}.csv")
        metrics = harness.campaign_metrics(loaded, result, args.trials,
                                           args.seed)
        with open(out_dir / "metrics.json", "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if not args.quiet:
            for i, msg in result.failures:
                print(f"trial {i} failed: {msg}", file=sys.stderr)
            print(f"wrote {out_dir / 'metrics.json'}", file=sys.stderr)
        return 0
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
