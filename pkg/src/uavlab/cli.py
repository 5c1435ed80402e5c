"""Command-line front end.

Subcommands: `run` (full scenario -> trace.jsonl/metrics.csv/cloud.xyz),
`map` (mapping-only run -> one xyz file), `validate` (parse + invariants,
no simulation). Exit codes: 0 success, 1 validation error, 2 runtime abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ScenarioConfig, ScenarioError, load_scenario
from .mapping import write_xyz
from .pipeline import RunAbort, check_out_dir, emit_outputs, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write trace, metrics, and cloud files")
    p_run.add_argument("--scenario", required=True, help="scenario TOML file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--ticks", type=int, default=None, help="override the scenario tick count")

    p_map = sub.add_parser("map", help="run a mapping scenario and write only the point cloud")
    p_map.add_argument("--scenario", required=True, help="scenario TOML file (must enable lidar)")
    p_map.add_argument("--out", required=True, help="output xyz file path")

    p_val = sub.add_parser("validate", help="parse and validate a scenario file")
    p_val.add_argument("--scenario", required=True, help="scenario TOML file")

    return parser


def _load(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file not found: {path}")
    return load_scenario(path)


def _apply_overrides(cfg: ScenarioConfig, seed: int | None, ticks: int | None) -> ScenarioConfig:
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ScenarioError(f"--seed must fit in 64 bits, got {seed}")
        cfg = dataclasses.replace(cfg, seed=seed)
    if ticks is not None:
        if ticks <= 0:
            raise ScenarioError(f"--ticks must be > 0, got {ticks}")
        cfg = dataclasses.replace(cfg, ticks=ticks)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            cfg = _load(args.scenario)
            print(f"{cfg.name}: valid ({cfg.ticks} ticks, {len(cfg.initial_positions)} agents)")
            return 0

        if args.command == "run":
            cfg = _apply_overrides(_load(args.scenario), args.seed, args.ticks)
            check_out_dir(args.out)
            result = run(cfg)
            for path in emit_outputs(result, args.out):
                print(path)
            m = result.metrics
            print(
                f"{cfg.name}: min_separation={m.min_separation_m} "
                f"delivery_ratio={m.delivery_ratio} packets={m.packets_total}"
            )
            return 0

        if args.command == "map":
            cfg = _load(args.scenario)
            if cfg.mapping is None:
                raise ScenarioError("lidar: map subcommand needs a scenario with a lidar/environment table")
            out_dir = os.path.dirname(os.path.abspath(args.out))
            check_out_dir(out_dir)
            result = run(cfg)
            write_xyz(result.cloud, args.out)
            print(args.out)
            print(f"{cfg.name}: {len(result.cloud)} points")
            return 0

        raise AssertionError(f"unhandled command {args.command}")
    except (ScenarioError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RunAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
