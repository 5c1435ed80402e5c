#!/usr/bin/env python3
"""Run every scenario in a directory and write outputs under one root.

Each scenario gets its own subdirectory named after the TOML file, holding
trace.jsonl, metrics.csv, and cloud.xyz when the scenario maps. Prints one
summary line per scenario.

Usage: run_all_scenarios.py [--scenario-dir DIR] [--out-root DIR]
"""

import argparse
import glob
import os
import sys
import time

from uavlab import emit_outputs, load_scenario, run


def main(argv=None) -> int:
    here = os.path.dirname(os.path.abspath(__file__))
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--scenario-dir",
        default=os.path.join(here, os.pardir, "scenarios"),
        help="directory of scenario TOML files (default: ../scenarios)",
    )
    parser.add_argument(
        "--out-root",
        default="out",
        help="outputs land in <out-root>/<scenario-stem>/ (default: out)",
    )
    args = parser.parse_args(argv)

    paths = sorted(glob.glob(os.path.join(args.scenario_dir, "*.toml")))
    if not paths:
        print(f"no scenario files in {args.scenario_dir}", file=sys.stderr)
        return 1

    for path in paths:
        stem = os.path.splitext(os.path.basename(path))[0]
        cfg = load_scenario(path)
        started = time.perf_counter()
        result = run(cfg)
        elapsed = time.perf_counter() - started
        emit_outputs(result, os.path.join(args.out_root, stem))
        m = result.metrics
        print(
            f"{stem}: ticks={cfg.ticks} wall={elapsed:.2f}s"
            f" min_separation={m.min_separation_m}"
            f" delivery_ratio={m.delivery_ratio}"
            f" packets={m.packets_total}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
