"""The scripts/ tools, driven as subprocesses the way a user would run them.

reaggregate_trace.py is deliberately independent of the package, so comparing
its CSV to the emitted metrics.csv cross-checks the aggregation two ways.
"""

import os
import subprocess
import sys

from uavlab.pipeline import emit_outputs, run
from uavlab.config import parse_scenario

SCRIPTS = os.path.join(os.path.dirname(__file__), os.pardir, "scripts")

TRAFFIC_CHAIN = """\
name = "chatty"
seed = 21
ticks = 60

[chain.ground]
id = 0
position = [0.0, 0.0, 0.0]

[[chain.relays]]
id = 1
position = [40.0, 0.0, 50.0]

[chain.lead]
id = 2
position = [80.0, 0.0, 50.0]

[traffic]
period_ticks = 4
src = 2
dst = 0
"""

QUIET_PAIR = """\
name = "quiet"
seed = 2
ticks = 15

[chain.ground]
id = 0
position = [0.0, 0.0, 0.0]

[chain.lead]
id = 1
position = [25.0, 0.0, 40.0]
"""


def emit_scenario(text: str, out_dir) -> None:
    emit_outputs(run(parse_scenario(text)), str(out_dir))


def reaggregate(trace_path, *extra: str) -> subprocess.CompletedProcess:
    script = os.path.join(SCRIPTS, "reaggregate_trace.py")
    return subprocess.run(
        [sys.executable, script, str(trace_path), *extra],
        capture_output=True, text=True,
    )


class TestReaggregateTrace:
    def test_matches_emitted_csv_with_traffic(self, tmp_path):
        emit_scenario(TRAFFIC_CHAIN, tmp_path)
        proc = reaggregate(tmp_path / "trace.jsonl")
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout == (tmp_path / "metrics.csv").read_text()

    def test_matches_emitted_csv_without_traffic(self, tmp_path):
        # no packets: the NA cells must round-trip too
        emit_scenario(QUIET_PAIR, tmp_path)
        proc = reaggregate(tmp_path / "trace.jsonl")
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout == (tmp_path / "metrics.csv").read_text()
        assert proc.stdout.splitlines()[1].startswith("NA,NA,")

    def test_out_flag_writes_file(self, tmp_path):
        emit_scenario(TRAFFIC_CHAIN, tmp_path)
        rebuilt = tmp_path / "rebuilt.csv"
        proc = reaggregate(tmp_path / "trace.jsonl", "--out", str(rebuilt))
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout == ""
        assert rebuilt.read_bytes() == (tmp_path / "metrics.csv").read_bytes()

    def test_missing_trace_fails(self, tmp_path):
        proc = reaggregate(tmp_path / "absent.jsonl")
        assert proc.returncode != 0


class TestRunAllScenarios:
    def test_runs_each_toml_and_writes_outputs(self, tmp_path):
        scenario_dir = tmp_path / "scenarios"
        scenario_dir.mkdir()
        (scenario_dir / "tiny.toml").write_text(TRAFFIC_CHAIN)
        out_root = tmp_path / "out"
        script = os.path.join(SCRIPTS, "run_all_scenarios.py")
        proc = subprocess.run(
            [sys.executable, script,
             "--scenario-dir", str(scenario_dir),
             "--out-root", str(out_root)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.startswith("tiny: ticks=60")
        assert (out_root / "tiny" / "trace.jsonl").exists()
        assert (out_root / "tiny" / "metrics.csv").exists()

    def test_empty_dir_fails(self, tmp_path):
        script = os.path.join(SCRIPTS, "run_all_scenarios.py")
        proc = subprocess.run(
            [sys.executable, script, "--scenario-dir", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "no scenario files" in proc.stderr
