#!/usr/bin/env python3
"""Re-derive metrics.csv from a trace.jsonl file.

Standalone on purpose: this script re-implements the aggregation from the
trace record structure alone, without importing the simulation package, so
its output can cross-check the metrics.csv a run emitted. Byte-identical
output is the expectation.

Usage: reaggregate_trace.py TRACE_JSONL [--out METRICS_CSV]
"""

import argparse
import json
import sys

COLUMNS = (
    "delivery_ratio",
    "mean_latency_ticks",
    "min_separation_m",
    "connected_fraction",
    "convergence_tick",
    "max_hop_length_m",
    "packets_total",
)


def aggregate(records: list[dict]) -> dict:
    enq_tick: dict[int, int] = {}
    delivered_latencies: list[int] = []
    packets = 0
    terminated = 0
    min_sep = None
    max_hop = None
    all_up_count = 0
    last_unconverged = None

    for rec in records:
        sep = rec["min_separation"]
        if sep is not None and (min_sep is None or sep < min_sep):
            min_sep = sep
        links = rec["links"]
        for link in links:
            if max_hop is None or link["distance"] > max_hop:
                max_hop = link["distance"]
        if all(link["up"] for link in links):
            all_up_count += 1
        if not rec["converged"]:
            last_unconverged = rec["tick"]
        for ev in rec["net_events"]:
            if ev["kind"] == "enqueued":
                packets += 1
                enq_tick[ev["pkt_id"]] = ev["tick"]
            elif ev["kind"] == "delivered":
                delivered_latencies.append(ev["tick"] - enq_tick[ev["pkt_id"]])
                terminated += 1
            elif ev["kind"] == "dropped":
                terminated += 1

    if not packets:
        ratio = None
    elif terminated:
        ratio = len(delivered_latencies) / terminated
    else:
        ratio = 1.0

    if last_unconverged is None:
        convergence = records[0]["tick"] if records else None
    elif last_unconverged == records[-1]["tick"]:
        convergence = None
    else:
        convergence = last_unconverged + 1

    return {
        "delivery_ratio": ratio,
        "mean_latency_ticks": (
            sum(delivered_latencies) / len(delivered_latencies) if delivered_latencies else None
        ),
        "min_separation_m": min_sep,
        "connected_fraction": all_up_count / len(records) if records else 0.0,
        "convergence_tick": convergence,
        "max_hop_length_m": max_hop,
        "packets_total": packets,
    }


def to_csv(values: dict) -> str:
    cells = ["NA" if values[col] is None else str(values[col]) for col in COLUMNS]
    return ",".join(COLUMNS) + "\n" + ",".join(cells) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("trace", help="trace.jsonl file written by a run")
    parser.add_argument("--out", default=None, help="write CSV here instead of stdout")
    args = parser.parse_args(argv)

    with open(args.trace, "r", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    text = to_csv(aggregate(records))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
