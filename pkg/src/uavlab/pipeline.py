"""Per-tick orchestration: control -> guard -> physics -> radio -> network -> sensors.

The order is fixed and is the reproducibility contract: (1) lead mission
command scaled by the stretch guard, (2) relay slot commands, (3) repulsion
then critical override, (4) world step, (5) chain link estimation, (6) packet
forwarding then new traffic, (7) lidar scan at the configured period. One
trace record per tick plus one for the initial state.

All RNG draws come from the world's generator in a documented order per
record: radio shadowing per hop in chain order first (only when
radio.noise_sigma > 0), then lidar range noise per hit in beam order (only
when scanning this tick with range_noise_sigma > 0). The default
configuration draws nothing.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

from . import controller as ctl
from . import guard as gd
from . import relaynet as net
from .config import ScenarioConfig
from .kernel import AgentState, Role, Vec3, WorldState, clamp_vector, step_world, vec_dist
from .mapping import PointCloud, Pose, ScanFrame, assemble_cloud, simulate_scan
from .radio import chain_links


class RunAbort(RuntimeError):
    """Simulation hit a non-finite state; .tick is the failing tick."""

    def __init__(self, tick: int, cause: str):
        super().__init__(f"run aborted at tick {tick}: {cause}")
        self.tick = tick


@dataclass
class WaypointFollower:
    """Lead mission tracker: proportional command toward the current waypoint,
    capped at the leg speed; a waypoint is reached within 1 m."""

    legs: tuple
    k_p: float
    reach_dist: float = 1.0
    _idx: int = 0

    def command(self, position: Vec3) -> Vec3:
        while self._idx < len(self.legs) and vec_dist(position, self.legs[self._idx].waypoint) <= self.reach_dist:
            self._idx += 1
        if self._idx >= len(self.legs):
            return (0.0, 0.0, 0.0)
        leg = self.legs[self._idx]
        wp = leg.waypoint
        raw = (
            self.k_p * (wp[0] - position[0]),
            self.k_p * (wp[1] - position[1]),
            self.k_p * (wp[2] - position[2]),
        )
        return clamp_vector(raw, leg.speed)


@dataclass(frozen=True)
class Metrics:
    delivery_ratio: float | None
    mean_latency_ticks: float | None
    min_separation_m: float | None
    connected_fraction: float
    convergence_tick: int | None
    max_hop_length_m: float | None
    packets_total: int


@dataclass
class RunResult:
    records: list[dict]
    metrics: Metrics
    cloud: PointCloud | None
    frames: list[ScanFrame] = field(default_factory=list)


def _initial_world(cfg: ScenarioConfig) -> WorldState:
    roles: dict[int, Role] = {cfg.chain.ground_id: Role.GROUND_STATION, cfg.chain.lead_id: Role.LEAD}
    for rid in cfg.chain.relay_ids:
        roles[rid] = Role.RELAY
    agents = [
        AgentState(id=aid, position=pos, velocity=(0.0, 0.0, 0.0), role=roles[aid])
        for aid, pos in cfg.initial_positions.items()
    ]
    return WorldState.initial(agents, cfg.seed)


def _radio_draws(cfg: ScenarioConfig, world: WorldState) -> list[float] | None:
    if cfg.radio.noise_sigma <= 0.0:
        return None
    n_hops = len(cfg.chain.node_ids()) - 1
    return [world.rng.gauss(0.0, cfg.radio.noise_sigma) for _ in range(n_hops)]


def _record(
    world: WorldState,
    cfg: ScenarioConfig,
    commands: dict[int, Vec3],
    links: list,
    scale: float,
    events: list[net.NetEvent],
) -> dict:
    agents_out = []
    for a in world.agents:
        cmd = commands.get(a.id, (0.0, 0.0, 0.0))
        agents_out.append({
            "id": a.id,
            "role": a.role.value,
            "position": list(a.position),
            "velocity": list(a.velocity),
            "command": list(cmd),
        })
    links_out = [
        {
            "from": est.from_id,
            "to": est.to_id,
            "distance": est.distance,
            "rssi": est.rssi,
            "margin": est.margin,
            "up": est.up,
        }
        for est in links
    ]
    min_sep, pair = gd.pairwise_separations(world.agents)
    relays = [world.agent(rid) for rid in cfg.chain.relay_ids]
    targets = ctl.desired_positions(
        world.agent(cfg.chain.ground_id).position,
        world.agent(cfg.chain.lead_id).position,
        cfg.chain,
    )
    converged, max_err = ctl.convergence_status(relays, targets, cfg.controller.conv_tol)
    events_out = [
        {
            "tick": ev.tick,
            "pkt_id": ev.pkt_id,
            "kind": ev.kind.value,
            "at_node": ev.at_node,
            "reason": ev.reason.value if ev.reason is not None else None,
        }
        for ev in events
    ]
    return {
        "tick": world.tick,
        "agents": agents_out,
        "links": links_out,
        "stretch_scale": scale,
        "min_separation": min_sep if math.isfinite(min_sep) else None,
        "closest_pair": list(pair) if pair is not None else None,
        "converged": converged,
        "max_relay_error": max_err,
        "net_events": events_out,
    }


def run(cfg: ScenarioConfig) -> RunResult:
    """Execute a scenario to completion; returns trace records, metrics, cloud."""
    world = _initial_world(cfg)
    chain = cfg.chain
    lim = cfg.kinematics
    follower = WaypointFollower(legs=cfg.lead_mission, k_p=cfg.controller.k_p)
    network = net.RelayNetwork(
        chain_order=tuple(chain.node_ids()),
        default_ttl=cfg.traffic.ttl_ticks if cfg.traffic else 200,
        bytes_per_tick=cfg.traffic.bytes_per_tick if cfg.traffic else None,
    )
    frames: list[ScanFrame] = []
    last_yaw = 0.0

    def ground_pos() -> Vec3:
        return world.agent(chain.ground_id).position

    def lead_pos() -> Vec3:
        return world.agent(chain.lead_id).position

    def current_scale() -> float:
        return ctl.stretch_guard(ground_pos(), lead_pos(), chain.n_relays, cfg.radio, cfg.controller)

    records = [
        _record(world, cfg, {}, chain_links(chain, world.agents, cfg.radio, _radio_draws(cfg, world)),
                current_scale(), [])
    ]

    for _ in range(cfg.ticks):
        scale = current_scale()
        lead_cmd = follower.command(lead_pos())
        lead_cmd = (lead_cmd[0] * scale, lead_cmd[1] * scale, lead_cmd[2] * scale)

        relays = [world.agent(rid) for rid in chain.relay_ids]
        targets = ctl.desired_positions(ground_pos(), lead_pos(), chain)
        commands = ctl.relay_commands(relays, targets, cfg.controller, lim)
        commands[chain.lead_id] = lead_cmd

        if cfg.guard_enabled:
            commands = gd.repulsion_adjust(commands, world.agents, cfg.guard, lim)
            commands = gd.critical_override(commands, world.agents, cfg.guard, lim)

        try:
            world = step_world(world, commands, lim)
        except ValueError as exc:
            raise RunAbort(world.tick + 1, str(exc)) from exc
        tick = world.tick

        links = chain_links(chain, world.agents, cfg.radio, _radio_draws(cfg, world))

        events = net.forward_tick(network, links, tick)
        if cfg.traffic and tick % cfg.traffic.period_ticks == 0:
            net.enqueue_packet(network, cfg.traffic.src, cfg.traffic.dst, cfg.traffic.size_bytes, tick)
            events.extend(net.drain_events(network))

        if cfg.mapping is not None and tick % cfg.mapping.scan_period_ticks == 0:
            lead = world.agent(chain.lead_id)
            vx, vy = lead.velocity[0], lead.velocity[1]
            if math.hypot(vx, vy) > 1e-6:
                last_yaw = math.atan2(vy, vx)
            frame = simulate_scan(
                Pose(position=lead.position, yaw=last_yaw),
                cfg.mapping.environment,
                cfg.mapping.lidar,
                rng=world.rng,
                range_noise_sigma=cfg.mapping.range_noise_sigma,
            )
            frames.append(dataclasses.replace(frame, tick=tick))

        records.append(_record(world, cfg, commands, links, scale, events))

    cloud = assemble_cloud(frames, cfg.mapping.lidar) if cfg.mapping is not None else None
    return RunResult(records=records, metrics=compute_metrics(records), cloud=cloud, frames=frames)


def compute_metrics(records: list[dict]) -> Metrics:
    """Aggregate a full trace into the metrics row.

    Pure function of the trace records exactly as they appear in trace.jsonl,
    so the row can be re-derived from the file alone.
    """
    events: list[dict] = []
    min_sep: float | None = None
    max_hop: float | None = None
    connected = 0
    last_unconverged: int | None = None
    for rec in records:
        events.extend(rec["net_events"])
        sep = rec["min_separation"]
        if sep is not None and (min_sep is None or sep < min_sep):
            min_sep = sep
        for link in rec["links"]:
            if max_hop is None or link["distance"] > max_hop:
                max_hop = link["distance"]
        if all(link["up"] for link in rec["links"]):
            connected += 1
        if not rec["converged"]:
            last_unconverged = rec["tick"]

    delivered = 0
    dropped = 0
    latencies: list[int] = []
    enq_tick: dict[int, int] = {}
    packets = 0
    for ev in events:
        if ev["kind"] == "enqueued":
            packets += 1
            enq_tick[ev["pkt_id"]] = ev["tick"]
        elif ev["kind"] == "delivered":
            delivered += 1
            latencies.append(ev["tick"] - enq_tick[ev["pkt_id"]])
        elif ev["kind"] == "dropped":
            dropped += 1

    terminated = delivered + dropped
    ratio = (delivered / terminated) if packets and terminated else (1.0 if packets else None)
    mean_latency = sum(latencies) / len(latencies) if latencies else None

    if last_unconverged is None:
        convergence_tick: int | None = records[0]["tick"] if records else None
    elif last_unconverged == records[-1]["tick"]:
        convergence_tick = None
    else:
        convergence_tick = last_unconverged + 1

    return Metrics(
        delivery_ratio=ratio,
        mean_latency_ticks=mean_latency,
        min_separation_m=min_sep,
        connected_fraction=connected / len(records) if records else 0.0,
        convergence_tick=convergence_tick,
        max_hop_length_m=max_hop,
        packets_total=packets,
    )


METRICS_COLUMNS = (
    "delivery_ratio",
    "mean_latency_ticks",
    "min_separation_m",
    "connected_fraction",
    "convergence_tick",
    "max_hop_length_m",
    "packets_total",
)


def _csv_cell(value: float | int | None) -> str:
    return "NA" if value is None else str(value)


def metrics_csv_text(metrics: Metrics) -> str:
    row = [_csv_cell(getattr(metrics, col)) for col in METRICS_COLUMNS]
    return ",".join(METRICS_COLUMNS) + "\n" + ",".join(row) + "\n"


def trace_jsonl_text(records: list[dict]) -> str:
    return "".join(json.dumps(rec, separators=(",", ":")) + "\n" for rec in records)


def check_out_dir(out_dir: str) -> None:
    """Pre-flight writability check, run before any simulation work."""
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory is not writable: {out_dir}")


def emit_outputs(result: RunResult, out_dir: str) -> list[str]:
    """Write trace.jsonl, metrics.csv, and cloud.xyz (mapping runs only).

    Returns the paths written. Output bytes are a pure function of the run.
    """
    check_out_dir(out_dir)
    written = []
    trace_path = os.path.join(out_dir, "trace.jsonl")
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_jsonl_text(result.records))
    written.append(trace_path)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics_csv_text(result.metrics))
    written.append(metrics_path)
    if result.cloud is not None:
        from .mapping import write_xyz

        cloud_path = os.path.join(out_dir, "cloud.xyz")
        write_xyz(result.cloud, cloud_path)
        written.append(cloud_path)
    return written
