"""Store-and-forward packet relaying over the static chain.

Routing is the chain order itself (a line topology). Each packet moves at most
one hop per tick, waits at its current node while the next link is down, and
is dropped only when its age reaches the TTL. Queues are unbounded unless a
per-link bytes_per_tick cap is set, in which case excess packets are deferred
to later ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .radio import LinkEstimate


class EventKind(Enum):
    ENQUEUED = "enqueued"
    HOPPED = "hopped"
    DELIVERED = "delivered"
    DROPPED = "dropped"


class DropReason(Enum):
    TTL_EXPIRED = "ttl_expired"
    LINK_DOWN = "link_down"


@dataclass(frozen=True)
class NetEvent:
    tick: int
    pkt_id: int
    kind: EventKind
    at_node: int
    reason: DropReason | None = None


@dataclass
class Packet:
    pkt_id: int
    src: int
    dst: int
    created_tick: int
    size_bytes: int
    deadline_ticks: int
    hops_taken: int = 0


@dataclass
class RelayNetwork:
    """Mutable network state, advanced once per tick by its single owner."""

    chain_order: tuple[int, ...]          # node ids, ground side first
    default_ttl: int = 200                # ticks
    bytes_per_tick: int | None = None     # per-link capacity cap; None = unbounded

    _queues: dict[int, list[Packet]] = field(default_factory=dict, repr=False)
    _next_pkt_id: int = field(default=0, repr=False)
    _pending: list[NetEvent] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if len(self.chain_order) < 2:
            raise ValueError("chain needs at least two nodes")
        if len(set(self.chain_order)) != len(self.chain_order):
            raise ValueError(f"duplicate node ids in chain: {self.chain_order}")
        if self.default_ttl <= 0:
            raise ValueError(f"default_ttl must be > 0, got {self.default_ttl}")
        if self.bytes_per_tick is not None and self.bytes_per_tick <= 0:
            raise ValueError(f"bytes_per_tick must be > 0, got {self.bytes_per_tick}")
        self._queues = {idx: [] for idx in range(len(self.chain_order))}

    def node_index(self, node_id: int) -> int:
        try:
            return self.chain_order.index(node_id)
        except ValueError:
            raise ValueError(f"node {node_id} is not a chain member") from None

    def queued_packets(self) -> list[Packet]:
        """All in-flight packets, ascending pkt_id (inspection helper)."""
        out = [p for q in self._queues.values() for p in q]
        out.sort(key=lambda p: p.pkt_id)
        return out


def enqueue_packet(net: RelayNetwork, src: int, dst: int, size_bytes: int, tick: int) -> int:
    """Create a packet at src bound for dst; returns its id.

    The Enqueued event is buffered on the network and surfaces with the next
    forward_tick call (or drain_events).
    """
    if src == dst:
        raise ValueError("degenerate route: src == dst")
    src_idx = net.node_index(src)
    net.node_index(dst)
    if size_bytes <= 0:
        raise ValueError(f"size_bytes must be > 0, got {size_bytes}")
    pkt = Packet(
        pkt_id=net._next_pkt_id,
        src=src,
        dst=dst,
        created_tick=tick,
        size_bytes=size_bytes,
        deadline_ticks=net.default_ttl,
    )
    net._next_pkt_id += 1
    net._queues[src_idx].append(pkt)
    net._pending.append(NetEvent(tick=tick, pkt_id=pkt.pkt_id, kind=EventKind.ENQUEUED, at_node=src))
    return pkt.pkt_id


def drain_events(net: RelayNetwork) -> list[NetEvent]:
    """Take the buffered Enqueued events (the scenario loop calls this after
    injecting traffic so events land in the right trace record)."""
    out = net._pending
    net._pending = []
    return out


def forward_tick(net: RelayNetwork, links: Sequence[LinkEstimate], tick: int) -> list[NetEvent]:
    """Advance every queued packet by at most one hop; returns this tick's events.

    links must be the current chain_links output (one estimate per hop, ground
    side first). Order of work, all deterministic: buffered Enqueued events
    first, then TTL expiry over all queued packets in ascending pkt_id, then
    forwarding with nodes processed from the lead side toward ground and each
    node's packets in ascending pkt_id. A packet that hops is not moved again
    within the same tick.
    """
    n_hops = len(net.chain_order) - 1
    if len(links) != n_hops:
        raise ValueError(f"expected {n_hops} link estimates, got {len(links)}")
    for idx, est in enumerate(links):
        want = (net.chain_order[idx], net.chain_order[idx + 1])
        if (est.from_id, est.to_id) != want:
            raise ValueError(f"link {idx} covers {(est.from_id, est.to_id)}, chain expects {want}")

    events = drain_events(net)

    expired: list[tuple[int, Packet]] = []
    for idx in net._queues:
        for pkt in net._queues[idx]:
            if tick - pkt.created_tick >= pkt.deadline_ticks:
                expired.append((idx, pkt))
    expired.sort(key=lambda pair: pair[1].pkt_id)
    for idx, pkt in expired:
        net._queues[idx].remove(pkt)
        events.append(NetEvent(
            tick=tick, pkt_id=pkt.pkt_id, kind=EventKind.DROPPED,
            at_node=net.chain_order[idx], reason=DropReason.TTL_EXPIRED,
        ))

    moved: set[int] = set()
    bytes_used = [0] * n_hops
    for node_idx in range(len(net.chain_order) - 1, -1, -1):
        for pkt in sorted(net._queues[node_idx], key=lambda p: p.pkt_id):
            if pkt.pkt_id in moved:
                continue
            dst_idx = net.node_index(pkt.dst)
            step = 1 if dst_idx > node_idx else -1
            hop_idx = node_idx if step == 1 else node_idx - 1
            if not links[hop_idx].up:
                continue
            if net.bytes_per_tick is not None and bytes_used[hop_idx] + pkt.size_bytes > net.bytes_per_tick:
                continue
            bytes_used[hop_idx] += pkt.size_bytes
            net._queues[node_idx].remove(pkt)
            pkt.hops_taken += 1
            moved.add(pkt.pkt_id)
            next_idx = node_idx + step
            if next_idx == dst_idx:
                events.append(NetEvent(
                    tick=tick, pkt_id=pkt.pkt_id, kind=EventKind.DELIVERED, at_node=pkt.dst,
                ))
            else:
                net._queues[next_idx].append(pkt)
                events.append(NetEvent(
                    tick=tick, pkt_id=pkt.pkt_id, kind=EventKind.HOPPED,
                    at_node=net.chain_order[next_idx],
                ))
    return events


@dataclass(frozen=True)
class DeliveryStats:
    enqueued: int
    delivered: int
    dropped: int
    delivery_ratio: float                     # 1.0 when nothing terminated
    mean_latency_ticks: float | None          # None when nothing delivered
    dropped_by_reason: dict[DropReason, int]


def delivery_stats(events: Sequence[NetEvent]) -> DeliveryStats:
    """Aggregate an event stream; raises on a packet with two terminal events."""
    enq_tick: dict[int, int] = {}
    terminal: dict[int, NetEvent] = {}
    for ev in events:
        if ev.kind is EventKind.ENQUEUED:
            enq_tick[ev.pkt_id] = ev.tick
        elif ev.kind in (EventKind.DELIVERED, EventKind.DROPPED):
            if ev.pkt_id in terminal:
                raise ValueError(f"packet {ev.pkt_id} has two terminal events")
            terminal[ev.pkt_id] = ev

    latencies: list[int] = []
    dropped_by_reason: dict[DropReason, int] = {}
    delivered = 0
    dropped = 0
    for pkt_id, ev in terminal.items():
        if ev.kind is EventKind.DELIVERED:
            if pkt_id not in enq_tick:
                raise ValueError(f"packet {pkt_id} delivered without an Enqueued event")
            delivered += 1
            latencies.append(ev.tick - enq_tick[pkt_id])
        else:
            dropped += 1
            reason = ev.reason if ev.reason is not None else DropReason.LINK_DOWN
            dropped_by_reason[reason] = dropped_by_reason.get(reason, 0) + 1

    total = delivered + dropped
    ratio = delivered / total if total else 1.0
    mean_latency = sum(latencies) / len(latencies) if latencies else None
    return DeliveryStats(
        enqueued=len(enq_tick),
        delivered=delivered,
        dropped=dropped,
        delivery_ratio=ratio,
        mean_latency_ticks=mean_latency,
        dropped_by_reason=dropped_by_reason,
    )
