"""Relay-chain positioning: slot assignment, proportional tracking, stretch guard.

The chain is ground station -> relay 1 -> ... -> relay M -> lead. Relays hold
evenly spaced slots on the straight line between ground and lead (in the
horizontal plane, at a fixed cruise altitude); the stretch guard throttles the
lead when the chain approaches its radio range budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernel import AgentState, KinematicLimits, Vec3, clamp_vector, vec_dist
from .radio import RadioParams, max_link_range


@dataclass(frozen=True)
class ChainTopology:
    """Node ids along the chain. relay_ids is ordered, ground side first."""

    ground_id: int
    relay_ids: tuple[int, ...]
    lead_id: int
    cruise_alt: float = 50.0

    def __post_init__(self) -> None:
        ids = self.node_ids()
        if len(set(ids)) != len(ids):
            raise ValueError(f"chain node ids must be distinct, got {ids}")
        if not (math.isfinite(self.cruise_alt) and self.cruise_alt > 0.0):
            raise ValueError(f"cruise_alt must be > 0, got {self.cruise_alt}")

    def node_ids(self) -> list[int]:
        return [self.ground_id, *self.relay_ids, self.lead_id]

    @property
    def n_relays(self) -> int:
        return len(self.relay_ids)


@dataclass(frozen=True)
class ControllerParams:
    k_p: float = 0.8       # proportional gain on position error, 1/s
    alpha: float = 0.8     # fraction of max link range treated as safe
    conv_tol: float = 2.0  # slot error below which the chain counts as converged, m

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k_p) and self.k_p > 0.0):
            raise ValueError(f"k_p must be > 0, got {self.k_p}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not (math.isfinite(self.conv_tol) and self.conv_tol > 0.0):
            raise ValueError(f"conv_tol must be > 0, got {self.conv_tol}")


def desired_positions(ground: Vec3, lead: Vec3, chain: ChainTopology) -> list[Vec3]:
    """Slot for relay i (1-based from the ground side): the point a fraction
    i/(M+1) along the ground->lead segment in xy, at cruise altitude."""
    m = chain.n_relays
    out: list[Vec3] = []
    for i in range(1, m + 1):
        f = i / (m + 1)
        out.append((
            ground[0] + f * (lead[0] - ground[0]),
            ground[1] + f * (lead[1] - ground[1]),
            chain.cruise_alt,
        ))
    return out


def relay_commands(
    relays: list[AgentState],
    targets: list[Vec3],
    cp: ControllerParams,
    lim: KinematicLimits,
) -> dict[int, Vec3]:
    """Proportional velocity command toward each relay's slot, clamped to v_max.

    relays must be index-aligned with targets (chain order).
    """
    if len(relays) != len(targets):
        raise ValueError(f"{len(relays)} relays but {len(targets)} targets")
    cmds: dict[int, Vec3] = {}
    for agent, tgt in zip(relays, targets):
        err = (
            tgt[0] - agent.position[0],
            tgt[1] - agent.position[1],
            tgt[2] - agent.position[2],
        )
        cmds[agent.id] = clamp_vector(
            (cp.k_p * err[0], cp.k_p * err[1], cp.k_p * err[2]), lim.v_max
        )
    return cmds


def stretch_guard(ground: Vec3, lead: Vec3, n_relays: int, rp: RadioParams, cp: ControllerParams) -> float:
    """Speed scale in [0, 1] for the lead's command, from chain stretch.

    per_hop = |lead - ground| / (M+1) against d_safe = alpha * max_link_range:
    1 below d_safe, linear taper between d_safe and max_link_range, 0 at or
    beyond max_link_range (chain fully stretched; lead must hold).
    """
    per_hop = vec_dist(ground, lead) / (n_relays + 1)
    d_max = max_link_range(rp)
    d_safe = cp.alpha * d_max
    if per_hop <= d_safe:
        return 1.0
    if per_hop >= d_max:
        return 0.0
    return (d_max - per_hop) / (d_max - d_safe)


def convergence_status(
    relays: list[AgentState], targets: list[Vec3], conv_tol: float
) -> tuple[bool, float]:
    """(converged, max slot error). A chain with no relays is converged at 0."""
    if len(relays) != len(targets):
        raise ValueError(f"{len(relays)} relays but {len(targets)} targets")
    max_err = 0.0
    for agent, tgt in zip(relays, targets):
        max_err = max(max_err, vec_dist(agent.position, tgt))
    return max_err <= conv_tol, max_err
