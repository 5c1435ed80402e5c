"""Two-stage fail-safe collision avoidance.

Stage 1 (repulsion_adjust) adds a soft pairwise repulsion to velocity commands
inside the alert radius. Stage 2 (critical_override) replaces commands outright
inside the critical radius with a deterministic horizontal push plus vertical
deconfliction (lower id climbs). Ground stations repel but are never commanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernel import AgentState, KinematicLimits, Role, Vec3, clamp_vector, vec_dist

COINCIDENT_EPS = 1e-6


@dataclass(frozen=True)
class GuardParams:
    d_alert: float = 8.0     # repulsion activation radius, m
    d_critical: float = 2.0  # hard override radius, m
    k_r: float = 0.5         # repulsion gain, 1/s
    v_z_evade: float = 1.0   # override climb/descend speed, m/s

    def __post_init__(self) -> None:
        if not 0.0 < self.d_critical < self.d_alert:
            raise ValueError(
                f"need 0 < d_critical < d_alert, got d_critical={self.d_critical}, d_alert={self.d_alert}"
            )
        if not (math.isfinite(self.k_r) and self.k_r > 0.0):
            raise ValueError(f"k_r must be > 0, got {self.k_r}")
        if not (math.isfinite(self.v_z_evade) and self.v_z_evade > 0.0):
            raise ValueError(f"v_z_evade must be > 0, got {self.v_z_evade}")


def pairwise_separations(agents: list[AgentState]) -> tuple[float, tuple[int, int] | None]:
    """Minimum pairwise distance and the closest pair (lower id first).

    Fewer than two agents gives (inf, None). Ties keep the lexicographically
    first pair.
    """
    ordered = sorted(agents, key=lambda a: a.id)
    best = math.inf
    pair: tuple[int, int] | None = None
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            d = vec_dist(ordered[i].position, ordered[j].position)
            if d < best:
                best = d
                pair = (ordered[i].id, ordered[j].id)
    return best, pair


def _away(a: AgentState, b: AgentState) -> tuple[Vec3, float]:
    """Unit vector pushing a away from b, and their distance.

    Coincident agents (d < 1e-6) deterministically split along x: the lower id
    takes +x.
    """
    d = vec_dist(a.position, b.position)
    if d < COINCIDENT_EPS:
        return ((1.0, 0.0, 0.0) if a.id < b.id else (-1.0, 0.0, 0.0)), d
    return (
        (a.position[0] - b.position[0]) / d,
        (a.position[1] - b.position[1]) / d,
        (a.position[2] - b.position[2]) / d,
    ), d


def _commandable(agent: AgentState) -> bool:
    return agent.role is not Role.GROUND_STATION


def repulsion_adjust(
    commands: dict[int, Vec3],
    agents: list[AgentState],
    gp: GuardParams,
    lim: KinematicLimits,
) -> dict[int, Vec3]:
    """Add linear pairwise repulsion to commands for pairs inside d_alert.

    For each unordered pair closer than d_alert (and not under d_critical,
    which is the override stage's regime), each mobile agent gains
    k_r * (d_alert - d) away from the other. Only adjusted commands are
    re-clamped to v_max, so the function is the identity when no pair is in
    range. A mobile agent missing from commands is treated as hovering.
    """
    ordered = sorted(agents, key=lambda a: a.id)
    adjust: dict[int, Vec3] = {}
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            away, d = _away(a, b)
            if d >= gp.d_alert or d < gp.d_critical:
                continue
            mag = gp.k_r * (gp.d_alert - d)
            if _commandable(a):
                cur = adjust.get(a.id, (0.0, 0.0, 0.0))
                adjust[a.id] = (cur[0] + mag * away[0], cur[1] + mag * away[1], cur[2] + mag * away[2])
            if _commandable(b):
                cur = adjust.get(b.id, (0.0, 0.0, 0.0))
                adjust[b.id] = (cur[0] - mag * away[0], cur[1] - mag * away[1], cur[2] - mag * away[2])
    if not adjust:
        return dict(commands)
    out = dict(commands)
    for agent_id in sorted(adjust):
        da = adjust[agent_id]
        base = out.get(agent_id, (0.0, 0.0, 0.0))
        out[agent_id] = clamp_vector(
            (base[0] + da[0], base[1] + da[1], base[2] + da[2]), lim.v_max
        )
    return out


def critical_override(
    commands: dict[int, Vec3],
    agents: list[AgentState],
    gp: GuardParams,
    lim: KinematicLimits,
) -> dict[int, Vec3]:
    """Replace commands of agents under d_critical with the evade maneuver.

    Each affected mobile agent takes, from its lowest-id critical partner: the
    horizontal components of the full repulsion k_r * (d_alert - d) away from
    that partner, with the vertical component forced to +v_z_evade for the
    lower id of the pair and -v_z_evade for the higher (the lower id climbs).
    Overridden commands are clamped to v_max; everything else passes through.
    """
    ordered = sorted(agents, key=lambda a: a.id)
    by_id = {a.id: a for a in ordered}
    partners: dict[int, int] = {}
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            if vec_dist(a.position, b.position) >= gp.d_critical:
                continue
            if _commandable(a) and a.id not in partners:
                partners[a.id] = b.id
            if _commandable(b) and b.id not in partners:
                partners[b.id] = a.id
    if not partners:
        return dict(commands)
    out = dict(commands)
    for agent_id in sorted(partners):
        agent = by_id[agent_id]
        partner = by_id[partners[agent_id]]
        away, d = _away(agent, partner)
        mag = gp.k_r * (gp.d_alert - d)
        v_z = gp.v_z_evade if agent.id < partner.id else -gp.v_z_evade
        out[agent_id] = clamp_vector((mag * away[0], mag * away[1], v_z), lim.v_max)
    return out
