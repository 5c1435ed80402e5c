"""Simulation kernel: agent state, kinematic limits, and the tick integrator.

All vectors are plain float 3-tuples in a fixed world frame (x east, y north,
z up, meters). The hot path deliberately avoids numpy: per-tick small-vector
math is faster with tuples and keeps arithmetic bit-reproducible across runs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

Vec3 = tuple[float, float, float]

ZERO3: Vec3 = (0.0, 0.0, 0.0)


class Role(Enum):
    GROUND_STATION = "ground_station"
    RELAY = "relay"
    LEAD = "lead"


def vec_add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vec_norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vec_dist(a: Vec3, b: Vec3) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def vec_is_finite(a: Vec3) -> bool:
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


def clamp_vector(v: Vec3, limit: float) -> Vec3:
    """Scale v down to Euclidean norm `limit` if it exceeds it; direction kept.

    limit must be >= 0. The zero vector is returned unchanged.
    """
    if limit < 0.0:
        raise ValueError(f"clamp limit must be >= 0, got {limit}")
    n = vec_norm(v)
    if n <= limit or n == 0.0:
        return v
    return vec_scale(v, limit / n)


@dataclass(frozen=True)
class KinematicLimits:
    """Shared plant limits. Units: m/s, m/s^2, 1/s, s."""

    v_max: float = 12.0
    a_max: float = 4.0
    k_v: float = 2.0
    dt: float = 0.05

    def __post_init__(self) -> None:
        for name in ("v_max", "a_max", "k_v", "dt"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ValueError(f"KinematicLimits.{name} must be finite and > 0, got {val}")


@dataclass(frozen=True)
class AgentState:
    id: int
    position: Vec3
    velocity: Vec3
    role: Role

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"agent id must be >= 0, got {self.id}")


@dataclass
class WorldState:
    """Complete simulation state.

    Owns the single RNG for the run; every stochastic draw anywhere in the
    simulation must come from this generator so a seed fixes the whole run.
    Agents are kept sorted by id.
    """

    tick: int
    agents: list[AgentState]
    rng: random.Random = field(repr=False)

    @classmethod
    def initial(cls, agents: list[AgentState], seed: int) -> "WorldState":
        ids = [a.id for a in agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate agent ids: {sorted(ids)}")
        return cls(tick=0, agents=sorted(agents, key=lambda a: a.id), rng=random.Random(seed))

    def agent(self, agent_id: int) -> AgentState:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(f"no agent with id {agent_id}")


def integrate_agent(state: AgentState, v_cmd: Vec3, lim: KinematicLimits) -> AgentState:
    """Advance one agent by one tick of velocity-tracked double-integrator dynamics.

    accel = clamp(k_v * (v_cmd - vel), a_max); vel' = clamp(vel + accel*dt, v_max);
    pos' = pos + vel'*dt (semi-implicit Euler). Ground stations ignore commands
    and never move. Non-finite inputs or outputs raise ValueError.
    """
    if not (vec_is_finite(state.position) and vec_is_finite(state.velocity) and vec_is_finite(v_cmd)):
        raise ValueError(f"non-finite state or command for agent {state.id}")
    if state.role is Role.GROUND_STATION:
        return state
    err = vec_sub(v_cmd, state.velocity)
    accel = clamp_vector(vec_scale(err, lim.k_v), lim.a_max)
    vel = clamp_vector(vec_add(state.velocity, vec_scale(accel, lim.dt)), lim.v_max)
    pos = vec_add(state.position, vec_scale(vel, lim.dt))
    if not (vec_is_finite(pos) and vec_is_finite(vel)):
        raise ValueError(f"non-finite state produced for agent {state.id}")
    return AgentState(id=state.id, position=pos, velocity=vel, role=state.role)


def step_world(world: WorldState, commands: dict[int, Vec3], lim: KinematicLimits) -> WorldState:
    """Advance every agent one tick and increment the tick counter.

    Agents integrate in ascending id order; an agent with no entry in
    `commands` gets the zero command (hover / brake to stop). Commands for
    unknown ids are rejected.
    """
    known = {a.id for a in world.agents}
    if len(known) != len(world.agents):
        raise ValueError("duplicate agent ids in world")
    unknown = set(commands) - known
    if unknown:
        raise ValueError(f"commands for unknown agent ids: {sorted(unknown)}")
    agents = [integrate_agent(a, commands.get(a.id, ZERO3), lim) for a in world.agents]
    return WorldState(tick=world.tick + 1, agents=agents, rng=world.rng)
