"""Log-distance path-loss radio model and chain link-state estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .kernel import AgentState, vec_dist

if TYPE_CHECKING:
    from .controller import ChainTopology


@dataclass(frozen=True)
class RadioParams:
    p_tx: float = 20.0        # transmit power, dBm
    pl0: float = 40.0         # path loss at reference distance, dB
    d0: float = 1.0           # reference distance, m
    n_exp: float = 2.2        # path-loss exponent
    rssi_min: float = -85.0   # receiver sensitivity, dBm
    noise_sigma: float = 0.0  # shadowing std dev, dB

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d0) and self.d0 > 0.0):
            raise ValueError(f"RadioParams.d0 must be > 0, got {self.d0}")
        if not (math.isfinite(self.n_exp) and self.n_exp > 0.0):
            raise ValueError(f"RadioParams.n_exp must be > 0, got {self.n_exp}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"RadioParams.noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.p_tx - self.pl0 > self.rssi_min:
            raise ValueError(
                "link budget closed at reference distance: "
                f"p_tx - pl0 = {self.p_tx - self.pl0} dBm must exceed rssi_min = {self.rssi_min} dBm"
            )


@dataclass(frozen=True)
class LinkEstimate:
    from_id: int
    to_id: int
    distance: float
    rssi: float
    margin: float  # rssi - rssi_min, dB
    up: bool       # margin >= 0


def rssi(distance: float, rp: RadioParams, noise: float = 0.0) -> float:
    """Received power in dBm at the given distance in meters.

    Distances below d0 (including zero, for coincident endpoints) evaluate at
    d0: the near-field clamp makes the model total for d >= 0. Negative
    distance is a caller bug, not a propagation condition.
    """
    if distance < 0.0:
        raise ValueError(f"negative distance: {distance}")
    d = max(distance, rp.d0)
    return rp.p_tx - rp.pl0 - 10.0 * rp.n_exp * math.log10(d / rp.d0) + noise


def max_link_range(rp: RadioParams) -> float:
    """Largest noise-free distance at which the link is still up (margin >= 0)."""
    return rp.d0 * 10.0 ** ((rp.p_tx - rp.pl0 - rp.rssi_min) / (10.0 * rp.n_exp))


def link_state(a: AgentState, b: AgentState, rp: RadioParams, noise: float = 0.0) -> LinkEstimate:
    """Evaluate the directed link a -> b at the agents' current positions."""
    if a.id == b.id:
        raise ValueError(f"link endpoints must differ, got id {a.id} twice")
    d = vec_dist(a.position, b.position)
    r = rssi(d, rp, noise)
    margin = r - rp.rssi_min
    return LinkEstimate(from_id=a.id, to_id=b.id, distance=d, rssi=r, margin=margin, up=margin >= 0.0)


def chain_links(
    chain: "ChainTopology",
    agents: Sequence[AgentState],
    rp: RadioParams,
    noise_draws: Sequence[float] | None = None,
) -> list[LinkEstimate]:
    """Evaluate every hop of the relay chain, ground side first.

    noise_draws, when given, supplies one shadowing value per hop in chain
    order (the caller draws them; this function stays pure).
    """
    by_id = {a.id: a for a in agents}
    order = chain.node_ids()
    missing = [n for n in order if n not in by_id]
    if missing:
        raise ValueError(f"chain references agents not in the world: {missing}")
    hops = list(zip(order[:-1], order[1:]))
    if noise_draws is None:
        noise_draws = [0.0] * len(hops)
    if len(noise_draws) != len(hops):
        raise ValueError(f"expected {len(hops)} noise draws, got {len(noise_draws)}")
    return [
        link_state(by_id[u], by_id[v], rp, noise)
        for (u, v), noise in zip(hops, noise_draws)
    ]
