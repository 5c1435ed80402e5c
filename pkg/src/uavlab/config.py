"""Scenario file parsing and validation.

Scenario files are TOML. Every key is checked: unknown keys are hard errors
(a typo in a safety radius must not be silently ignored), and every
validation failure names the offending key path. Omitted optional tables get
the documented defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import tomli

from .controller import ChainTopology, ControllerParams
from .guard import GuardParams
from .kernel import KinematicLimits, Vec3
from .mapping import Box, BoxEnvironment, LidarParams
from .radio import RadioParams


class ScenarioError(ValueError):
    """Scenario file failed validation; message names the key path."""


@dataclass(frozen=True)
class TrafficPattern:
    period_ticks: int     # enqueue one packet every this many ticks
    size_bytes: int
    src: int
    dst: int
    ttl_ticks: int = 200
    bytes_per_tick: int | None = None


@dataclass(frozen=True)
class MissionLeg:
    waypoint: Vec3
    speed: float


@dataclass(frozen=True)
class MappingConfig:
    lidar: LidarParams
    environment: BoxEnvironment
    scan_period_ticks: int = 4
    range_noise_sigma: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    ticks: int
    kinematics: KinematicLimits
    radio: RadioParams
    chain: ChainTopology
    initial_positions: dict[int, Vec3]
    controller: ControllerParams
    guard: GuardParams
    guard_enabled: bool
    traffic: TrafficPattern | None
    lead_mission: tuple[MissionLeg, ...]
    mapping: MappingConfig | None


def _require_table(raw: dict, path: str, allowed: set[str], required: set[str]) -> None:
    unknown = sorted(set(raw) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ScenarioError(f"{where}: unknown key (rejected, not ignored)")
    missing = sorted(required - set(raw))
    if missing:
        where = f"{path}.{missing[0]}" if path else missing[0]
        raise ScenarioError(f"{where}: required key missing")


def _as_float(raw: dict, path: str, key: str, default: float | None = None) -> float:
    if key not in raw:
        if default is None:
            raise ScenarioError(f"{path}{key}: required key missing")
        return default
    val = raw[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{path}{key}: expected a number, got {val!r}")
    out = float(val)
    if not math.isfinite(out):
        raise ScenarioError(f"{path}{key}: must be finite, got {out}")
    return out


def _as_int(raw: dict, path: str, key: str, default: int | None = None) -> int:
    if key not in raw:
        if default is None:
            raise ScenarioError(f"{path}{key}: required key missing")
        return default
    val = raw[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{path}{key}: expected an integer, got {val!r}")
    return val


def _as_str(raw: dict, path: str, key: str) -> str:
    if key not in raw:
        raise ScenarioError(f"{path}{key}: required key missing")
    val = raw[key]
    if not isinstance(val, str):
        raise ScenarioError(f"{path}{key}: expected a string, got {val!r}")
    return val


def _as_bool(raw: dict, path: str, key: str, default: bool) -> bool:
    if key not in raw:
        return default
    val = raw[key]
    if not isinstance(val, bool):
        raise ScenarioError(f"{path}{key}: expected a boolean, got {val!r}")
    return val


def _as_vec3(raw: dict, path: str, key: str) -> Vec3:
    if key not in raw:
        raise ScenarioError(f"{path}{key}: required key missing")
    val = raw[key]
    if not (isinstance(val, list) and len(val) == 3):
        raise ScenarioError(f"{path}{key}: expected a 3-element array, got {val!r}")
    out = []
    for comp in val:
        if isinstance(comp, bool) or not isinstance(comp, (int, float)):
            raise ScenarioError(f"{path}{key}: expected numeric components, got {comp!r}")
        f = float(comp)
        if not math.isfinite(f):
            raise ScenarioError(f"{path}{key}: components must be finite")
        out.append(f)
    return (out[0], out[1], out[2])


def _parse_agent(raw: object, path: str) -> tuple[int, Vec3]:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a table with id and position")
    _require_table(raw, path, allowed={"id", "position"}, required={"id", "position"})
    agent_id = _as_int(raw, f"{path}.", "id")
    if agent_id < 0:
        raise ScenarioError(f"{path}.id: must be >= 0, got {agent_id}")
    return agent_id, _as_vec3(raw, f"{path}.", "position")


def _parse_chain(raw: object) -> tuple[ChainTopology, dict[int, Vec3]]:
    if not isinstance(raw, dict):
        raise ScenarioError("chain: expected a table")
    _require_table(
        raw, "chain",
        allowed={"cruise_alt", "ground", "relays", "lead"},
        required={"ground", "lead"},
    )
    cruise_alt = _as_float(raw, "chain.", "cruise_alt", default=50.0)
    if cruise_alt <= 0.0:
        raise ScenarioError(f"chain.cruise_alt: must be > 0, got {cruise_alt}")
    ground_id, ground_pos = _parse_agent(raw["ground"], "chain.ground")
    lead_id, lead_pos = _parse_agent(raw["lead"], "chain.lead")
    relays_raw = raw.get("relays", [])
    if not isinstance(relays_raw, list):
        raise ScenarioError("chain.relays: expected an array of tables")
    relay_ids: list[int] = []
    positions: dict[int, Vec3] = {ground_id: ground_pos}
    for i, entry in enumerate(relays_raw):
        rid, rpos = _parse_agent(entry, f"chain.relays[{i}]")
        relay_ids.append(rid)
        positions[rid] = rpos
    positions[lead_id] = lead_pos
    all_ids = [ground_id, *relay_ids, lead_id]
    if len(set(all_ids)) != len(all_ids):
        dupes = sorted({i for i in all_ids if all_ids.count(i) > 1})
        raise ScenarioError(f"chain: duplicate agent id {dupes[0]}")
    if sorted(all_ids) != list(range(len(all_ids))):
        raise ScenarioError(
            f"chain: agent ids must be 0..{len(all_ids) - 1} with no gaps, got {sorted(all_ids)}"
        )
    chain = ChainTopology(
        ground_id=ground_id,
        relay_ids=tuple(relay_ids),
        lead_id=lead_id,
        cruise_alt=cruise_alt,
    )
    return chain, positions


def _parse_kinematics(raw: object, dt: float) -> KinematicLimits:
    if not isinstance(raw, dict):
        raise ScenarioError("kinematics: expected a table")
    _require_table(raw, "kinematics", allowed={"v_max", "a_max", "k_v"}, required=set())
    fields = {
        "v_max": _as_float(raw, "kinematics.", "v_max", default=12.0),
        "a_max": _as_float(raw, "kinematics.", "a_max", default=4.0),
        "k_v": _as_float(raw, "kinematics.", "k_v", default=2.0),
    }
    for key, val in fields.items():
        if val <= 0.0:
            raise ScenarioError(f"kinematics.{key}: must be > 0, got {val}")
    return KinematicLimits(dt=dt, **fields)


def _parse_radio(raw: object) -> RadioParams:
    if not isinstance(raw, dict):
        raise ScenarioError("radio: expected a table")
    allowed = {"p_tx", "pl0", "d0", "n_exp", "rssi_min", "noise_sigma"}
    _require_table(raw, "radio", allowed=allowed, required=set())
    p_tx = _as_float(raw, "radio.", "p_tx", default=20.0)
    pl0 = _as_float(raw, "radio.", "pl0", default=40.0)
    d0 = _as_float(raw, "radio.", "d0", default=1.0)
    n_exp = _as_float(raw, "radio.", "n_exp", default=2.2)
    rssi_min = _as_float(raw, "radio.", "rssi_min", default=-85.0)
    noise_sigma = _as_float(raw, "radio.", "noise_sigma", default=0.0)
    if d0 <= 0.0:
        raise ScenarioError(f"radio.d0: must be > 0, got {d0}")
    if n_exp <= 0.0:
        raise ScenarioError(f"radio.n_exp: must be > 0, got {n_exp}")
    if noise_sigma < 0.0:
        raise ScenarioError(f"radio.noise_sigma: must be >= 0, got {noise_sigma}")
    if not p_tx - pl0 > rssi_min:
        raise ScenarioError(
            f"radio.rssi_min: link budget closed, p_tx - pl0 = {p_tx - pl0} must exceed rssi_min = {rssi_min}"
        )
    return RadioParams(p_tx=p_tx, pl0=pl0, d0=d0, n_exp=n_exp, rssi_min=rssi_min, noise_sigma=noise_sigma)


def _parse_controller(raw: object) -> ControllerParams:
    if not isinstance(raw, dict):
        raise ScenarioError("controller: expected a table")
    _require_table(raw, "controller", allowed={"k_p", "alpha", "conv_tol"}, required=set())
    k_p = _as_float(raw, "controller.", "k_p", default=0.8)
    alpha = _as_float(raw, "controller.", "alpha", default=0.8)
    conv_tol = _as_float(raw, "controller.", "conv_tol", default=2.0)
    if k_p <= 0.0:
        raise ScenarioError(f"controller.k_p: must be > 0, got {k_p}")
    if not 0.0 < alpha < 1.0:
        raise ScenarioError(f"controller.alpha: must be in (0, 1), got {alpha}")
    if conv_tol <= 0.0:
        raise ScenarioError(f"controller.conv_tol: must be > 0, got {conv_tol}")
    return ControllerParams(k_p=k_p, alpha=alpha, conv_tol=conv_tol)


def _parse_guard(raw: object) -> tuple[GuardParams, bool]:
    if not isinstance(raw, dict):
        raise ScenarioError("guard: expected a table")
    allowed = {"enabled", "d_alert", "d_critical", "k_r", "v_z_evade"}
    _require_table(raw, "guard", allowed=allowed, required=set())
    enabled = _as_bool(raw, "guard.", "enabled", default=True)
    d_alert = _as_float(raw, "guard.", "d_alert", default=8.0)
    d_critical = _as_float(raw, "guard.", "d_critical", default=2.0)
    k_r = _as_float(raw, "guard.", "k_r", default=0.5)
    v_z_evade = _as_float(raw, "guard.", "v_z_evade", default=1.0)
    if d_critical <= 0.0 or d_critical >= d_alert:
        raise ScenarioError(
            f"guard.d_critical: must satisfy 0 < d_critical < d_alert, got {d_critical} vs d_alert {d_alert}"
        )
    if k_r <= 0.0:
        raise ScenarioError(f"guard.k_r: must be > 0, got {k_r}")
    if v_z_evade <= 0.0:
        raise ScenarioError(f"guard.v_z_evade: must be > 0, got {v_z_evade}")
    return GuardParams(d_alert=d_alert, d_critical=d_critical, k_r=k_r, v_z_evade=v_z_evade), enabled


def _parse_traffic(raw: object, chain: ChainTopology) -> TrafficPattern:
    if not isinstance(raw, dict):
        raise ScenarioError("traffic: expected a table")
    allowed = {"period_ticks", "size_bytes", "src", "dst", "ttl_ticks", "bytes_per_tick"}
    _require_table(raw, "traffic", allowed=allowed, required={"period_ticks", "src", "dst"})
    period = _as_int(raw, "traffic.", "period_ticks")
    size_bytes = _as_int(raw, "traffic.", "size_bytes", default=64)
    src = _as_int(raw, "traffic.", "src")
    dst = _as_int(raw, "traffic.", "dst")
    ttl = _as_int(raw, "traffic.", "ttl_ticks", default=200)
    bytes_per_tick = _as_int(raw, "traffic.", "bytes_per_tick") if "bytes_per_tick" in raw else None
    if period <= 0:
        raise ScenarioError(f"traffic.period_ticks: must be > 0, got {period}")
    if size_bytes <= 0:
        raise ScenarioError(f"traffic.size_bytes: must be > 0, got {size_bytes}")
    if ttl <= 0:
        raise ScenarioError(f"traffic.ttl_ticks: must be > 0, got {ttl}")
    if bytes_per_tick is not None and bytes_per_tick <= 0:
        raise ScenarioError(f"traffic.bytes_per_tick: must be > 0, got {bytes_per_tick}")
    members = set(chain.node_ids())
    if src not in members:
        raise ScenarioError(f"traffic.src: agent {src} is not a chain member")
    if dst not in members:
        raise ScenarioError(f"traffic.dst: agent {dst} is not a chain member")
    if src == dst:
        raise ScenarioError(f"traffic.dst: degenerate route, src == dst == {src}")
    return TrafficPattern(
        period_ticks=period,
        size_bytes=size_bytes,
        src=src,
        dst=dst,
        ttl_ticks=ttl,
        bytes_per_tick=bytes_per_tick,
    )


def _parse_mission(raw: object, v_max: float) -> tuple[MissionLeg, ...]:
    if not isinstance(raw, list):
        raise ScenarioError("lead_mission: expected an array of tables")
    legs: list[MissionLeg] = []
    for i, entry in enumerate(raw):
        path = f"lead_mission[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: expected a table with waypoint and speed")
        _require_table(entry, path, allowed={"waypoint", "speed"}, required={"waypoint", "speed"})
        waypoint = _as_vec3(entry, f"{path}.", "waypoint")
        speed = _as_float(entry, f"{path}.", "speed")
        if speed <= 0.0:
            raise ScenarioError(f"{path}.speed: must be > 0, got {speed}")
        if speed > v_max:
            raise ScenarioError(f"{path}.speed: {speed} exceeds kinematics.v_max = {v_max}")
        legs.append(MissionLeg(waypoint=waypoint, speed=speed))
    return tuple(legs)


def _parse_environment(raw: object) -> BoxEnvironment:
    if not isinstance(raw, dict):
        raise ScenarioError("environment: expected a table")
    _require_table(raw, "environment", allowed={"name", "boxes"}, required=set())
    name = raw.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError(f"environment.name: expected a string, got {name!r}")
    boxes_raw = raw.get("boxes", [])
    if not isinstance(boxes_raw, list):
        raise ScenarioError("environment.boxes: expected an array of tables")
    boxes: list[Box] = []
    for i, entry in enumerate(boxes_raw):
        path = f"environment.boxes[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{path}: expected a table with min and max")
        _require_table(entry, path, allowed={"min", "max"}, required={"min", "max"})
        lo = _as_vec3(entry, f"{path}.", "min")
        hi = _as_vec3(entry, f"{path}.", "max")
        for axis, ax_name in enumerate("xyz"):
            if not lo[axis] < hi[axis]:
                raise ScenarioError(f"{path}.max: {ax_name} must exceed min ({lo[axis]} vs {hi[axis]})")
        boxes.append(Box(min_corner=lo, max_corner=hi))
    return BoxEnvironment(boxes=tuple(boxes), name=name)


def _parse_lidar(raw: object, env: BoxEnvironment) -> MappingConfig:
    if not isinstance(raw, dict):
        raise ScenarioError("lidar: expected a table")
    allowed = {"fov_deg", "angular_step_deg", "r_max", "r_min", "scan_period_ticks", "range_noise_sigma"}
    _require_table(raw, "lidar", allowed=allowed, required=set())
    fov = _as_float(raw, "lidar.", "fov_deg", default=270.0)
    step = _as_float(raw, "lidar.", "angular_step_deg", default=0.5)
    r_max = _as_float(raw, "lidar.", "r_max", default=30.0)
    r_min = _as_float(raw, "lidar.", "r_min", default=0.1)
    period = _as_int(raw, "lidar.", "scan_period_ticks", default=4)
    sigma = _as_float(raw, "lidar.", "range_noise_sigma", default=0.0)
    if not 0.0 < step <= fov:
        raise ScenarioError(f"lidar.angular_step_deg: need 0 < step <= fov, got {step} vs fov {fov}")
    if not 0.0 < r_min < r_max:
        raise ScenarioError(f"lidar.r_min: need 0 < r_min < r_max, got {r_min} vs r_max {r_max}")
    if period <= 0:
        raise ScenarioError(f"lidar.scan_period_ticks: must be > 0, got {period}")
    if sigma < 0.0:
        raise ScenarioError(f"lidar.range_noise_sigma: must be >= 0, got {sigma}")
    return MappingConfig(
        lidar=LidarParams(fov_deg=fov, angular_step_deg=step, r_max=r_max, r_min=r_min),
        environment=env,
        scan_period_ticks=period,
        range_noise_sigma=sigma,
    )


_TOP_KEYS = {
    "name", "seed", "ticks", "dt", "kinematics", "radio", "chain",
    "controller", "guard", "traffic", "lead_mission", "environment", "lidar",
}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario file; raises ScenarioError."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"not valid TOML: {exc}") from exc

    _require_table(raw, "", allowed=_TOP_KEYS, required={"name", "seed", "ticks", "chain"})
    name = _as_str(raw, "", "name")
    seed = _as_int(raw, "", "seed")
    if not 0 <= seed < 2 ** 64:
        raise ScenarioError(f"seed: must fit in 64 bits, got {seed}")
    ticks = _as_int(raw, "", "ticks")
    if ticks <= 0:
        raise ScenarioError(f"ticks: must be > 0, got {ticks}")
    dt = _as_float(raw, "", "dt", default=0.05)
    if dt <= 0.0:
        raise ScenarioError(f"dt: must be > 0, got {dt}")

    kinematics = _parse_kinematics(raw.get("kinematics", {}), dt)
    radio = _parse_radio(raw.get("radio", {}))
    chain, positions = _parse_chain(raw["chain"])
    controller = _parse_controller(raw.get("controller", {}))
    guard, guard_enabled = _parse_guard(raw.get("guard", {}))
    traffic = _parse_traffic(raw["traffic"], chain) if "traffic" in raw else None
    mission = _parse_mission(raw.get("lead_mission", []), kinematics.v_max)

    mapping = None
    if "lidar" in raw or "environment" in raw:
        env = _parse_environment(raw.get("environment", {}))
        mapping = _parse_lidar(raw.get("lidar", {}), env)

    return ScenarioConfig(
        name=name,
        seed=seed,
        ticks=ticks,
        kinematics=kinematics,
        radio=radio,
        chain=chain,
        initial_positions=positions,
        controller=controller,
        guard=guard,
        guard_enabled=guard_enabled,
        traffic=traffic,
        lead_mission=mission,
        mapping=mapping,
    )


def load_scenario(path: str) -> ScenarioConfig:
    """Read and parse a scenario file from disk."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"scenario file is not UTF-8: {exc}") from exc
    return parse_scenario(text)
