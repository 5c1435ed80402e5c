"""2D-lidar simulation over an axis-aligned-box world and point-cloud assembly.

Mount convention (fixed): the scanner sweeps the vertical plane perpendicular
to the body x (flight) axis. Beam angle 0 points along body +y (horizontal,
to the vehicle's left for yaw 0 = +x flight); positive angles rotate toward
+z. Roll and pitch are zero, so body z is world z.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .kernel import Vec3

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Box:
    min_corner: Vec3
    max_corner: Vec3

    def __post_init__(self) -> None:
        for axis in range(3):
            if not self.min_corner[axis] < self.max_corner[axis]:
                raise ValueError(
                    f"box min must be < max per axis, got {self.min_corner} / {self.max_corner}"
                )


@dataclass(frozen=True)
class BoxEnvironment:
    boxes: tuple[Box, ...] = ()
    name: str = ""


@dataclass(frozen=True)
class LidarParams:
    fov_deg: float = 270.0
    angular_step_deg: float = 0.5
    r_max: float = 30.0
    r_min: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.angular_step_deg <= self.fov_deg:
            raise ValueError(
                f"need 0 < angular_step <= fov, got step {self.angular_step_deg}, fov {self.fov_deg}"
            )
        if not 0.0 < self.r_min < self.r_max:
            raise ValueError(f"need 0 < r_min < r_max, got r_min {self.r_min}, r_max {self.r_max}")


@dataclass(frozen=True)
class Pose:
    position: Vec3
    yaw: float  # radians about world z; roll/pitch fixed at 0

    def __post_init__(self) -> None:
        # normalize yaw to (-pi, pi]
        y = self.yaw % _TWO_PI
        if y > math.pi:
            y -= _TWO_PI
        object.__setattr__(self, "yaw", y)


@dataclass(frozen=True)
class ScanFrame:
    pose: Pose
    tick: int
    returns: tuple[tuple[float, float], ...]  # (angle_rad, range_m), hits only


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (N, 3) float64, world frame

    def __len__(self) -> int:
        return int(self.points.shape[0])


def ray_cast(origin: Vec3, direction: Vec3, env: BoxEnvironment, r_max: float) -> float | None:
    """Distance to the nearest box surface along the ray, or None for a miss.

    direction must be unit length (1e-9 tolerance). Only strictly positive
    entry distances count: a ray starting inside (or exactly on) a box sees
    that box's entry at t <= 0 and misses it.
    """
    norm = math.sqrt(direction[0] ** 2 + direction[1] ** 2 + direction[2] ** 2)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"ray direction must be unit length, got norm {norm}")
    best: float | None = None
    for box in env.boxes:
        t_near = -math.inf
        t_far = math.inf
        inside_slabs = True
        for axis in range(3):
            o = origin[axis]
            d = direction[axis]
            lo = box.min_corner[axis]
            hi = box.max_corner[axis]
            if d == 0.0:
                if not lo <= o <= hi:
                    inside_slabs = False
                    break
                continue
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            t_near = max(t_near, t1)
            t_far = min(t_far, t2)
        if not inside_slabs or t_near > t_far:
            continue
        if t_near <= 0.0:
            continue
        if t_near <= r_max and (best is None or t_near < best):
            best = t_near
    return best


def scan_angles_deg(lp: LidarParams) -> list[float]:
    """Beam angles in degrees, -fov/2 .. +fov/2 inclusive in angular_step steps.

    Count = floor(fov/step) + 1. The small epsilon absorbs float division
    artifacts when fov is an exact multiple of the step.
    """
    n = int(math.floor(lp.fov_deg / lp.angular_step_deg + 1e-9)) + 1
    return [-lp.fov_deg / 2.0 + k * lp.angular_step_deg for k in range(n)]


def beam_direction(yaw: float, angle_rad: float) -> Vec3:
    """World-frame unit direction of a beam at the given scan angle."""
    c = math.cos(angle_rad)
    s = math.sin(angle_rad)
    return (-math.sin(yaw) * c, math.cos(yaw) * c, s)


def simulate_scan(
    pose: Pose,
    env: BoxEnvironment,
    lp: LidarParams,
    rng: random.Random | None = None,
    range_noise_sigma: float = 0.0,
) -> ScanFrame:
    """Cast every beam of one revolution and keep hits within [r_min, r_max].

    With range_noise_sigma > 0 a Gaussian draw is added per hit, in beam
    order, from the supplied RNG (the world's generator); a noisy range that
    leaves [r_min, r_max] is discarded like any other out-of-band return.
    """
    if range_noise_sigma < 0.0:
        raise ValueError(f"range_noise_sigma must be >= 0, got {range_noise_sigma}")
    if range_noise_sigma > 0.0 and rng is None:
        raise ValueError("range noise requested but no RNG supplied")
    returns: list[tuple[float, float]] = []
    for angle_deg in scan_angles_deg(lp):
        angle = math.radians(angle_deg)
        r = ray_cast(pose.position, beam_direction(pose.yaw, angle), env, lp.r_max)
        if r is None:
            continue
        if range_noise_sigma > 0.0:
            r += rng.gauss(0.0, range_noise_sigma)
        if lp.r_min <= r <= lp.r_max:
            returns.append((angle, r))
    return ScanFrame(pose=pose, tick=0, returns=tuple(returns))


def assemble_cloud(frames: list[ScanFrame], lp: LidarParams) -> PointCloud:
    """Map every return to the world frame and concatenate in frame order.

    Body-frame point for (angle a, range r) is (0, r*cos a, r*sin a); world
    point = R_z(yaw) @ body + position.
    """
    chunks: list[np.ndarray] = []
    for frame in frames:
        if not frame.returns:
            continue
        ang = np.array([a for a, _ in frame.returns], dtype=np.float64)
        rng_m = np.array([r for _, r in frame.returns], dtype=np.float64)
        horiz = rng_m * np.cos(ang)
        z = rng_m * np.sin(ang)
        yaw = frame.pose.yaw
        px, py, pz = frame.pose.position
        pts = np.column_stack((
            px - math.sin(yaw) * horiz,
            py + math.cos(yaw) * horiz,
            pz + z,
        ))
        chunks.append(pts)
    if not chunks:
        return PointCloud(points=np.empty((0, 3), dtype=np.float64))
    return PointCloud(points=np.vstack(chunks))


def plane_fit_rms(cloud: PointCloud) -> tuple[Vec3, float, float]:
    """Total-least-squares plane through the cloud: (normal, offset, rms).

    normal is the smallest principal direction of the centered covariance,
    sign-fixed so its largest-magnitude component is positive; offset is
    normal . centroid; rms is the root mean square point-plane distance.
    Degenerate input (fewer than 3 points, or collinear/coincident) raises.
    """
    pts = cloud.points
    if pts.shape[0] < 3:
        raise ValueError(f"plane fit needs >= 3 points, got {pts.shape[0]}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    # singular values sorted descending; s[1] ~ 0 means collinear or coincident
    _, s, vh = np.linalg.svd(centered, full_matrices=False)
    if s[1] <= max(s[0], 1.0) * 1e-12:
        raise ValueError("degenerate input: points are collinear or coincident")
    normal = vh[2]
    k = int(np.argmax(np.abs(normal)))
    if normal[k] < 0.0:
        normal = -normal
    offset = float(normal @ centroid)
    rms = float(np.sqrt(np.mean((centered @ normal) ** 2)))
    return (float(normal[0]), float(normal[1]), float(normal[2])), offset, rms


def write_xyz(cloud: PointCloud, path: str) -> None:
    """Plain-text export, one 'x y z' line per point, 6 decimals, meters."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")
