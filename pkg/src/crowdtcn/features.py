"""Social and visual feature extraction for pedestrian states.

Each pedestrian's surroundings are summarized by two constructions anchored to
its heading:

* angular-sector neighbors: the interaction disc of radius ``radius`` is split
  into ``360 / sector_deg`` equal sectors; each sector contributes the nearest
  entity (another pedestrian's center or the closest point of a wall) within
  the disc, or a virtual stand-in on the disc boundary when the sector is
  empty;
* forward ray scan: rays are cast across the half-plane ahead of the
  pedestrian, from 90 degrees anticlockwise of the heading sweeping clockwise
  to 90 degrees clockwise, returning the first wall intersection per ray or a
  far virtual point at ``exit_distance`` when nothing is hit.

The per-step feature vector concatenates the pedestrian's own velocity with
the relative velocities and relative positions of the sector neighbors and the
relative ray points, all expressed in world-frame offsets from the pedestrian.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ray, Segment, first_hit, point_segment_distance, ray_segment_intersection

__all__ = [
    "SPEED_EPS",
    "StaticVelocityMode",
    "RadarConfig",
    "RayScanConfig",
    "NeighborKind",
    "SectorNeighbors",
    "RayScan",
    "heading",
    "radar_neighbors",
    "forward_wall_rays",
    "assemble_frame",
    "FeatureExtractor",
]

# Speeds below this are treated as standing still when deriving a heading.
SPEED_EPS = 1e-3

TWO_PI = 2.0 * math.pi


class StaticVelocityMode(enum.Enum):
    """Relative-velocity convention for walls and virtual neighbors.

    MINUS_OWN stores -v (the entity is at absolute rest); ZERO stores a zero
    relative velocity (the entity co-moves with the pedestrian).
    """

    MINUS_OWN = "minus_own_velocity"
    ZERO = "zero"


def _positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)


@dataclass(frozen=True)
class RadarConfig:
    """Sector-neighbor extraction parameters."""

    radius: float = 1.2
    sector_deg: float = 18.0

    def __post_init__(self):
        _positive(self.radius, "radius")
        _positive(self.sector_deg, "sector_deg")
        n = 360.0 / self.sector_deg
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"sector_deg must divide 360, got {self.sector_deg}")

    @property
    def n_sectors(self) -> int:
        return round(360.0 / self.sector_deg)


@dataclass(frozen=True)
class RayScanConfig:
    """Forward ray-scan parameters."""

    step_deg: float = 5.0
    exit_distance: float = 100.0

    def __post_init__(self):
        _positive(self.step_deg, "step_deg")
        _positive(self.exit_distance, "exit_distance")
        n = 180.0 / self.step_deg
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"step_deg must divide 180, got {self.step_deg}")

    @property
    def n_rays(self) -> int:
        return round(180.0 / self.step_deg) + 1


class NeighborKind(enum.IntEnum):
    VIRTUAL = 0
    PEDESTRIAN = 1
    WALL = 2


@dataclass
class SectorNeighbors:
    """Per-sector nearest entities; arrays are indexed by sector (anticlockwise)."""

    rel_positions: np.ndarray  # (n_sectors, 2)
    rel_velocities: np.ndarray  # (n_sectors, 2)
    kinds: np.ndarray  # (n_sectors,) NeighborKind values
    indices: np.ndarray  # (n_sectors,) candidate index, -1 for virtual


@dataclass
class RayScan:
    """Per-ray first wall hits relative to the pedestrian."""

    rel_points: np.ndarray  # (n_rays, 2)
    wall_indices: np.ndarray  # (n_rays,) wall index, -1 when no hit


def heading(velocity_history, default) -> np.ndarray:
    """Most recent moving direction, or the scenario default when never moving.

    velocity_history is scanned from the latest entry backwards; the first
    velocity with speed > SPEED_EPS defines the heading.
    """
    hist = np.asarray(velocity_history, dtype=float).reshape(-1, 2)
    for v in hist[::-1]:
        speed = float(np.hypot(v[0], v[1]))
        if speed > SPEED_EPS:
            return v / speed
    d = np.asarray(default, dtype=float)
    norm = float(np.hypot(d[0], d[1]))
    if norm == 0.0:
        raise ValueError("default heading must be nonzero")
    return d / norm


def _sector_index(angles: np.ndarray, base: float, sector_rad: float, n: int) -> np.ndarray:
    rel = np.mod(angles - base, TWO_PI)
    idx = np.floor(rel / sector_rad).astype(int)
    return np.minimum(idx, n - 1)  # guard the mod-boundary rounding case


def _static_rel_velocity(mode: StaticVelocityMode, own_velocity: np.ndarray) -> np.ndarray:
    if mode is StaticVelocityMode.MINUS_OWN:
        return -own_velocity
    return np.zeros(2)


def _wedge_angle_ok(angle: float, lo: float, hi: float, base: float) -> bool:
    # Closed membership with slack: candidates on either boundary ray are kept
    # so that sector minima agree with the infimum over the open wedge. The
    # mod can fold a boundary angle to either side of the 0 / 2*pi seam, so
    # both shifted values are tested as well.
    rel = (angle - base) % TWO_PI
    return any(lo - 1e-9 <= r <= hi + 1e-9 for r in (rel - TWO_PI, rel, rel + TWO_PI))


def _segment_closest_in_wedge(
    center: np.ndarray,
    seg: Segment,
    base: float,
    lo: float,
    hi: float,
) -> tuple[float, np.ndarray] | None:
    """Closest point of seg to center among points whose angle lies in [lo, hi].

    lo/hi are angles relative to base (radians, anticlockwise). Candidates are
    the unconstrained closest point, both endpoints, and the intersections
    with the two wedge boundary rays.
    """
    candidates = []
    d_free, p_free = point_segment_distance(center, seg)
    candidates.append((d_free, p_free))
    candidates.append((float(np.linalg.norm(seg.a - center)), seg.a))
    candidates.append((float(np.linalg.norm(seg.b - center)), seg.b))
    for bound in (lo, hi):
        ang = base + bound
        hit = ray_segment_intersection(Ray(center, (math.cos(ang), math.sin(ang))), seg)
        if hit is not None:
            candidates.append((float(np.linalg.norm(hit - center)), hit))
    best = None
    for d, p in candidates:
        off = p - center
        if d < 1e-12:
            ang = 0.0  # coincident point: sector of angle 0, same rule as atan2(0, 0)
        else:
            ang = math.atan2(off[1], off[0])
        if not _wedge_angle_ok(ang, lo, hi, base):
            continue
        if best is None or d < best[0]:
            best = (d, p)
    return best


def radar_neighbors(
    position,
    velocity,
    heading_vec,
    others_pos,
    others_vel,
    walls: list[Segment],
    cfg: RadarConfig,
    static_mode: StaticVelocityMode = StaticVelocityMode.MINUS_OWN,
) -> SectorNeighbors:
    """Nearest entity per angular sector of the interaction disc.

    Sector 0 starts at the reverse of the heading and sectors advance
    anticlockwise; membership is half-open [start, start + sector). Empty
    sectors get a virtual neighbor on the disc at the sector bisector.
    """
    p = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    h = np.asarray(heading_vec, dtype=float)
    n = cfg.n_sectors
    sector_rad = math.radians(cfg.sector_deg)
    base = math.atan2(-h[1], -h[0])

    # best per sector: (distance, kind, candidate index, rel position, rel velocity)
    best: list[tuple[float, int, int] | None] = [None] * n
    rel_pos = np.zeros((n, 2))
    rel_vel = np.zeros((n, 2))

    def offer(j: int, d: float, kind: int, idx: int, rp: np.ndarray, rv: np.ndarray):
        cur = best[j]
        if cur is None or (d, kind, idx) < cur:
            best[j] = (d, kind, idx)
            rel_pos[j] = rp
            rel_vel[j] = rv

    others_pos = np.asarray(others_pos, dtype=float).reshape(-1, 2)
    others_vel = np.asarray(others_vel, dtype=float).reshape(-1, 2)
    if len(others_pos):
        rel = others_pos - p
        dists = np.hypot(rel[:, 0], rel[:, 1])
        angles = np.arctan2(rel[:, 1], rel[:, 0])
        sectors = _sector_index(angles, base, sector_rad, n)
        for i in np.flatnonzero(dists <= cfg.radius):
            offer(
                int(sectors[i]),
                float(dists[i]),
                NeighborKind.PEDESTRIAN,
                int(i),
                rel[i],
                others_vel[i] - v,
            )

    static_rv = _static_rel_velocity(static_mode, v)
    for w_idx, seg in enumerate(walls):
        d_free, _ = point_segment_distance(p, seg)
        if d_free > cfg.radius:
            continue
        for j in range(n):
            found = _segment_closest_in_wedge(p, seg, base, j * sector_rad, (j + 1) * sector_rad)
            if found is None:
                continue
            d, point = found
            if d <= cfg.radius:
                offer(j, d, NeighborKind.WALL, w_idx, point - p, static_rv)

    kinds = np.zeros(n, dtype=int)
    indices = np.full(n, -1, dtype=int)
    for j in range(n):
        if best[j] is None:
            ang = base + (j + 0.5) * sector_rad
            rel_pos[j] = cfg.radius * np.array([math.cos(ang), math.sin(ang)])
            rel_vel[j] = static_rv
            kinds[j] = NeighborKind.VIRTUAL
        else:
            _, kind, idx = best[j]
            kinds[j] = kind
            indices[j] = idx
    return SectorNeighbors(rel_pos, rel_vel, kinds, indices)


def forward_wall_rays(
    position,
    heading_vec,
    walls: list[Segment],
    cfg: RayScanConfig,
) -> RayScan:
    """First wall hit per forward ray, relative to the pedestrian.

    Ray 0 points 90 degrees anticlockwise of the heading; successive rays step
    clockwise by step_deg down to 90 degrees clockwise. Rays that miss every
    wall report a virtual point at exit_distance.
    """
    p = np.asarray(position, dtype=float)
    h = np.asarray(heading_vec, dtype=float)
    head_ang = math.atan2(h[1], h[0])
    step = math.radians(cfg.step_deg)
    n = cfg.n_rays
    rel_points = np.zeros((n, 2))
    wall_indices = np.full(n, -1, dtype=int)
    for k in range(n):
        ang = head_ang + 0.5 * math.pi - k * step
        direction = np.array([math.cos(ang), math.sin(ang)])
        hit = first_hit(Ray(p, direction), walls)
        if hit is None:
            rel_points[k] = cfg.exit_distance * direction
        else:
            rel_points[k] = hit[0] - p
            wall_indices[k] = hit[1]
    return RayScan(rel_points, wall_indices)


def assemble_frame(velocity, neighbors: SectorNeighbors, rays: RayScan) -> np.ndarray:
    """Flatten one step's features: [v, neighbor rel velocities, neighbor rel
    positions, ray rel points], each block row-major."""
    v = np.asarray(velocity, dtype=float).reshape(2)
    return np.concatenate(
        [
            v,
            neighbors.rel_velocities.ravel(),
            neighbors.rel_positions.ravel(),
            rays.rel_points.ravel(),
        ]
    )


def feature_dim(radar: RadarConfig, rays: RayScanConfig) -> int:
    return 2 + 4 * radar.n_sectors + 2 * rays.n_rays


@dataclass
class FeatureExtractor:
    """Bundles the extraction configuration for one scenario.

    radar_walls are the physical walls considered as sector neighbors;
    ray_walls additionally include virtual entrance walls so forward rays
    cannot escape through the inflow boundary.
    """

    radar: RadarConfig
    rays: RayScanConfig
    radar_walls: list[Segment] = field(default_factory=list)
    ray_walls: list[Segment] = field(default_factory=list)
    default_heading: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    static_mode: StaticVelocityMode = StaticVelocityMode.MINUS_OWN

    @property
    def feature_dim(self) -> int:
        return feature_dim(self.radar, self.rays)

    def frame(self, position, velocity, heading_vec, others_pos, others_vel) -> np.ndarray:
        neighbors = radar_neighbors(
            position,
            velocity,
            heading_vec,
            others_pos,
            others_vel,
            self.radar_walls,
            self.radar,
            self.static_mode,
        )
        scan = forward_wall_rays(position, heading_vec, self.ray_walls, self.rays)
        return assemble_frame(velocity, neighbors, scan)

    def frame_labels(self) -> list[str]:
        """Column names matching the flattened feature order."""
        labels = ["v_x", "v_y"]
        for j in range(self.radar.n_sectors):
            labels += [f"nbr{j}_rvx", f"nbr{j}_rvy"]
        for j in range(self.radar.n_sectors):
            labels += [f"nbr{j}_rx", f"nbr{j}_ry"]
        for k in range(self.rays.n_rays):
            labels += [f"ray{k}_rx", f"ray{k}_ry"]
        return labels
