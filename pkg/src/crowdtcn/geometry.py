"""2D geometry kernel: segments, rays, polygon clipping, bounded Voronoi cells.

All functions are pure and operate on plain numpy arrays (shape (2,) points,
metres). Coordinates are double precision; predicates use an absolute
tolerance EPS_GEO, far below the centimetre resolution of trajectory data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_GEO = 1e-9

__all__ = [
    "EPS_GEO",
    "Segment",
    "Ray",
    "VoronoiCell",
    "DegenerateSites",
    "SelfIntersecting",
    "point_segment_distance",
    "ray_segment_intersection",
    "first_hit",
    "polygon_area",
    "ensure_simple_polygon",
    "polygon_clip",
    "point_in_polygon",
    "bounded_voronoi",
]


class DegenerateSites(ValueError):
    """Two Voronoi sites coincide within tolerance."""


class SelfIntersecting(ValueError):
    """Polygon has a proper self-intersection."""


def _as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape != (2,):
        raise ValueError(f"expected a 2D point, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Segment:
    """Line segment from ``a`` to ``b``; must have positive length."""

    a: np.ndarray
    b: np.ndarray

    def __init__(self, a, b):
        object.__setattr__(self, "a", _as_point(a))
        object.__setattr__(self, "b", _as_point(b))
        if float(np.hypot(*(self.a - self.b))) <= 0.0:
            raise ValueError("segment endpoints coincide")

    @property
    def direction(self) -> np.ndarray:
        d = self.b - self.a
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class Ray:
    """Half-line from ``origin`` along unit vector ``direction``."""

    origin: np.ndarray
    direction: np.ndarray

    def __init__(self, origin, direction):
        object.__setattr__(self, "origin", _as_point(origin))
        d = _as_point(direction)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-9:
            if n == 0.0:
                raise ValueError("ray direction is zero")
            d = d / n
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class VoronoiCell:
    """Convex cell of one site, clipped to the bounding area."""

    site: np.ndarray
    polygon: np.ndarray  # (n, 2) ordered vertices
    area: float
    site_index: int


def _cross(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def point_segment_distance(p, s: Segment) -> tuple[float, np.ndarray]:
    """Distance from point ``p`` to segment ``s`` and the closest point on it."""
    p = _as_point(p)
    d = s.b - s.a
    t = float(np.dot(p - s.a, d) / np.dot(d, d))
    t = min(1.0, max(0.0, t))
    closest = s.a + t * d
    return float(np.linalg.norm(p - closest)), closest


def ray_segment_intersection(r: Ray, s: Segment) -> np.ndarray | None:
    """Intersection point of ray and segment, or None.

    Endpoints are inclusive. When the ray is collinear with the segment the
    overlap point nearest the ray origin is returned.
    """
    d = r.direction
    e = s.b - s.a
    denom = _cross(d, e)
    rel = s.a - r.origin
    if abs(denom) <= EPS_GEO * float(np.linalg.norm(e)):
        # Parallel. Collinear iff the segment start lies on the ray's line.
        if abs(_cross(d, rel)) > EPS_GEO * max(1.0, float(np.linalg.norm(rel))):
            return None
        ta = float(np.dot(rel, d))
        tb = float(np.dot(s.b - r.origin, d))
        lo, hi = min(ta, tb), max(ta, tb)
        if hi < -EPS_GEO:
            return None
        t = max(lo, 0.0)
        return r.origin + t * d
    t = _cross(rel, e) / denom
    u = _cross(rel, d) / denom
    if t < -EPS_GEO or u < -EPS_GEO or u > 1.0 + EPS_GEO:
        return None
    t = max(t, 0.0)
    return r.origin + t * d


def first_hit(r: Ray, walls: list[Segment]) -> tuple[np.ndarray, int] | None:
    """Nearest ray-wall intersection over ``walls`` (with its wall index).

    Ties break toward the lowest wall index.
    """
    best = None
    best_t = np.inf
    for idx, w in enumerate(walls):
        pt = ray_segment_intersection(r, w)
        if pt is None:
            continue
        t = float(np.dot(pt - r.origin, r.direction))
        if t < best_t - EPS_GEO:
            best = (pt, idx)
            best_t = t
    return best


def polygon_area(polygon) -> float:
    """Unsigned shoelace area of a polygon given as (n, 2) vertices."""
    pts = np.asarray(polygon, dtype=float)
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_properly_intersect(a, b, c, d) -> bool:
    # Proper crossing: interiors intersect at a single point.
    d1 = _cross(d - c, a - c)
    d2 = _cross(d - c, b - c)
    d3 = _cross(b - a, c - a)
    d4 = _cross(b - a, d - a)
    return ((d1 > EPS_GEO and d2 < -EPS_GEO) or (d1 < -EPS_GEO and d2 > EPS_GEO)) and (
        (d3 > EPS_GEO and d4 < -EPS_GEO) or (d3 < -EPS_GEO and d4 > EPS_GEO)
    )


def _check_simple(pts: np.ndarray) -> None:
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = pts[j], pts[(j + 1) % n]
            if _segments_properly_intersect(a, b, c, d):
                raise SelfIntersecting(f"edges {i} and {j} cross")


def ensure_simple_polygon(polygon) -> np.ndarray:
    """Validate a polygon (>= 3 vertices, no self-crossing) and return it as an array."""
    pts = np.asarray(polygon, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("polygon must be an (n >= 3, 2) vertex array")
    _check_simple(pts)
    if polygon_area(pts) <= EPS_GEO:
        raise ValueError("polygon has zero area")
    return pts


def _clip_halfplane(pts: np.ndarray, point: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Keep the part of the polygon with (x - point) . normal <= 0."""
    if len(pts) == 0:
        return pts
    dist = (pts - point) @ normal
    out = []
    n = len(pts)
    for i in range(n):
        j = (i + 1) % n
        di, dj = dist[i], dist[j]
        inside_i = di <= EPS_GEO
        inside_j = dj <= EPS_GEO
        if inside_i:
            out.append(pts[i])
            if not inside_j and di < -EPS_GEO:
                t = di / (di - dj)
                out.append(pts[i] + t * (pts[j] - pts[i]))
        elif inside_j:
            if dj < -EPS_GEO:
                t = di / (di - dj)
                out.append(pts[i] + t * (pts[j] - pts[i]))
    if not out:
        return np.zeros((0, 2))
    return np.asarray(out)


def polygon_clip(subject, clip) -> np.ndarray:
    """Clip a simple polygon by a convex polygon (Sutherland-Hodgman).

    Returns the intersection as an (m, 2) vertex array; empty array when the
    polygons do not overlap. Raises SelfIntersecting for an invalid subject.
    """
    subj = np.asarray(subject, dtype=float)
    clp = np.asarray(clip, dtype=float)
    if len(subj) < 3 or len(clp) < 3:
        return np.zeros((0, 2))
    _check_simple(subj)
    if _signed_area(clp) < 0:
        clp = clp[::-1]
    pts = subj
    n = len(clp)
    for i in range(n):
        a, b = clp[i], clp[(i + 1) % n]
        edge = b - a
        normal = np.array([edge[1], -edge[0]])  # outward for CCW clip
        pts = _clip_halfplane(pts, a, normal)
        if len(pts) == 0:
            break
    return pts


def point_in_polygon(p, polygon, include_boundary: bool = True) -> bool:
    """Even-odd membership test; points on an edge count per ``include_boundary``."""
    p = _as_point(p)
    pts = np.asarray(polygon, dtype=float)
    n = len(pts)
    inside = False
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        seg = b - a
        seg_sq = float(np.dot(seg, seg))
        if seg_sq == 0.0:
            continue
        # boundary check
        t = np.dot(p - a, seg) / seg_sq
        if 0.0 <= t <= 1.0:
            closest = a + t * seg
            if np.linalg.norm(p - closest) <= EPS_GEO:
                return include_boundary
        if (a[1] > p[1]) != (b[1] > p[1]):
            x_cross = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
            if p[0] < x_cross:
                inside = not inside
    return inside


def bounded_voronoi(sites, area) -> list[VoronoiCell]:
    """Voronoi cells of ``sites`` clipped to the ``area`` polygon.

    Each cell is obtained by half-plane clipping of the area polygon against
    the perpendicular bisectors with every other site (O(n^2), exact enough
    at crowd scale). Sites may lie outside the area; cells that end up empty
    are dropped, so the returned cells partition the area.

    Raises DegenerateSites when two sites are closer than 1e-6 m.
    """
    pts = np.asarray(sites, dtype=float).reshape(-1, 2)
    poly = np.asarray(area, dtype=float)
    n = len(pts)
    if n == 0:
        raise ValueError("at least one site required")
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) < 1e-6:
                raise DegenerateSites(f"sites {i} and {j} coincide")
    cells = []
    for i in range(n):
        cell = poly.copy()
        for j in range(n):
            if j == i or len(cell) == 0:
                continue
            mid = 0.5 * (pts[i] + pts[j])
            normal = pts[j] - pts[i]  # keep the side nearer to site i
            cell = _clip_halfplane(cell, mid, normal)
        a = polygon_area(cell) if len(cell) >= 3 else 0.0
        if a > 0.0:
            cells.append(VoronoiCell(site=pts[i], polygon=cell, area=a, site_index=i))
    return cells
