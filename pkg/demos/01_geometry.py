"""Geometry kernel tour: ray casting, polygon clipping, bounded Voronoi cells.

Casts a fan of rays inside an L-shaped room, clips a measurement box
against the room, and partitions the room between four pedestrians.
"""

import numpy as np

from crowdtcn.geometry import (
    Ray,
    Segment,
    bounded_voronoi,
    first_hit,
    point_in_polygon,
    polygon_area,
    polygon_clip,
)

room = [(0.0, 0.0), (8.0, 0.0), (8.0, 3.0), (3.0, 3.0), (3.0, 6.0), (0.0, 6.0)]
walls = [Segment(room[i], room[(i + 1) % len(room)]) for i in range(len(room))]
print(f"L-shaped room, area {polygon_area(room):.1f} m^2, {len(walls)} walls")

origin = np.array([1.5, 1.5])
print(f"\nray fan from {origin.tolist()}:")
for deg in range(0, 360, 45):
    ang = np.radians(deg)
    hit = first_hit(Ray(origin, (np.cos(ang), np.sin(ang))), walls)
    assert hit is not None, "closed room, every ray must hit"
    point, idx = hit
    dist = np.linalg.norm(point - origin)
    print(f"  {deg:3d} deg -> wall {idx} at ({point[0]:5.2f}, {point[1]:5.2f}), {dist:.2f} m")

box = [(2.0, 1.0), (5.0, 1.0), (5.0, 4.0), (2.0, 4.0)]
inter = polygon_clip(box, room)
print(f"\nmeasurement box area {polygon_area(box):.1f} m^2, "
      f"clipped against the room: {polygon_area(inter):.2f} m^2")

sites = np.array([[1.0, 1.0], [2.5, 2.0], [1.0, 4.5], [6.0, 1.5]])
cells = bounded_voronoi(sites, room)
print("\nVoronoi cells bounded by the room:")
total = 0.0
for cell in cells:
    a = polygon_area(cell.polygon)
    total += a
    inside = point_in_polygon(sites[cell.site_index], cell.polygon)
    print(f"  pedestrian {cell.site_index} owns {a:5.2f} m^2 (site inside: {inside})")
print(f"  cells cover {total:.2f} m^2 of {polygon_area(room):.2f} m^2")
