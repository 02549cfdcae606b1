"""Frozen geometry cases.

- area: over random simple polygons, even-odd grid count of pixel centres on a 2000 x 2000 raster over
  the polygon's bounding box
- perimeter: sum of pairwise distances between consecutive vertices via numpy
- hull: a point is a hull vertex iff it lies in no closed triangle and on no
  closed segment spanned by other points; vertices are then ordered
  counter-clockwise by angle about their centroid, starting from the
  lexicographically smallest
"""
import itertools
import json
import math
import random
from pathlib import Path

import numpy as np

RES = 2000


def star(rng):
    k = rng.randint(3, 14)
    cx, cy = rng.uniform(-50, 50), rng.uniform(-50, 50)
    base = rng.uniform(1, 40)
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(k))
    while len(set(angles)) < 3:
        angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(k))
    pts = []
    for a in angles:
        r = base * rng.uniform(0.3, 1.0)
        pts.append([cx + r * math.cos(a), cy + r * math.sin(a)])
    if rng.random() < 0.5:
        pts.reverse()
    return pts


def is_simple(pts):
    n = len(pts)
    edges = [(pts[k], pts[(k + 1) % n]) for k in range(n)]
    for a, b in itertools.combinations(range(n), 2):
        if (b - a) % n in (1, n - 1):
            continue
        (p, q), (r, s) = edges[a], edges[b]
        if orient(p, q, r) * orient(p, q, s) <= 0 and orient(r, s, p) * orient(r, s, q) <= 0:
            return False
    return True


def raster_area(pts):
    p = np.array(pts)
    x0, y0 = p.min(axis=0)
    x1, y1 = p.max(axis=0)
    xs = x0 + (np.arange(RES) + 0.5) * (x1 - x0) / RES
    ys = y0 + (np.arange(RES) + 0.5) * (y1 - y0) / RES
    X, Y = np.meshgrid(xs, ys)
    inside = np.zeros(X.shape, dtype=bool)
    n = len(p)
    for i in range(n):
        (xa, ya), (xb, yb) = p[i], p[(i + 1) % n]
        if ya == yb:
            continue
        crosses = (ya > Y) != (yb > Y)
        xint = xa + (Y - ya) * (xb - xa) / (yb - ya)
        inside ^= crosses & (X < xint)
    return float(inside.sum()) * (x1 - x0) * (y1 - y0) / RES**2


def pair_perimeter(pts):
    p = np.array(pts)
    d = np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1)
    return float(d.sum())


def orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def on_segment(p, a, b):
    return orient(a, b, p) == 0 and min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def in_triangle(p, a, b, c):
    d1, d2, d3 = orient(a, b, p), orient(b, c, p), orient(c, a, p)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def brute_hull(points):
    uniq = sorted(set(map(tuple, points)))
    if len(uniq) <= 2:
        return [list(p) for p in uniq]
    verts = []
    for p in uniq:
        others = [q for q in uniq if q != p]
        covered = any(on_segment(p, a, b) for a, b in itertools.combinations(others, 2)) or any(
            in_triangle(p, a, b, c) for a, b, c in itertools.combinations(others, 3) if orient(a, b, c) != 0
        )
        if not covered:
            verts.append(p)
    if len(verts) == 2 or all(orient(verts[0], verts[1], v) == 0 for v in verts[2:]):
        return [list(verts[0]), list(verts[-1])]
    cx = sum(v[0] for v in verts) / len(verts)
    cy = sum(v[1] for v in verts) / len(verts)
    start = min(verts)
    a0 = math.atan2(start[1] - cy, start[0] - cx)
    verts.sort(key=lambda v: (math.atan2(v[1] - cy, v[0] - cx) - a0) % (2 * math.pi))
    return [list(v) for v in verts]


def point_set(rng):
    n = rng.randint(1, 12)
    if rng.random() < 0.5:
        return [[rng.randint(0, 6), rng.randint(0, 6)] for _ in range(n)]
    if rng.random() < 0.2:
        a, b = rng.randint(-3, 3), rng.randint(-5, 5)
        return [[x, a * x + b] for x in (rng.randint(-5, 5) for _ in range(n))]
    return [[round(rng.uniform(-10, 10), 3), round(rng.uniform(-10, 10), 3)] for _ in range(n)]


def main():
    rng = random.Random(42)
    polygons = []
    for _ in range(100):
        pts = star(rng)
        while not is_simple(pts):
            pts = star(rng)
        polygons.append({"contour": pts, "raster_area": raster_area(pts), "perimeter": pair_perimeter(pts)})
    hulls = []
    for _ in range(200):
        pts = point_set(rng)
        hulls.append({"points": pts, "hull": brute_hull(pts)})
    out = Path(__file__).with_name("geometry_cases.json")
    out.write_text(json.dumps({"resolution": RES, "polygons": polygons, "hulls": hulls}) + "\n")
    print(f"wrote {len(polygons)} polygons and {len(hulls)} hulls to {out.name}")


if __name__ == "__main__":
    main()
