"""
Planar geometry used by the low-level checks.

Orientation tests are plain cross products, so integer and half-integer
inputs (grid cells and cell centres) are decided exactly. Floats only enter
through distances and inverse kinematics.
"""

from typing import Iterable, NamedTuple, Sequence, Tuple


class EmptyInput(ValueError):
    pass


class Point(NamedTuple):
    x: float
    y: float


class Polygon(NamedTuple):
    """Counter-clockwise vertices, lexicographically smallest first.

    One vertex is a point, two vertices a segment.
    """
    vertices: Tuple[Point, ...]

    def __len__(self):
        return len(self.vertices)


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def on_segment(p, a, b) -> bool:
    """True iff p lies on the closed segment a-b."""
    if cross(a, b, p) != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def convex_hull(points: Iterable) -> Polygon:
    """Monotone chain hull with collinear points dropped."""
    pts = sorted({Point(p[0], p[1]) for p in points})
    if not pts:
        raise EmptyInput("convex_hull needs at least one point")
    if len(pts) == 1:
        return Polygon((pts[0],))

    lower = []
    for p in pts:
        while len(lower) > 1 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) > 1 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)

    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        return Polygon((hull[0],))
    return Polygon(tuple(hull))


def point_in_hull(p, hull: Polygon) -> bool:
    """Boundary-inclusive containment; degenerate hulls test the segment/point."""
    verts = hull.vertices
    if len(verts) == 1:
        return verts[0][0] == p[0] and verts[0][1] == p[1]
    if len(verts) == 2:
        return on_segment(p, verts[0], verts[1])
    n = len(verts)
    for i in range(n):
        if cross(verts[i], verts[(i + 1) % n], p) < 0:
            return False
    return True


def segments_intersect(a1, a2, b1, b2) -> bool:
    """Closed segments share at least one point (touching counts)."""
    d1 = cross(b1, b2, a1)
    d2 = cross(b1, b2, a2)
    d3 = cross(a1, a2, b1)
    d4 = cross(a1, a2, b2)

    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
            ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True

    if d1 == 0 and on_segment(a1, b1, b2):
        return True
    if d2 == 0 and on_segment(a2, b1, b2):
        return True
    if d3 == 0 and on_segment(b1, a1, a2):
        return True
    if d4 == 0 and on_segment(b2, a1, a2):
        return True
    return False


def segment_intersects_cell(a, b, cell: Sequence[int]) -> bool:
    """Closed segment a-b against the closed unit square of `cell`."""
    cx, cy = cell[0], cell[1]
    x0, y0, x1, y1 = cx, cy, cx + 1, cy + 1

    for p in (a, b):
        if x0 <= p[0] <= x1 and y0 <= p[1] <= y1:
            return True

    # quick reject on bounding boxes
    if max(a[0], b[0]) < x0 or min(a[0], b[0]) > x1:
        return False
    if max(a[1], b[1]) < y0 or min(a[1], b[1]) > y1:
        return False

    corners = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    for i in range(4):
        if segments_intersect(a, b, corners[i], corners[(i + 1) % 4]):
            return True
    return False


def squared_distance(p, q) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return dx * dx + dy * dy
