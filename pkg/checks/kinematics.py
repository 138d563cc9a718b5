# Low-level feasibility checks (balance, leg reach, payload collision, arm collision)
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from geometry.planar import (
    Point,
    convex_hull,
    point_in_hull,
    segment_intersects_cell,
    segments_intersect,
)

DEFAULT_REACH = 2.5
DEFAULT_LINK_LEN = 6.0
DEFAULT_SWEEP_SAMPLES = 8


def l_bal(leg_positions: Iterable, cm) -> bool:
    """Static balance: CM inside (or on) the support polygon of grounded legs."""
    return point_in_hull(cm, convex_hull(leg_positions))


def l_leg(leg, cm, reach: float = DEFAULT_REACH) -> bool:
    """The leg touches down within `reach` of the CM."""
    dx = leg[0] - cm[0]
    dy = leg[1] - cm[1]
    return dx * dx + dy * dy <= reach * reach


def sweep_poses(payload_from, payload_to, samples: int = DEFAULT_SWEEP_SAMPLES):
    """Endpoint poses from `payload_from` to `payload_to`, both included, with
    `samples` evenly spaced intermediate poses."""
    start = np.asarray(payload_from, dtype=float).reshape(2, 2)
    end = np.asarray(payload_to, dtype=float).reshape(2, 2)
    if np.array_equal(start, end):
        return [(Point(*start[0]), Point(*start[1]))]
    poses = []
    for t in np.linspace(0.0, 1.0, samples + 2):
        pose = start + t * (end - start)
        poses.append((Point(float(pose[0, 0]), float(pose[0, 1])),
                      Point(float(pose[1, 0]), float(pose[1, 1]))))
    return poses


def l_pay(payload_from, payload_to, obstacles: Iterable[Sequence[int]],
          samples: int = DEFAULT_SWEEP_SAMPLES) -> bool:
    """No sampled payload pose between the two endpoint pairs touches an obstacle cell."""
    obstacles = list(obstacles)
    if not obstacles:
        return True
    for a, b in sweep_poses(payload_from, payload_to, samples):
        for cell in obstacles:
            if segment_intersects_cell(a, b, cell):
                return False
    return True


def elbow_position(base, grip, link_len: float = DEFAULT_LINK_LEN) -> Optional[Point]:
    """Elbow-up solution of a two-link planar arm with equal links: of the two
    elbow positions the one with the larger y, ties going counter-clockwise.

    Returns None when the grip point is out of reach.
    """
    dx = grip[0] - base[0]
    dy = grip[1] - base[1]
    dist = math.hypot(dx, dy)
    if dist > 2.0 * link_len:
        return None
    # law of cosines with equal links: the elbow sits off the base-grip line by acos(d / 2L)
    alpha = math.atan2(dy, dx)
    beta = math.acos(min(1.0, dist / (2.0 * link_len)))
    ccw = Point(base[0] + link_len * math.cos(alpha + beta),
                base[1] + link_len * math.sin(alpha + beta))
    cw = Point(base[0] + link_len * math.cos(alpha - beta),
               base[1] + link_len * math.sin(alpha - beta))
    return cw if cw.y > ccw.y else ccw


def arm_links(base, grip, link_len: float = DEFAULT_LINK_LEN) -> Optional[Tuple[tuple, tuple]]:
    elbow = elbow_position(base, grip, link_len)
    if elbow is None:
        return None
    return (Point(base[0], base[1]), elbow), (elbow, Point(grip[0], grip[1]))


def links_collide(links1, links2) -> bool:
    for s1 in links1:
        for s2 in links2:
            if segments_intersect(s1[0], s1[1], s2[0], s2[1]):
                return True
    return False


def l_rob(grip1, grip2, base1, base2, link_len: float = DEFAULT_LINK_LEN) -> bool:
    """Both arms reach their grips and no link of one arm touches a link of the other."""
    links1 = arm_links(base1, grip1, link_len)
    if links1 is None:
        return False
    links2 = arm_links(base2, grip2, link_len)
    if links2 is None:
        return False
    return not links_collide(links1, links2)
