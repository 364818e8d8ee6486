"""Penalty contact primitives shared by the task environments."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ContactParams:
    k_c: float = 1.0e4  # N/m
    c_c: float = 100.0  # Ns/m
    mu: float = 0.4
    slip_velocity: float = 1.0e-3  # m/s, viscous regularization width


def penalty_contact(
    penetration: float,
    approach_speed: float,
    tangent_speed: float,
    params: ContactParams,
) -> tuple[float, float]:
    """Normal and tangential force magnitudes of a penalty contact.

    Normal: k_c * penetration + c_c * approach_speed, clamped at zero.
    Tangential: Coulomb friction capped at mu * normal, viscously
    regularized near zero slip so resting contacts stay quiet.
    """
    if penetration < 0.0:
        raise ValueError("penetration must be >= 0")
    normal = params.k_c * penetration + params.c_c * approach_speed
    if normal < 0.0:
        normal = 0.0
    cap = params.mu * normal
    if tangent_speed >= params.slip_velocity:
        tangential = cap
    else:
        tangential = cap * (tangent_speed / params.slip_velocity)
    return normal, tangential


def closest_point_on_polygon(px: float, py: float, vertices) -> tuple[float, float, bool]:
    """Closest boundary point of a convex polygon to (px, py) and whether the
    point lies inside. Vertices must be in counter-clockwise order."""
    inside = True
    best_d2 = math.inf
    bx = by = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        # cross < 0 means the point is on the outer side of this CCW edge
        if ex * (py - y0) - ey * (px - x0) < 0.0:
            inside = False
        t = ((px - x0) * ex + (py - y0) * ey) / (ex * ex + ey * ey)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx, cy = x0 + t * ex, y0 + t * ey
        d2 = (px - cx) ** 2 + (py - cy) ** 2
        if d2 < best_d2:
            best_d2 = d2
            bx, by = cx, cy
    return bx, by, inside


def barycentric_weights(point, v0, v1, v2) -> tuple[float, float, float]:
    """Barycentric coordinates of a point in a triangle."""
    x, y = point
    x0, y0 = v0
    x1, y1 = v1
    x2, y2 = v2
    det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2)
    if abs(det) < 1e-12:
        raise ValueError("degenerate support triangle")
    l0 = ((y1 - y2) * (x - x2) + (x2 - x1) * (y - y2)) / det
    l1 = ((y2 - y0) * (x - x2) + (x0 - x2) * (y - y2)) / det
    return l0, l1, 1.0 - l0 - l1
