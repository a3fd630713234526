"""Hyperboloid-model helpers and the regular octagon group of the genus-2 surface.

Points of H^2 are 3-vectors ``(x, y, z)`` with ``z**2 - x**2 - y**2 = 1`` and
``z > 0``.  Isometries are 3x3 matrices preserving the form ``x*x' + y*y' - z*z'``.
The Klein chart ``(x/z, y/z)`` sends geodesics to straight chords, which is
what lets geodesic triangles be handled with affine machinery.
"""

from __future__ import annotations

import math

import numpy as np

from .words import Word

J = np.diag([1.0, 1.0, -1.0])
ORIGIN = np.array([0.0, 0.0, 1.0])
HYPERBOLOID_TOL = 1e-12

# boundary word abABcdCD of the fundamental octagon
GENUS2_RELATOR: Word = (1, 2, -1, -2, 3, 4, -3, -4)


class HyperbolicError(ValueError):
    pass


def mdot(p, q) -> float:
    return float(p[0] * q[0] + p[1] * q[1] - p[2] * q[2])


def normalize(p) -> np.ndarray:
    """Push a near-hyperboloid vector back onto the upper sheet."""
    p = np.asarray(p, dtype=float)
    n = -mdot(p, p)
    if n <= 0 or p[2] <= 0:
        raise HyperbolicError(f"not a timelike upper-sheet vector: {p}")
    return p / math.sqrt(n)


def check_point(p, tol: float = 1e-9) -> None:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or p[2] <= 0 or abs(-mdot(p, p) - 1.0) > tol * max(1.0, p[2] ** 2):
        raise HyperbolicError(f"point off the hyperboloid: {p}")


def distance(p, q) -> float:
    c = p[2] * q[2] - p[0] * q[0] - p[1] * q[1]
    return math.acosh(max(1.0, float(c)))


def to_klein(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p[..., :2] / p[..., 2:3]


def from_klein(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    s = 1.0 - np.sum(k * k, axis=-1, keepdims=True)
    if np.any(s <= 0):
        raise HyperbolicError("Klein point outside the unit disc")
    return np.concatenate([k, np.ones_like(s)], axis=-1) / np.sqrt(s)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def boost_x(t: float) -> np.ndarray:
    c, s = math.cosh(t), math.sinh(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def point_at(radius: float, angle: float) -> np.ndarray:
    return rotation(angle) @ boost_x(radius) @ ORIGIN


def translation_to(p) -> np.ndarray:
    """An isometry taking the origin to ``p`` (boost along the ray to ``p``)."""
    p = normalize(p)
    angle = math.atan2(p[1], p[0])
    return rotation(angle) @ boost_x(math.acosh(p[2])) @ rotation(-angle)


def half_turn(p) -> np.ndarray:
    b = translation_to(p)
    return b @ rotation(math.pi) @ np.linalg.inv(b)


def midpoint(p, q) -> np.ndarray:
    return normalize(np.asarray(p) + np.asarray(q))


def angle_at(p, q, r) -> float:
    """Interior angle at ``p`` of the geodesic triangle ``p q r``."""
    tq = np.asarray(q) + mdot(p, q) * np.asarray(p)
    tr = np.asarray(r) + mdot(p, r) * np.asarray(p)
    c = mdot(tq, tr) / math.sqrt(mdot(tq, tq) * mdot(tr, tr))
    return math.acos(min(1.0, max(-1.0, c)))


def triangle_area(p, q, r) -> float:
    return max(0.0, math.pi - angle_at(p, q, r) - angle_at(q, r, p) - angle_at(r, p, q))


def regular_polygon_circumradius(sides: int, interior_angle: float) -> float:
    """Circumradius of the regular hyperbolic polygon with the given angle."""
    c = 1.0 / (math.tan(math.pi / sides) * math.tan(interior_angle / 2.0))
    if c <= 1.0:
        raise HyperbolicError("angle too large for a hyperbolic polygon")
    return math.acosh(c)


class OctagonGroup:
    """Side pairings of the regular octagon with vertex angle pi/4.

    Side ``j`` joins vertices ``j`` and ``j+1`` and carries letter
    ``GENUS2_RELATOR[j]``.  Each pairing is (half-turn about a side midpoint)
    o (rotation), sending the octagon to a neighbour.  For ``a`` and ``c`` the
    pairing lands across the side labelled with the letter itself, for ``b``
    and ``d`` across the side of the inverse letter; with that choice the
    product ``M(a) M(b) M(a)^-1 M(b)^-1 M(c) M(d) M(c)^-1 M(d)^-1`` is the
    identity.  The tile of the element ``x1 ... xn`` is ``M(x1)...M(xn) . O``.
    """

    sides = 8

    def __init__(self):
        self.circumradius = regular_polygon_circumradius(8, math.pi / 4)
        self.vertices = [point_at(self.circumradius, (j - 0.5) * math.pi / 4) for j in range(8)]
        self.side_midpoints = [midpoint(self.vertices[j], self.vertices[(j + 1) % 8]) for j in range(8)]
        side_of = {x: j for j, x in enumerate(GENUS2_RELATOR)}
        self.matrices: dict[int, np.ndarray] = {}
        for x in (1, 2, 3, 4):
            i, j = side_of[x], side_of[-x]
            m = half_turn(self.side_midpoints[i]) @ rotation((i - j) * math.pi / 4)
            if x in (2, 4):
                m = J @ m.T @ J  # inverse in O(2,1)
            self.matrices[x] = m
            self.matrices[-x] = J @ m.T @ J
        self.step = distance(ORIGIN, self.matrices[1] @ ORIGIN)

    def side_length(self) -> float:
        return distance(self.vertices[0], self.vertices[1])

    def matrix(self, w: Word) -> np.ndarray:
        m = np.eye(3)
        for x in w:
            m = m @ self.matrices[x]
        return m

    def center(self, w: Word) -> np.ndarray:
        return normalize(self.matrix(w) @ ORIGIN)

    def tile(self, w: Word) -> list[np.ndarray]:
        m = self.matrix(w)
        return [normalize(m @ v) for v in self.vertices]


_OCTAGON: OctagonGroup | None = None


def octagon_group() -> OctagonGroup:
    global _OCTAGON
    if _OCTAGON is None:
        _OCTAGON = OctagonGroup()
    return _OCTAGON
