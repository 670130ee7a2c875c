"""Planar geometry: points, Euclidean distance, convex hull, degree/mile conversion.

Coordinates are longitude/latitude degrees treated as a flat plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

# Average of 69 mi per degree latitude and 54.6 mi per degree longitude.
MILES_PER_DEGREE = 61.8


class EmptyPointSet(ValueError):
    pass


class NegativeLength(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Point:
    x: float  # longitude
    y: float  # latitude

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate: ({self.x}, {self.y})")

    @property
    def lon(self) -> float:
        return self.x

    @property
    def lat(self) -> float:
        return self.y

    @classmethod
    def from_latlon(cls, lat: float, lon: float) -> "Point":
        return cls(float(lon), float(lat))


@dataclass(frozen=True)
class Hull:
    """Convex polygon, counterclockwise, starting at the lexicographically least corner."""

    corners: tuple[Point, ...]

    def __len__(self) -> int:
        return len(self.corners)

    def __iter__(self):
        return iter(self.corners)


def euclid_dist(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def cross(o: Point, a: Point, b: Point) -> float:
    """z-component of (a - o) x (b - o); positive for a left turn."""
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def convex_hull(points: Iterable[Point]) -> Hull:
    """Andrew's monotone chain. Collinear boundary points are dropped."""
    pts = sorted(set(points))
    if not pts:
        raise EmptyPointSet("convex hull of an empty point set")
    if len(pts) <= 2:
        return Hull(tuple(pts))

    def half(seq: Sequence[Point]) -> list[Point]:
        chain: list[Point] = []
        for p in seq:
            while len(chain) >= 2 and cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    corners = lower[:-1] + upper[:-1]
    # all collinear: lower and upper both collapse to the two extremes
    if len(corners) == 2 and corners[0] == corners[1]:
        corners = corners[:1]
    return Hull(tuple(corners))


def degrees_to_miles(d: float) -> float:
    if d < 0:
        raise NegativeLength(f"negative length: {d}")
    return d * MILES_PER_DEGREE


def path_length(points: Sequence[Point]) -> float:
    return sum(euclid_dist(a, b) for a, b in zip(points, points[1:]))
