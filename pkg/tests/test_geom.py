import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fjvrp.geom import (
    MILES_PER_DEGREE,
    EmptyPointSet,
    NegativeLength,
    Point,
    convex_hull,
    cross,
    degrees_to_miles,
    euclid_dist,
    path_length,
)

from oracles import hull_corners_brute

coord = st.floats(-180, 180, allow_nan=False, allow_infinity=False)
points = st.builds(Point, coord, coord)


def test_345():
    assert euclid_dist(Point(0, 0), Point(3, 4)) == 5.0


def test_identity():
    assert euclid_dist(Point(1.7, -2.3), Point(1.7, -2.3)) == 0.0


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        Point(math.nan, 0.0)
    with pytest.raises(ValueError):
        Point(0.0, math.inf)


def test_latlon_order():
    p = Point.from_latlon(27.7, 85.3)
    assert (p.x, p.y) == (85.3, 27.7) and (p.lat, p.lon) == (27.7, 85.3)


def test_triangle_inequality_random():
    rng = np.random.default_rng(0)
    for a, b, c in rng.normal(size=(1000, 3, 2)) * 10:
        a, b, c = Point(*a), Point(*b), Point(*c)
        assert euclid_dist(a, b) <= euclid_dist(a, c) + euclid_dist(c, b) + 1e-12


@given(points, points)
def test_metric_symmetry_and_identity(a, b):
    assert euclid_dist(a, b) == euclid_dist(b, a)
    assert euclid_dist(a, b) >= 0
    assert (euclid_dist(a, b) == 0) == (a == b) or euclid_dist(a, b) < 1e-300


def test_hull_triangle():
    pts = [Point(0, 0), Point(2, 0), Point(1, 2)]
    assert set(convex_hull(pts).corners) == set(pts)


def test_hull_square_with_center():
    sq = [Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)]
    h = convex_hull(sq + [Point(0.5, 0.5)])
    assert h.corners == (Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1))


def test_hull_drops_edge_points():
    pts = [Point(0, 0), Point(1, 0), Point(2, 0), Point(1, 1)]
    assert Point(1, 0) not in convex_hull(pts).corners


def test_hull_degenerate():
    assert convex_hull([Point(1, 1)]).corners == (Point(1, 1),)
    assert convex_hull([Point(1, 1), Point(1, 1)]).corners == (Point(1, 1),)
    assert convex_hull([Point(2, 2), Point(0, 0), Point(1, 1)]).corners == (Point(0, 0), Point(2, 2))


def test_hull_empty():
    with pytest.raises(EmptyPointSet):
        convex_hull([])


def test_hull_ccw_and_convex():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = [Point(*p) for p in rng.random((30, 2))]
        c = convex_hull(pts).corners
        assert c[0] == min(pts)
        for i in range(len(c)):
            assert cross(c[i], c[(i + 1) % len(c)], c[(i + 2) % len(c)]) > 0


def test_hull_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(20):
        raw = rng.random((25, 2))
        got = {(p.x, p.y) for p in convex_hull([Point(*r) for r in raw]).corners}
        assert got == hull_corners_brute(raw)


def test_hull_matches_brute_force_on_lattice():
    # integer lattice forces collinear and duplicate points
    rng = np.random.default_rng(3)
    for _ in range(20):
        raw = rng.integers(0, 4, (12, 2)).astype(float)
        got = {(p.x, p.y) for p in convex_hull([Point(*r) for r in raw]).corners}
        assert got == hull_corners_brute(raw)


@given(st.lists(points, min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_hull_permutation_invariant(pts, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert convex_hull(pts) == convex_hull(shuffled)


def test_miles_examples():
    assert MILES_PER_DEGREE == (69 + 54.6) / 2
    assert degrees_to_miles(1.0) == 61.8
    assert degrees_to_miles(0.0) == 0.0
    assert degrees_to_miles(2.0) == 123.6


def test_miles_negative():
    with pytest.raises(NegativeLength):
        degrees_to_miles(-0.1)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_miles_linear(a, b):
    lhs = degrees_to_miles(a + b)
    rhs = degrees_to_miles(a) + degrees_to_miles(b)
    assert abs(lhs - rhs) <= 2 * math.ulp(max(lhs, rhs))


def test_path_length():
    assert path_length([Point(0, 0), Point(3, 4), Point(0, 0)]) == 10.0
    assert path_length([Point(0, 0)]) == 0.0
