import math

import pytest
from hypothesis import given, settings, strategies as st

from ckm.errors import GeometryError, ValidationError
from ckm.geometry import (Point2, Pose, Segment2, cross, link_angle, mirror_point,
                          perp_distance, project_ratio, rotate, segment_intersection,
                          segments_intersect, signed_offset, wrap_angle)

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
points = st.builds(Point2, coord, coord)
angles = st.floats(-720, 720, allow_nan=False)


def apart(a: Point2, b: Point2, gap=1e-3) -> bool:
    return (a - b).norm() > gap


# -- worked examples ----------------------------------------------------------

@pytest.mark.parametrize("tx, rx, expected", [
    ((0, 0), (1, 1), 45.0),
    ((0, 0), (-1, 0), 180.0),
    ((1.0, 2.0), (2.2, 1.4), -26.565051177077994),
])
def test_link_angle_examples(tx, rx, expected):
    assert link_angle(Point2(*tx), Point2(*rx)) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("tx, rx, obs, expected", [
    ((0, 0), (4, 0), (2, 1), 0.5),
    ((0, 0), (4, 0), (-1, 3), -0.25),
    ((1, 1), (3, 3), (3, 1), 0.5),
])
def test_project_ratio_examples(tx, rx, obs, expected):
    assert project_ratio(Point2(*tx), Point2(*rx), Point2(*obs)) == pytest.approx(expected)


@pytest.mark.parametrize("tx, rx, obs, expected", [
    ((0, 0), (4, 0), (2, 1), 1.0),
    ((0, 0), (4, 0), (7, 0), 0.0),
    ((0, 0), (3, 4), (3, 0), 2.4),
])
def test_perp_distance_examples(tx, rx, obs, expected):
    assert perp_distance(Point2(*tx), Point2(*rx), Point2(*obs)) == pytest.approx(expected)


def test_mirror_examples():
    x_axis = Segment2(Point2(-1, 0), Point2(1, 0))
    assert tuple(mirror_point(Point2(0, 1), x_axis)) == pytest.approx((0, -1))
    on_line = Point2(5, 0)
    assert tuple(mirror_point(on_line, x_axis)) == pytest.approx((5, 0))
    x_eq_1 = Segment2(Point2(1, -2), Point2(1, 7))
    assert tuple(mirror_point(Point2(2, 3), x_eq_1)) == pytest.approx((0, 3))


def test_segment_examples():
    hit = segment_intersection(Segment2(Point2(0, 0), Point2(2, 0)),
                               Segment2(Point2(1, -1), Point2(1, 1)))
    assert tuple(hit) == pytest.approx((1, 0))
    assert not segments_intersect(Segment2(Point2(0, 0), Point2(1, 0)),
                                  Segment2(Point2(0, 1), Point2(1, 1)))
    hit = segment_intersection(Segment2(Point2(0, 0), Point2(2, 2)),
                               Segment2(Point2(0, 2), Point2(2, 0)))
    assert tuple(hit) == pytest.approx((1, 1))


def test_touching_endpoints_count():
    assert segments_intersect(Segment2(Point2(0, 0), Point2(1, 0)),
                              Segment2(Point2(1, 0), Point2(1, 5)))


def test_collinear_overlap():
    assert segments_intersect(Segment2(Point2(0, 0), Point2(2, 0)),
                              Segment2(Point2(1, 0), Point2(3, 0)))
    assert not segments_intersect(Segment2(Point2(0, 0), Point2(1, 0)),
                                  Segment2(Point2(2, 0), Point2(3, 0)))


def test_degenerate_inputs():
    with pytest.raises(GeometryError, match="degenerate link"):
        link_angle(Point2(1, 1), Point2(1, 1))
    with pytest.raises(GeometryError):
        project_ratio(Point2(0, 0), Point2(0, 0), Point2(1, 1))
    with pytest.raises(ValidationError):
        Segment2(Point2(0, 0), Point2(0, 0))
    with pytest.raises(ValidationError):
        Point2(math.nan, 0)


def test_pose_orientation_wraps():
    assert Pose(Point2(0, 0), 270).orientation == pytest.approx(-90)
    assert Pose(Point2(0, 0), -180).orientation == pytest.approx(180)


def test_signed_offset_sign_follows_normal():
    tx, rx = Point2(0, 0), Point2(4, 0)
    n = Point2(0, 1)
    assert signed_offset(tx, rx, Point2(2, 0.3), n) == pytest.approx(0.3)
    assert signed_offset(tx, rx, Point2(2, -0.3), n) == pytest.approx(-0.3)


# -- properties ---------------------------------------------------------------

@given(points, points)
def test_reverse_link_differs_by_180(a, b):
    if not apart(a, b):
        return
    d = wrap_angle(link_angle(a, b) - link_angle(b, a))
    assert abs(abs(d) - 180.0) < 1e-9


@given(points, points, points, angles, points)
def test_rigid_motion_invariance(a, b, o, theta, shift):
    if not apart(a, b):
        return
    move = lambda p: rotate(p, theta) + shift
    r0, d0 = project_ratio(a, b, o), perp_distance(a, b, o)
    r1, d1 = project_ratio(move(a), move(b), move(o)), perp_distance(move(a), move(b), move(o))
    scale = 1.0 + abs(r0) + d0
    assert abs(r0 - r1) <= 1e-9 * scale
    assert abs(d0 - d1) <= 1e-9 * scale


@given(points, points, points)
def test_perp_distance_cross_identity(a, b, o):
    if not apart(a, b):
        return
    expected = abs(cross(b - a, o - a)) / (b - a).norm()
    assert perp_distance(a, b, o) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@given(points, points, points)
def test_mirror_involution(p, s0, s1):
    if not apart(s0, s1, 1e-2):
        return
    seg = Segment2(s0, s1)
    back = mirror_point(mirror_point(p, seg), seg)
    scale = 1.0 + max(abs(v) for v in (*p, *s0, *s1))
    assert (back - p).norm() <= 1e-12 * scale * 100


@given(points, points, st.floats(-3, 3, allow_nan=False))
def test_projection_is_affine_along_link(a, b, t):
    if not apart(a, b, 1e-2):
        return
    o = a + (b - a) * t
    assert project_ratio(a, b, o) == pytest.approx(t, abs=1e-9)
    assert perp_distance(a, b, o) <= 1e-9 * (1 + (b - a).norm() * (1 + abs(t)))


@settings(max_examples=200)
@given(points, points, points, points)
def test_intersection_point_lies_on_both(a, b, c, d):
    if not (apart(a, b) and apart(c, d)):
        return
    s1, s2 = Segment2(a, b), Segment2(c, d)
    p = segment_intersection(s1, s2)
    assert (p is None) == (segment_intersection(s2, s1) is None)
    if p is not None:
        for s in (s1, s2):
            slack = 1e-6 * (1 + s.length())
            assert perp_distance(s.a, s.b, p) <= slack
            assert -1e-6 <= project_ratio(s.a, s.b, p) <= 1 + 1e-6


@given(angles)
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -180.0 < w <= 180.0
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(a)), abs_tol=1e-9)
