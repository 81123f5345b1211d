"""
Planar vector and segment geometry.

Everything here works on plain 2D points in meters and angles in degrees.
Radians only appear inside trig calls. The obstacle-to-link helpers
(`project_ratio`, `perp_distance`) implement the projection used by the
dynamic link-switching rule: the obstacle position is projected onto the
transmitter->receiver vector and its offset from that line is measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError

# Orientation tests below this magnitude (in m^2) are treated as collinear.
_COLLINEAR_EPS = 1e-12


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Point2":
        return Point2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __iter__(self):
        yield self.x
        yield self.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Segment2:
    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a == self.b:
            raise GeometryError("degenerate segment")

    def length(self) -> float:
        return (self.b - self.a).norm()

    def midpoint(self) -> Point2:
        return Point2(0.5 * (self.a.x + self.b.x), 0.5 * (self.a.y + self.b.y))


@dataclass(frozen=True)
class Pose:
    """Position plus heading (degrees CCW from +x) at a timestamp."""

    position: Point2
    orientation: float = 0.0
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "orientation", wrap_angle(self.orientation))


def dot(u: Point2, v: Point2) -> float:
    return u.x * v.x + u.y * v.y


def cross(u: Point2, v: Point2) -> float:
    return u.x * v.y - u.y * v.x


def wrap_angle(deg: float) -> float:
    """Map an angle in degrees to (-180, 180]."""
    w = math.fmod(deg, 360.0)
    if w <= -180.0:
        w += 360.0
    elif w > 180.0:
        w -= 360.0
    return w


def bearing(v: Point2) -> float:
    """Angle of a vector vs. +x, degrees in (-180, 180]."""
    return wrap_angle(math.degrees(math.atan2(v.y, v.x)))


def _link(tx: Point2, rx: Point2) -> Point2:
    tr = rx - tx
    if tr.x == 0.0 and tr.y == 0.0:
        raise GeometryError("degenerate link")
    return tr


def link_angle(tx: Point2, rx: Point2) -> float:
    """Direction of rx as seen from tx, degrees in (-180, 180].

    Quadrant-aware: tx=(0,0), rx=(-1,0) gives 180, not 0.
    """
    return bearing(_link(tx, rx))


def project_ratio(tx: Point2, rx: Point2, obs: Point2) -> float:
    """Length of the projection of tx->obs onto tx->rx, over |tx->rx|.

    0 < r < 1 exactly when the foot of the perpendicular from `obs` falls
    strictly between the two link ends.
    """
    tr = _link(tx, rx)
    return dot(obs - tx, tr) / dot(tr, tr)


def perp_distance(tx: Point2, rx: Point2, obs: Point2) -> float:
    """Unsigned distance from `obs` to the infinite line through the link."""
    tr = _link(tx, rx)
    to = obs - tx
    r = dot(to, tr) / dot(tr, tr)
    return (to - r * tr).norm()


def signed_offset(tx: Point2, rx: Point2, obs: Point2, normal: Point2) -> float:
    """`perp_distance` carrying the sign of the offset along `normal`."""
    tr = _link(tx, rx)
    to = obs - tx
    off = to - (dot(to, tr) / dot(tr, tr)) * tr
    d = off.norm()
    return -d if dot(off, normal) < 0 else d


def mirror_point(p: Point2, reflector: Segment2) -> Point2:
    """Reflect `p` across the infinite line through `reflector`."""
    a = reflector.a
    d = reflector.b - a
    t = dot(p - a, d) / dot(d, d)
    foot = a + t * d
    return Point2(2.0 * foot.x - p.x, 2.0 * foot.y - p.y)


def side_of(p: Point2, seg: Segment2) -> float:
    """Positive when `p` is left of a->b, negative when right, ~0 on the line."""
    return cross(seg.b - seg.a, p - seg.a)


def _orient(p: Point2, q: Point2, r: Point2) -> int:
    v = cross(q - p, r - p)
    if abs(v) <= _COLLINEAR_EPS:
        return 0
    return 1 if v > 0 else -1


def _on_segment(p: Point2, q: Point2, r: Point2) -> bool:
    # q collinear with p-r; check it lies within the bounding box
    return (min(p.x, r.x) - 1e-12 <= q.x <= max(p.x, r.x) + 1e-12
            and min(p.y, r.y) - 1e-12 <= q.y <= max(p.y, r.y) + 1e-12)


def segment_intersection(s1: Segment2, s2: Segment2) -> Point2 | None:
    """Intersection point of two closed segments, or None.

    Endpoint contact counts as an intersection. For collinear overlaps the
    first overlapping endpoint (s2.a, s2.b, s1.a, s1.b in that order) is
    returned.
    """
    p1, q1, p2, q2 = s1.a, s1.b, s2.a, s2.b
    o1 = _orient(p1, q1, p2)
    o2 = _orient(p1, q1, q2)
    o3 = _orient(p2, q2, p1)
    o4 = _orient(p2, q2, q1)

    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        d1 = q1 - p1
        d2 = q2 - p2
        t = cross(p2 - p1, d2) / cross(d1, d2)
        return p1 + t * d1

    if o1 == 0 and _on_segment(p1, p2, q1):
        return p2
    if o2 == 0 and _on_segment(p1, q2, q1):
        return q2
    if o3 == 0 and _on_segment(p2, p1, q2):
        return p1
    if o4 == 0 and _on_segment(p2, q1, q2):
        return q1
    return None


def segments_intersect(s1: Segment2, s2: Segment2) -> bool:
    return segment_intersection(s1, s2) is not None


def rotate(p: Point2, deg: float) -> Point2:
    c = math.cos(math.radians(deg))
    s = math.sin(math.radians(deg))
    return Point2(c * p.x - s * p.y, s * p.x + c * p.y)
