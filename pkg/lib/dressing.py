"""
Arm relative dressing coordinates.

The progress curve runs from the hand to the shoulder: a forearm segment, a circular
arc of radius r rounding the elbow and an upper arm segment. A point x is described
by (s, l, theta):

    s      normalized arclength of the closest curve point x_curve, 0 at the hand and
           1 at the shoulder
    l      |x - x_curve|
    theta  angle of x - x_curve around the curve, 0 along the body side arm plane
           normal v and counterclockwise about the curve tangent

x_curve is searched for in the arm plane. On the elbow arc it lies on the line from
the arc center through the projected point.
"""

__all__ = [
    "Segment",
    "Strategy",
    "ProgressCurve",
    "DressingCoord",
    "DEFAULT_ARC_RADIUS",
    "build_progress_curve",
    "curve_point",
    "project_to_arm_plane",
    "classify_segment",
    "locate_on_curve",
    "to_dressing",
    "from_dressing",
    "strategy_side",
    "classify_strategy",
    "armscye_far_point",
    "distance_to_arm",
    "inner_side_angle",
]

import dataclasses
import enum
import math

import numpy as np

from dressing_core.lib.errors import (
    AmbiguousProjection,
    ArcTooLarge,
    OutOfRange,
    PathDoesNotCrossElbow,
    StraightArm,
)
from dressing_core.lib.geometry import arm_plane_normal, elbow_angle

DEFAULT_ARC_RADIUS = 0.05
STRAIGHT_LIMIT = math.pi - 1e-3
ANGLE_TOLERANCE = 1e-9
CENTER_TOLERANCE = 1e-12
LIMB_TOLERANCE = 1e-12
CROSSING_LOW = 0.3
CROSSING_HIGH = 0.7


class Segment(enum.Enum):
    Forearm = "Forearm"
    Elbow = "Elbow"
    Upperarm = "Upperarm"


class Strategy(enum.Enum):
    Inner = "Inner"
    Outer = "Outer"


@dataclasses.dataclass(frozen=True, eq=False)
class ProgressCurve:
    """
    :param np.ndarray forearm_dir: unit direction of travel on the forearm, hand to elbow
    :param np.ndarray upper_dir: unit direction of travel on the upper arm, elbow to
        shoulder
    :param np.ndarray arc_start: unit vector from the arc center to p_he
    """

    p_h: np.ndarray
    p_e: np.ndarray
    p_s: np.ndarray
    r: float
    p_he: np.ndarray
    p_es: np.ndarray
    d1: float
    d2: float
    arc_center: np.ndarray
    arc_sweep: float
    total_length: float
    forearm_dir: np.ndarray
    upper_dir: np.ndarray
    arc_start: np.ndarray

    @property
    def arc_length(self):
        return self.arc_sweep * self.r

    @property
    def straight(self):
        return self.arc_sweep == 0.0

    @property
    def s_mid(self):
        """
        progress value at the middle of the elbow arc
        """
        return (self.d1 + 0.5 * self.arc_length) / self.total_length


@dataclasses.dataclass(frozen=True)
class DressingCoord:
    s: float
    l: float
    theta: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.s, self.l, self.theta)):
            raise ValueError("dressing coordinate must be finite: %r" % (self,))
        if self.l < 0:
            raise ValueError(
                "distance to the arm must be non-negative, got %r" % self.l
            )

    def as_tuple(self):
        return self.s, self.l, self.theta


def build_progress_curve(P, r=DEFAULT_ARC_RADIUS, straight_fallback=True):
    """
    :param ArmPosture P:
    :param float r: elbow arc radius
    :param bool straight_fallback: for a (nearly) straight arm return the two collinear
        segments without arc instead of raising
    :rtype: ProgressCurve
    """
    assert r > 0, "arc radius must be positive"
    fore = P.p_h - P.p_e
    upper = P.p_s - P.p_e
    fore_len = np.linalg.norm(fore)
    upper_len = np.linalg.norm(upper)
    f_hat = fore / fore_len
    u_hat = upper / upper_len
    psi = elbow_angle(P)
    min_limb = min(fore_len, upper_len)

    if psi >= STRAIGHT_LIMIT:
        if not straight_fallback:
            raise StraightArm("elbow angle %.5f rad leaves no room for an arc" % psi)
        return ProgressCurve(
            p_h=P.p_h,
            p_e=P.p_e,
            p_s=P.p_s,
            r=r,
            p_he=P.p_e,
            p_es=P.p_e,
            d1=fore_len,
            d2=upper_len,
            arc_center=P.p_e,
            arc_sweep=0.0,
            total_length=fore_len + upper_len,
            forearm_dir=-f_hat,
            upper_dir=u_hat,
            arc_start=np.zeros(3),
        )

    offset = r / math.tan(0.5 * psi)
    if r >= min_limb or offset >= min_limb:
        raise ArcTooLarge(
            "arc radius %.4f m needs %.4f m on each limb, shortest limb is %.4f m"
            % (r, offset, min_limb)
        )
    bisector = (f_hat + u_hat) / np.linalg.norm(f_hat + u_hat)
    center = P.p_e + (r / math.sin(0.5 * psi)) * bisector
    p_he = P.p_e + offset * f_hat
    p_es = P.p_e + offset * u_hat
    d1 = fore_len - offset
    d2 = upper_len - offset
    sweep = math.pi - psi
    return ProgressCurve(
        p_h=P.p_h,
        p_e=P.p_e,
        p_s=P.p_s,
        r=r,
        p_he=p_he,
        p_es=p_es,
        d1=d1,
        d2=d2,
        arc_center=center,
        arc_sweep=sweep,
        total_length=d1 + sweep * r + d2,
        forearm_dir=-f_hat,
        upper_dir=u_hat,
        arc_start=(p_he - center) / r,
    )


def _arc_point(curve, omega):
    a0 = curve.arc_start
    b0 = curve.forearm_dir
    point = curve.arc_center + curve.r * (math.cos(omega) * a0 + math.sin(omega) * b0)
    tangent = -math.sin(omega) * a0 + math.cos(omega) * b0
    return point, tangent


def _point_at_arclength(curve, a):
    if a <= curve.d1:
        return curve.p_h + a * curve.forearm_dir, curve.forearm_dir
    if a < curve.d1 + curve.arc_length:
        return _arc_point(curve, (a - curve.d1) / curve.r)
    b = a - curve.d1 - curve.arc_length
    return curve.p_es + b * curve.upper_dir, curve.upper_dir


def curve_point(curve, s):
    """
    :param ProgressCurve curve:
    :param float s: progress in [0, 1]
    :return: point on the curve and unit tangent, oriented hand to shoulder
    :rtype: (np.ndarray, np.ndarray)
    """
    if not 0.0 <= s <= 1.0:
        raise OutOfRange("progress %r outside [0, 1]" % s)
    return _point_at_arclength(curve, s * curve.total_length)


def project_to_arm_plane(x, P, v=None):
    """
    :param np.ndarray x:
    :param ArmPosture P:
    :param np.ndarray|None v: arm plane normal, computed from ``P`` if not given
    :rtype: np.ndarray
    """
    if v is None:
        v = arm_plane_normal(P)
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return x + v * (np.dot(P.p_h, v) - np.dot(x, v)) / np.dot(v, v)


def _limb_distances(x_arm, curve):
    d_forearm = float(np.dot(x_arm - curve.p_h, curve.forearm_dir))
    d_upperarm = float(np.dot(x_arm - curve.p_s, -curve.upper_dir))
    return d_forearm, d_upperarm


def classify_segment(x_arm, curve):
    """
    Segment rule on the limb projections: forearm if the point projects before p_he
    on the forearm line and beyond p_es on the upper arm line, upper arm in the mirrored
    case, elbow otherwise.

    :param np.ndarray x_arm: point in the arm plane
    :param ProgressCurve curve:
    :rtype: Segment
    """
    d_forearm, d_upperarm = _limb_distances(x_arm, curve)
    if d_forearm < curve.d1 and d_upperarm > curve.d2:
        return Segment.Forearm
    if d_upperarm < curve.d2 and d_forearm > curve.d1:
        return Segment.Upperarm
    return Segment.Elbow


def _arc_angles(curve, x_arm):
    """
    :return: angles of the arc points on the line through the arc center and ``x_arm``
    :rtype: list[float]
    """
    rel = x_arm - curve.arc_center
    if np.linalg.norm(rel) <= CENTER_TOLERANCE:
        raise AmbiguousProjection("point coincides with the elbow arc center")
    omega = math.atan2(
        float(np.dot(rel, curve.forearm_dir)), float(np.dot(rel, curve.arc_start))
    )
    angles = []
    for angle in (omega, omega + math.pi):
        angle = math.atan2(math.sin(angle), math.cos(angle))
        if -ANGLE_TOLERANCE <= angle <= curve.arc_sweep + ANGLE_TOLERANCE:
            angles.append(min(max(angle, 0.0), curve.arc_sweep))
    return angles


def _candidates(x_arm, curve):
    """
    Closest point candidates of every curve piece as (segment, point, arclength,
    clamped, orthogonal). A candidate is orthogonal if x_arm lies on the curve normal
    through it.
    """
    d_forearm, d_upperarm = _limb_distances(x_arm, curve)
    a = min(max(d_forearm, 0.0), curve.d1)
    point = curve.p_h + a * curve.forearm_dir
    clamped = d_forearm < -LIMB_TOLERANCE
    orthogonal = -LIMB_TOLERANCE <= d_forearm <= curve.d1 + LIMB_TOLERANCE
    yield Segment.Forearm, point, a, clamped, orthogonal
    if not curve.straight:
        for omega in _arc_angles(curve, x_arm):
            point, _ = _arc_point(curve, omega)
            yield Segment.Elbow, point, curve.d1 + omega * curve.r, False, True
    b = min(max(d_upperarm, 0.0), curve.d2)
    point = curve.p_s - b * curve.upper_dir
    clamped = d_upperarm < -LIMB_TOLERANCE
    orthogonal = -LIMB_TOLERANCE <= d_upperarm <= curve.d2 + LIMB_TOLERANCE
    yield Segment.Upperarm, point, curve.total_length - b, clamped, orthogonal


def locate_on_curve(x_arm, curve):
    """
    Nearest curve point among those whose normal passes through ``x_arm`` (the foot on
    a limb or an arc point on the line through the arc center) and the curve ends
    that points behind the hand or past the shoulder clamp to. Ties go to the piece
    nearer the hand.

    :param np.ndarray x_arm: point in the arm plane
    :param ProgressCurve curve:
    :return: segment, closest curve point, its arclength from the hand and whether the
        point was clamped to an end of the curve
    :rtype: (Segment, np.ndarray, float, bool)
    """
    candidates = list(_candidates(x_arm, curve))
    pool = [c for c in candidates if c[3] or c[4]] or candidates
    best = min(pool, key=lambda c: float(np.linalg.norm(x_arm - c[1])))
    return best[:4]


def _angle_around(w, tangent, v):
    side = np.cross(tangent, v)
    return math.atan2(float(np.dot(w, side)), float(np.dot(w, v))) % (2 * math.pi)


def to_dressing(x, P, curve, v):
    """
    :param np.ndarray x: Cartesian point in the shoulder frame
    :param ArmPosture P:
    :param ProgressCurve curve: progress curve of ``P``
    :param np.ndarray v: body side unit normal of the arm plane
    :rtype: DressingCoord
    """
    x = np.asarray(x, dtype=np.float64)
    x_arm = project_to_arm_plane(x, P, v)
    _, x_curve, arclength, _ = locate_on_curve(x_arm, curve)
    w = x - x_curve
    l = float(np.linalg.norm(w))
    s = min(max(arclength / curve.total_length, 0.0), 1.0)
    if l == 0.0:
        return DressingCoord(s, 0.0, 0.0)
    _, tangent = _point_at_arclength(curve, arclength)
    theta = _angle_around(w, tangent, v)
    if theta >= 2 * math.pi:
        theta = 0.0
    return DressingCoord(s, l, theta)


def from_dressing(dc, P, curve, v):
    """
    :param DressingCoord dc:
    :param ArmPosture P:
    :param ProgressCurve curve:
    :param np.ndarray v: body side unit normal of the arm plane
    :rtype: np.ndarray
    """
    if not 0.0 <= dc.s <= 1.0:
        raise OutOfRange("progress %r outside [0, 1]" % dc.s)
    x_curve, tangent = _point_at_arclength(curve, dc.s * curve.total_length)
    v = np.asarray(v, dtype=np.float64)
    w = math.cos(dc.theta) * v + math.sin(dc.theta) * np.cross(tangent, v)
    return x_curve + dc.l * w


def strategy_side(x, P, v=None):
    """
    In-plane distance from the elbow, positive when the point lies inside the angle
    spanned by forearm and upper arm.

    :param np.ndarray x:
    :param ArmPosture P:
    :param np.ndarray|None v:
    :rtype: float
    """
    w = project_to_arm_plane(x, P, v) - P.p_e
    basis = np.stack([P.p_h - P.p_e, P.p_s - P.p_e], axis=1)
    coefficients = np.linalg.lstsq(basis, w, rcond=None)[0]
    distance = float(np.linalg.norm(w))
    return distance if np.all(coefficients >= 0) else -distance


def classify_strategy(path, P, curve, v=None):
    """
    Decides on which side of the elbow a dressing path passes, from the path point whose
    progress is closest to the middle of the elbow arc.

    :param np.ndarray path: N x 3 gripper positions in the shoulder frame
    :param ArmPosture P:
    :param ProgressCurve curve:
    :param np.ndarray|None v:
    :rtype: (Strategy, float)
    """
    if v is None:
        v = arm_plane_normal(P)
    path = np.asarray(path, dtype=np.float64).reshape(-1, 3)
    if len(path) == 0:
        raise PathDoesNotCrossElbow("path is empty")
    progress = np.array([to_dressing(x, P, curve, v).s for x in path])
    if not (progress.min() < CROSSING_LOW and progress.max() > CROSSING_HIGH):
        raise PathDoesNotCrossElbow(
            "path covers progress [%.3f, %.3f], needs to pass %.1f and %.1f"
            % (progress.min(), progress.max(), CROSSING_LOW, CROSSING_HIGH)
        )
    transition = path[int(np.argmin(np.abs(progress - curve.s_mid)))]
    distance = strategy_side(transition, P, v)
    return (Strategy.Inner if distance > 0 else Strategy.Outer), distance


def armscye_far_point(x, P, curve, v, diameter):
    """
    Point of a rigid ring of the given diameter around the arm, opposite the gripper.

    :param np.ndarray x: gripper position
    :rtype: np.ndarray
    """
    x = np.asarray(x, dtype=np.float64)
    x_arm = project_to_arm_plane(x, P, v)
    _, x_curve, _, _ = locate_on_curve(x_arm, curve)
    w = x - x_curve
    l = np.linalg.norm(w)
    if l == 0.0:
        return x_curve
    return x - diameter * w / l


def distance_to_arm(x, P):
    """
    :return: distance from ``x`` to the forearm and upper arm segments
    :rtype: float
    """
    x = np.asarray(x, dtype=np.float64)
    best = math.inf
    for a, b in ((P.p_h, P.p_e), (P.p_e, P.p_s)):
        ab = b - a
        t = np.clip(np.dot(x - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(x - (a + t * ab))))
    return best


def inner_side_angle(curve, v):
    """
    :return: theta of the in-plane direction pointing from the forearm towards the
        inside of the elbow
    :rtype: float
    """
    t = curve.forearm_dir
    inner = curve.upper_dir - np.dot(curve.upper_dir, t) * t
    if np.linalg.norm(inner) < 1e-12:
        # straight arm, any in-plane side is the inner one
        inner = np.cross(t, v)
    return _angle_around(inner, t, v)
