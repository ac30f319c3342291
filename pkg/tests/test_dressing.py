import math

import numpy as np
import pytest

from dressing_core.lib.dressing import (
    DressingCoord,
    Segment,
    Strategy,
    build_progress_curve,
    classify_segment,
    classify_strategy,
    curve_point,
    distance_to_arm,
    from_dressing,
    inner_side_angle,
    locate_on_curve,
    project_to_arm_plane,
    to_dressing,
)
from dressing_core.lib.errors import (
    ArcTooLarge,
    OutOfRange,
    PathDoesNotCrossElbow,
    StraightArm,
)
from dressing_core.lib.geometry import (
    LimbLengths,
    arm_plane_normal,
    posture_from_elbow_angle,
    wrap_angle,
)
from dressing_core.lib.policy import synthesize_demonstration


@pytest.fixture
def right_angle_arm(mannequin):
    P = posture_from_elbow_angle(math.radians(90), mannequin)
    return P, build_progress_curve(P, 0.05), arm_plane_normal(P)


def test_curve_lengths():
    L = LimbLengths(0.25, 0.25)
    curve = build_progress_curve(posture_from_elbow_angle(math.radians(90), L), 0.05)
    assert curve.d1 == pytest.approx(0.20)
    assert curve.d2 == pytest.approx(0.20)
    assert curve.arc_sweep == pytest.approx(math.pi / 2)
    assert curve.total_length == pytest.approx(0.40 + 0.025 * math.pi)
    assert curve.s_mid == pytest.approx(0.5)


def test_curve_is_tangent_continuous(mannequin):
    for degrees in (40.0, 90.0, 150.0):
        P = posture_from_elbow_angle(math.radians(degrees), mannequin, alpha=0.4)
        curve = build_progress_curve(P, 0.05)
        s_he = curve.d1 / curve.total_length
        s_es = (curve.d1 + curve.arc_length) / curve.total_length
        for s_joint, point in ((s_he, curve.p_he), (s_es, curve.p_es)):
            before, t_before = curve_point(curve, s_joint - 1e-9)
            after, t_after = curve_point(curve, s_joint + 1e-9)
            np.testing.assert_allclose(before, point, atol=1e-8)
            np.testing.assert_allclose(after, point, atol=1e-8)
            np.testing.assert_allclose(t_before, t_after, atol=1e-6)
        np.testing.assert_allclose(curve_point(curve, 0.0)[0], P.p_h, atol=1e-15)
        np.testing.assert_allclose(curve_point(curve, 1.0)[0], P.p_s, atol=1e-12)
        assert np.linalg.norm(curve.p_he - curve.arc_center) == pytest.approx(0.05)


def test_curve_preconditions(mannequin):
    P = posture_from_elbow_angle(math.radians(90), mannequin)
    with pytest.raises(ArcTooLarge):
        build_progress_curve(P, 0.3)
    straight = posture_from_elbow_angle(math.pi, mannequin)
    with pytest.raises(StraightArm):
        build_progress_curve(straight, 0.05, straight_fallback=False)
    curve = build_progress_curve(straight, 0.05)
    assert curve.straight
    assert curve.total_length == pytest.approx(mannequin.reach)
    with pytest.raises(OutOfRange):
        curve_point(curve, 1.1)
    with pytest.raises(OutOfRange):
        from_dressing(DressingCoord(-0.1, 0.0, 0.0), straight, curve, [0, 1, 0])


def test_points_on_the_curve(right_angle_arm):
    P, curve, v = right_angle_arm
    for s in np.linspace(0.0, 1.0, 41):
        point, _ = curve_point(curve, s)
        coord = to_dressing(point, P, curve, v)
        assert coord.l < 1e-9
        assert coord.s == pytest.approx(s, abs=1e-9)


def test_progress_is_monotone_along_the_curve(right_angle_arm):
    P, curve, v = right_angle_arm
    progress = [
        to_dressing(curve_point(curve, s)[0] + 0.03 * v, P, curve, v).s
        for s in np.linspace(0.0, 1.0, 101)
    ]
    assert all(b >= a for a, b in zip(progress, progress[1:]))


def test_segments(right_angle_arm):
    P, curve, v = right_angle_arm
    assert classify_segment(curve_point(curve, 0.1)[0], curve) == Segment.Forearm
    assert classify_segment(curve_point(curve, curve.s_mid)[0], curve) == Segment.Elbow
    assert classify_segment(curve_point(curve, 0.9)[0], curve) == Segment.Upperarm
    behind_hand = P.p_h + [0.05, 0.0, 0.0]
    segment, point, arclength, clamped = locate_on_curve(behind_hand, curve)
    assert segment == Segment.Forearm
    assert clamped
    assert arclength == 0.0
    np.testing.assert_allclose(point, P.p_h)


@pytest.mark.parametrize("degrees", [60.0, 80.0, 90.0])
def test_points_behind_the_hand_start_the_curve(mannequin, degrees):
    P = posture_from_elbow_angle(math.radians(degrees), mannequin)
    curve = build_progress_curve(P, 0.05)
    v = arm_plane_normal(P)
    for offset in (0.001, 0.01, 0.03):
        coord = to_dressing(P.p_h - offset * curve.forearm_dir, P, curve, v)
        assert coord.s == 0.0
        assert coord.l == pytest.approx(offset)
    side = 0.02 * v - 0.005 * curve.forearm_dir
    coord = to_dressing(P.p_h + side, P, curve, v)
    assert coord.s == 0.0
    assert coord.l == pytest.approx(float(np.linalg.norm(side)))


def test_theta_is_continuous_around_the_forearm(right_angle_arm):
    P, curve, v = right_angle_arm
    point, tangent = curve_point(curve, 0.2)
    side = np.cross(tangent, v)
    theta = [
        to_dressing(point + 0.03 * (math.cos(a) * v + math.sin(a) * side), P, curve, v)
        .theta
        for a in np.radians(np.arange(0.0, 361.0, 1.0))
    ]
    steps = np.array([wrap_angle(b - a) for a, b in zip(theta, theta[1:])])
    assert np.all(np.abs(steps) < math.pi)
    assert np.all(steps > 0.0)
    assert steps.sum() == pytest.approx(2 * math.pi)


def test_dressing_coordinate_round_trip(mannequin):
    rng = np.random.default_rng(0)
    for _ in range(40):
        psi = rng.uniform(math.radians(60), math.radians(170))
        P = posture_from_elbow_angle(
            psi, mannequin, alpha=rng.uniform(-0.5, 0.5), beta=rng.uniform(-0.3, 0.3)
        )
        curve = build_progress_curve(P, 0.05)
        v = arm_plane_normal(P)
        for _ in range(25):
            coord = DressingCoord(
                rng.uniform(0.02, 0.98),
                rng.uniform(0.005, 0.045),
                rng.uniform(0.0, 2 * math.pi),
            )
            x = from_dressing(coord, P, curve, v)
            back = to_dressing(x, P, curve, v)
            assert back.s == pytest.approx(coord.s, abs=1e-9)
            assert back.l == pytest.approx(coord.l, abs=1e-9)
            assert wrap_angle(back.theta - coord.theta) == pytest.approx(0.0, abs=1e-9)


def test_cartesian_round_trip(mannequin):
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(40):
        P = posture_from_elbow_angle(
            rng.uniform(math.radians(60), math.radians(170)),
            mannequin,
            alpha=rng.uniform(-0.5, 0.5),
            gamma=rng.uniform(-1.0, 1.0),
        )
        curve = build_progress_curve(P, 0.05)
        v = arm_plane_normal(P)
        for _ in range(50):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            anchor, _ = curve_point(curve, rng.uniform(0.0, 1.0))
            x = anchor + rng.uniform(0.0, 0.15) * direction
            if locate_on_curve(project_to_arm_plane(x, P, v), curve)[3]:
                continue
            coord = to_dressing(x, P, curve, v)
            np.testing.assert_allclose(from_dressing(coord, P, curve, v), x, atol=1e-9)
            checked += 1
    assert checked > 1000


def test_theta_conventions(right_angle_arm):
    P, curve, v = right_angle_arm
    np.testing.assert_allclose(v, [0.0, 1.0, 0.0], atol=1e-12)
    point, tangent = curve_point(curve, 0.2)
    np.testing.assert_allclose(tangent, [-1.0, 0.0, 0.0], atol=1e-12)

    assert to_dressing(point + 0.05 * v, P, curve, v).theta == pytest.approx(0.0)
    side = np.cross(tangent, v)
    coord = to_dressing(point + 0.05 * side, P, curve, v)
    assert coord.theta == pytest.approx(math.pi / 2)
    assert coord.l == pytest.approx(0.05)

    # the inside of the elbow lies above the forearm
    assert inner_side_angle(curve, v) == pytest.approx(1.5 * math.pi)
    inside = from_dressing(
        DressingCoord(0.2, 0.05, inner_side_angle(curve, v)), P, curve, v
    )
    np.testing.assert_allclose(inside - point, [0.0, 0.0, 0.05], atol=1e-12)


def test_projection_to_the_arm_plane(right_angle_arm):
    P, _, v = right_angle_arm
    x = np.array([0.1, 0.2, -0.3])
    np.testing.assert_allclose(project_to_arm_plane(x, P, v), [0.1, 0.0, -0.3])
    np.testing.assert_allclose(project_to_arm_plane(x, P), [0.1, 0.0, -0.3])


def _crossing_path(P, curve, v, transition):
    start = curve_point(curve, 0.05)[0] + 0.05 * v
    end = curve_point(curve, 0.95)[0] + 0.05 * v
    return np.stack([start, transition, end])


@pytest.mark.parametrize(
    "offset, strategy, distance",
    [(-0.1, Strategy.Outer, -0.1), (0.1, Strategy.Inner, 0.1)],
)
def test_classify_strategy(right_angle_arm, offset, strategy, distance):
    P, curve, v = right_angle_arm
    bisector = (P.p_h - P.p_e) / np.linalg.norm(P.p_h - P.p_e)
    bisector += (P.p_s - P.p_e) / np.linalg.norm(P.p_s - P.p_e)
    bisector /= np.linalg.norm(bisector)
    path = _crossing_path(P, curve, v, P.p_e + offset * bisector)
    result, signed = classify_strategy(path, P, curve, v)
    assert result == strategy
    assert signed == pytest.approx(distance, abs=1e-12)


def test_classify_needs_a_crossing(right_angle_arm):
    P, curve, v = right_angle_arm
    path = np.stack([curve_point(curve, s)[0] + 0.05 * v for s in (0.0, 0.1, 0.2)])
    with pytest.raises(PathDoesNotCrossElbow):
        classify_strategy(path, P, curve, v)
    with pytest.raises(PathDoesNotCrossElbow):
        classify_strategy(np.zeros((0, 3)), P, curve, v)


@pytest.mark.parametrize(
    "degrees, strategy", [(80.0, Strategy.Outer), (150.0, Strategy.Inner)]
)
def test_synthesized_demonstrations_pass_on_their_side(mannequin, degrees, strategy):
    P = posture_from_elbow_angle(math.radians(degrees), mannequin)
    demo = synthesize_demonstration(P, strategy)
    curve = build_progress_curve(P)
    result, distance = classify_strategy(demo.gripper_path, P, curve)
    assert result == strategy
    assert (distance > 0) == (strategy == Strategy.Inner)


def test_distance_to_arm(right_angle_arm):
    P, _, _ = right_angle_arm
    assert distance_to_arm(P.p_e, P) == 0.0
    assert distance_to_arm(P.p_h + [0.0, 0.03, 0.0], P) == pytest.approx(0.03)
    assert distance_to_arm([0.1, 0.0, -0.1], P) == pytest.approx(0.1)
