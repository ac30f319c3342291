import math

import numpy as np
import pytest
from scipy.linalg import null_space
from scipy.optimize import minimize_scalar
from scipy.spatial.transform import Rotation

from dressing_core.lib.errors import (
    DegenerateTrajectory,
    InconsistentStart,
    UnreachableHand,
)
from dressing_core.lib.estimation import (
    IDENTITY_WEIGHTS,
    STRETCH_WEIGHTS,
    EstimatorWeights,
    PostureEstimate,
    compute_weights,
    hand_in_dressing_frame,
    hand_in_interactive_frame,
    solve_delta_q,
    step_estimate,
    track,
)
from dressing_core.lib.geometry import (
    JointAngles,
    RigidTransform,
    forward_kinematics,
    jacobian,
    joint_angles_from_posture,
    posture_from_elbow_angle,
)
from dressing_core.lib.stretch import (
    HumanResponseModel,
    StiffnessConfig,
    simulate_stretch,
)


@pytest.fixture
def two_sample_trajectory():
    return [
        JointAngles(0.0, 0.0, 0.0, 0.0),
        JointAngles(0.1, 0.05, 0.2, 0.08),
    ]


def test_compute_weights(two_sample_trajectory):
    Q = compute_weights(two_sample_trajectory)
    np.testing.assert_allclose(Q.q_diag, [100.0, 400.0, 25.0, 156.25], rtol=1e-12)
    np.testing.assert_allclose(np.diag(Q.matrix), Q.q_diag)


def test_compute_weights_wraps_increments():
    trajectory = [
        JointAngles(0.0, 0.0, 0.5, math.pi - 0.05),
        JointAngles(0.1, 0.1, 0.6, -math.pi + 0.05),
    ]
    Q = compute_weights(trajectory)
    assert Q.q_diag[3] == pytest.approx(1.0 / 0.1 ** 2)


def test_compute_weights_still_joint():
    trajectory = [
        JointAngles(0.0, 0.0, 0.5, 0.0),
        JointAngles(0.1, 0.1, 0.6, 0.0),
    ]
    with pytest.raises(DegenerateTrajectory, match="gamma"):
        compute_weights(trajectory)
    Q = compute_weights(trajectory, regularize=True)
    assert Q.q_diag[3] > 1e7
    with pytest.raises(DegenerateTrajectory):
        compute_weights(trajectory[:1])


def test_weights_validation():
    with pytest.raises(ValueError):
        EstimatorWeights((1.0, 2.0, 3.0))
    with pytest.raises(ValueError):
        EstimatorWeights((1.0, 2.0, 0.0, 4.0))


@pytest.mark.parametrize("Q", [STRETCH_WEIGHTS, EstimatorWeights((1, 9, 4, 2))])
def test_solve_delta_q_is_the_weighted_minimum(mannequin, random_angles, Q):
    rng = np.random.default_rng(4)
    for _ in range(1000):
        q = random_angles(rng)
        dp = rng.normal(scale=0.002, size=3)
        dq = solve_delta_q(q, dp, Q, mannequin)
        J = jacobian(q, mannequin)
        np.testing.assert_allclose(J @ dq, dp, atol=1e-9)

        particular = np.linalg.pinv(J) @ dp
        n = null_space(J)[:, 0]
        Qm = Q.matrix

        def cost(lam):
            x = particular + lam * n
            return x @ Qm @ x

        best = minimize_scalar(cost, bracket=(-1.0, 1.0), tol=1e-12)
        expected = particular + best.x * n
        np.testing.assert_allclose(dq, expected, atol=1e-7)
        assert cost(0.0) >= dq @ Qm @ dq - 1e-15


def test_identity_weights_give_the_pseudo_inverse(mannequin, random_angles):
    rng = np.random.default_rng(5)
    for _ in range(1000):
        q = random_angles(rng)
        dp = rng.normal(scale=0.002, size=3)
        dq = solve_delta_q(q, dp, IDENTITY_WEIGHTS, mannequin)
        expected = np.linalg.pinv(jacobian(q, mannequin)) @ dp
        np.testing.assert_allclose(dq, expected, atol=1e-9)


def test_step_estimate_reaches_the_hand(mannequin, random_angles):
    rng = np.random.default_rng(6)
    for _ in range(50):
        q = random_angles(rng, phi_low=0.7, phi_high=2.5)
        hand = forward_kinematics(q, mannequin).p_h + rng.normal(scale=0.003, size=3)
        estimate = step_estimate(
            PostureEstimate(q, 7), hand, mannequin, STRETCH_WEIGHTS
        )
        assert estimate.step_index == 8
        p_h = forward_kinematics(estimate.q_hat, mannequin).p_h
        np.testing.assert_allclose(p_h, hand, atol=1e-6)


@pytest.mark.parametrize(
    "hand, message", [([0.6, 0.0, 0.0], "reach is"), ([0.0, 0.005, 0.0], "folded")]
)
def test_step_estimate_unreachable(mannequin, hand, message):
    q = JointAngles(0.0, 0.0, 1.0, 0.0)
    with pytest.raises(UnreachableHand, match=message):
        step_estimate(PostureEstimate(q), hand, mannequin, STRETCH_WEIGHTS)


def test_step_estimate_without_motion(mannequin):
    q = JointAngles(0.2, 0.1, 1.0, 0.3)
    hand = forward_kinematics(q, mannequin).p_h
    estimate = step_estimate(PostureEstimate(q, 3), hand, mannequin, IDENTITY_WEIGHTS)
    assert estimate.q_hat == q
    assert estimate.step_index == 4


def test_track_inconsistent_start(mannequin):
    P0 = posture_from_elbow_angle(math.radians(90), mannequin)
    with pytest.raises(InconsistentStart):
        track(P0, [P0.p_h + [0.01, 0.0, 0.0]], mannequin, STRETCH_WEIGHTS)
    assert track(P0, np.zeros((0, 3)), mannequin, STRETCH_WEIGHTS) == []


def test_track_reports_the_row(mannequin):
    P0 = posture_from_elbow_angle(math.radians(90), mannequin)
    path = [P0.p_h, P0.p_h + [0.001, 0.0, 0.0], [0.6, 0.0, 0.0]]
    with pytest.raises(UnreachableHand, match="row 2") as info:
        track(P0, path, mannequin, STRETCH_WEIGHTS)
    assert info.value.row == 2


def test_track_constant_path(mannequin):
    P0 = posture_from_elbow_angle(math.radians(120), mannequin, alpha=0.2, gamma=0.1)
    postures = track(P0, [P0.p_h] * 5, mannequin, STRETCH_WEIGHTS)
    assert len(postures) == 5
    for P in postures:
        np.testing.assert_allclose(P.as_array(), P0.as_array(), atol=1e-12)


def test_track_matches_a_model_consistent_arm(mannequin):
    P0 = posture_from_elbow_angle(math.radians(90), mannequin)
    truth = simulate_stretch(
        P0, mannequin, StiffnessConfig(), HumanResponseModel(), steps=40
    )
    estimated = track(
        P0, [P.p_h for P in truth], mannequin, HumanResponseModel().joint_weights
    )
    assert len(estimated) == len(truth)
    for P, P_hat in zip(truth, estimated):
        np.testing.assert_allclose(P_hat.as_array(), P.as_array(), atol=1e-6)


def test_initial_estimate_is_the_inverse_kinematics(mannequin):
    P0 = posture_from_elbow_angle(math.radians(100), mannequin, beta=0.2)
    q0 = joint_angles_from_posture(P0, mannequin)
    P_hat = track(P0, [P0.p_h], mannequin, STRETCH_WEIGHTS)[0]
    np.testing.assert_allclose(
        P_hat.as_array(), forward_kinematics(q0, mannequin).as_array(), atol=1e-12
    )


def test_frames_round_trip():
    T = RigidTransform(
        Rotation.from_euler("z", 180, degrees=True).as_matrix(), [1.2, 0.0, 0.1]
    )
    x = np.array([0.4, 0.1, 0.3])
    x_D = hand_in_dressing_frame(x, T)
    np.testing.assert_allclose(x_D, [0.8, -0.1, 0.4], atol=1e-12)
    np.testing.assert_allclose(hand_in_interactive_frame(x_D, T), x, atol=1e-12)
