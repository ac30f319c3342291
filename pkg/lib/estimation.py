"""
Recursive arm posture estimation from hand displacements.

Only the hand position is observed (it is the end effector position of the
interactive robot). Each displacement is distributed over the four joint angles by
the minimal weighted joint motion that reproduces it exactly:

    dq* = J+ dp - (mu' Q dq_h / mu' Q mu) mu

with J+ the pseudoinverse of the hand Jacobian, dq_h = J+ dp and mu the unit vector
spanning the null space of J.
"""

__all__ = [
    "EstimatorWeights",
    "PostureEstimate",
    "STRETCH_WEIGHTS",
    "IDENTITY_WEIGHTS",
    "compute_weights",
    "solve_delta_q",
    "step_estimate",
    "track",
    "hand_in_dressing_frame",
    "hand_in_interactive_frame",
]

import dataclasses
import logging
import math

import numpy as np

from dressing_core.lib.errors import (
    DegenerateTrajectory,
    InconsistentStart,
    SingularJacobian,
    UnreachableHand,
)
from dressing_core.lib.geometry import (
    JointAngles,
    forward_kinematics,
    jacobian,
    joint_angles_from_posture,
    transform_point,
    wrap_angle,
)

STEP_CAP = 0.005
START_TOLERANCE = 0.005
SINGULAR_VALUE_FLOOR = 1e-10
STRAIGHT_ARM_PHI = 1e-3
DAMPING = 1e-6
REGULARIZATION = 1e-8
REFINE_TOLERANCE = 1e-9
MAX_REFINEMENTS = 20
HAND_TOLERANCE = 1e-6


@dataclasses.dataclass(frozen=True)
class EstimatorWeights:
    q_diag: tuple

    def __post_init__(self):
        q_diag = tuple(float(v) for v in self.q_diag)
        if len(q_diag) != 4:
            raise ValueError("need four weights, got %d" % len(q_diag))
        if not all(math.isfinite(v) and v > 0 for v in q_diag):
            raise ValueError("weights must be finite and positive: %r" % (q_diag,))
        object.__setattr__(self, "q_diag", q_diag)

    @property
    def matrix(self):
        return np.diag(self.q_diag)


# weights fitted on a recorded stretch motion
STRETCH_WEIGHTS = EstimatorWeights((207.89, 654.28, 99.89, 184.65))
IDENTITY_WEIGHTS = EstimatorWeights((1.0, 1.0, 1.0, 1.0))


@dataclasses.dataclass(frozen=True)
class PostureEstimate:
    q_hat: JointAngles
    step_index: int = 0


def compute_weights(angle_trajectory, regularize=False):
    """
    Inverse summed squared joint increments along a recorded motion. Joints that move
    a lot in the recording get small weights and are preferred by the estimator.

    :param list[JointAngles] angle_trajectory:
    :param bool regularize: add a small constant to every sum instead of failing on a
        joint that never moves
    :rtype: EstimatorWeights
    """
    if len(angle_trajectory) < 2:
        raise DegenerateTrajectory(
            "need at least two samples, got %d" % len(angle_trajectory)
        )
    q = np.stack([a.as_vector() for a in angle_trajectory])
    sums = np.sum(wrap_angle(np.diff(q, axis=0)) ** 2, axis=0)
    if regularize:
        sums = sums + REGULARIZATION
    elif np.any(sums == 0):
        still = [n for n, s in zip(("alpha", "beta", "phi", "gamma"), sums) if s == 0]
        raise DegenerateTrajectory("joints never move: %s" % ", ".join(still))
    return EstimatorWeights(tuple(1.0 / sums))


def _null_space_solution(J, delta_p_h, Q):
    U, S, Vt = np.linalg.svd(J, full_matrices=True)
    rank = int(np.sum(S > SINGULAR_VALUE_FLOOR))
    if rank < 3:
        raise SingularJacobian("hand Jacobian has rank %d" % rank)
    J_pinv = Vt[:3].T @ np.diag(1.0 / S) @ U.T
    dq_h = J_pinv @ delta_p_h

    mu = Vt[3]
    first = np.flatnonzero(np.abs(mu) > 1e-15)[0]
    if mu[first] < 0:
        mu = -mu
    Qm = Q.matrix
    lam = -(mu @ Qm @ dq_h) / (mu @ Qm @ mu)
    return dq_h + lam * mu


def _damped_solution(J, delta_p_h):
    return J.T @ np.linalg.solve(J @ J.T + DAMPING * np.eye(3), delta_p_h)


def solve_delta_q(q, delta_p_h, Q, L):
    """
    :param JointAngles q: current estimate
    :param np.ndarray delta_p_h: hand displacement
    :param EstimatorWeights Q:
    :param LimbLengths L:
    :return: joint increment reproducing the displacement with minimal weighted norm
    :rtype: np.ndarray
    """
    delta_p_h = np.asarray(delta_p_h, dtype=np.float64)
    return _null_space_solution(jacobian(q, L), delta_p_h, Q)


def _increment(q, delta_p_h, L, Q):
    J = jacobian(q, L)
    if q.phi < STRAIGHT_ARM_PHI:
        dq = _damped_solution(J, delta_p_h)
    else:
        dq = _null_space_solution(J, delta_p_h, Q)
    return JointAngles.from_vector(q.as_vector() + dq)


def step_estimate(prev, hand_now, L, Q):
    """
    :param PostureEstimate prev:
    :param np.ndarray hand_now: measured hand position in the shoulder frame
    :param LimbLengths L:
    :param EstimatorWeights Q:
    :rtype: PostureEstimate
    """
    hand_now = np.asarray(hand_now, dtype=np.float64)
    assert hand_now.shape == (3,) and np.all(np.isfinite(hand_now)), (
        "hand position must be a finite 3-vector, got %s" % hand_now
    )
    distance = np.linalg.norm(hand_now)
    if distance > L.reach:
        raise UnreachableHand(
            "hand is %.4f m from the shoulder, reach is %.4f m" % (distance, L.reach)
        )
    if distance < L.min_reach:
        raise UnreachableHand(
            "hand is %.4f m from the shoulder, the folded arm reaches %.4f m"
            % (distance, L.min_reach)
        )

    q = prev.q_hat
    delta = hand_now - forward_kinematics(q, L).p_h
    if not np.any(delta):
        return PostureEstimate(q, prev.step_index + 1)

    num_sub_steps = max(1, int(math.ceil(np.linalg.norm(delta) / STEP_CAP)))
    if num_sub_steps > 1:
        logging.debug("splitting hand displacement into %d steps" % num_sub_steps)
    for _ in range(num_sub_steps):
        q = _increment(q, delta / num_sub_steps, L, Q)

    residual = hand_now - forward_kinematics(q, L).p_h
    for _ in range(MAX_REFINEMENTS):
        if np.linalg.norm(residual) < REFINE_TOLERANCE:
            break
        q = _increment(q, residual, L, Q)
        residual = hand_now - forward_kinematics(q, L).p_h
    if np.linalg.norm(residual) > HAND_TOLERANCE:
        raise SingularJacobian(
            "estimate does not reach the measured hand, residual %.3g m"
            % np.linalg.norm(residual)
        )
    return PostureEstimate(q, prev.step_index + 1)


def track(initial, hand_path, L, Q):
    """
    Runs the recursive estimator over a hand path. Only the initial posture is known.

    :param ArmPosture initial:
    :param np.ndarray hand_path: N x 3 hand positions in the shoulder frame
    :param LimbLengths L:
    :param EstimatorWeights Q:
    :return: one estimated posture per hand position
    :rtype: list[ArmPosture]
    """
    hand_path = np.asarray(hand_path, dtype=np.float64).reshape(-1, 3)
    estimate = PostureEstimate(joint_angles_from_posture(initial, L), 0)
    if len(hand_path) == 0:
        return []
    offset = np.linalg.norm(hand_path[0] - initial.p_h)
    if offset > START_TOLERANCE:
        raise InconsistentStart(
            "first hand sample is %.4f m away from the initial hand" % offset
        )

    postures = []
    for row, hand in enumerate(hand_path):
        try:
            estimate = step_estimate(estimate, hand, L, Q)
        except UnreachableHand as e:
            raise UnreachableHand(str(e), row=row) from e
        postures.append(forward_kinematics(estimate.q_hat, L))
    return postures


def hand_in_dressing_frame(x_end_eff_I, T):
    """
    The hand is held by the interactive robot, its position is the end effector
    position mapped into the dressing robot frame.

    :param np.ndarray x_end_eff_I: end effector position, interactive robot frame
    :param RigidTransform T: calibration from interactive to dressing frame
    :rtype: np.ndarray
    """
    return transform_point(T, x_end_eff_I)


def hand_in_interactive_frame(x_D, T):
    return transform_point(T.inverse(), x_D)
