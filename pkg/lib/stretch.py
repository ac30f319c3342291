"""
Stretch guidance of the interactive robot and a simulated human arm responding to it.

The interactive robot pulls the hand along the shoulder to hand direction, the
direction that opens the elbow fastest, and is stiff only along that direction so
the human can deviate freely in the perpendicular plane.
"""

__all__ = [
    "StiffnessConfig",
    "HumanResponseModel",
    "SimulatedHuman",
    "optimal_stretch_direction",
    "stiffness_rotation",
    "local_stiffness",
    "rotate_stiffness",
    "global_stiffness",
    "guidance_force",
    "simulate_stretch",
]

import dataclasses
import logging
import math

import numpy as np
from scipy.spatial.transform import Rotation

from dressing_core.lib.errors import DegeneratePosture
from dressing_core.lib.estimation import (
    STRETCH_WEIGHTS,
    EstimatorWeights,
    PostureEstimate,
    step_estimate,
)
from dressing_core.lib.geometry import (
    elbow_angle,
    forward_kinematics,
    joint_angles_from_posture,
)

DEFAULT_STIFFNESS = 200.0
DEFAULT_DAMPING = 2 * math.sqrt(DEFAULT_STIFFNESS * 1.0)
DEFAULT_DT = 0.1
STRETCH_LEAD = 0.002
STRAIGHT_STOP = math.radians(179.0)
MAX_STRETCH = math.radians(179.5)
FOLD_MARGIN = 1e-4


@dataclasses.dataclass(frozen=True)
class StiffnessConfig:
    k_x: float = DEFAULT_STIFFNESS
    damping: float = DEFAULT_DAMPING

    def __post_init__(self):
        if not (self.k_x >= 0 and self.damping >= 0):
            raise ValueError("stiffness and damping must be non-negative: %r" % (self,))

    @classmethod
    def critically_damped(cls, k_x, mass=1.0):
        return cls(k_x=k_x, damping=2 * math.sqrt(k_x * mass))


@dataclasses.dataclass(frozen=True, eq=False)
class HumanResponseModel:
    """
    First order model of the human holding the interactive robot.

    :param float compliance_gain: hand velocity per unit guidance force, m/(N s)
    :param np.ndarray deviation_bias: constant hand drift in m/s
    :param float noise_std: per step positional noise in m
    :param EstimatorWeights joint_weights: weights of the human's own redundancy
        resolution when moving the hand
    :param float swivel_rate: rotation of the elbow about the shoulder-hand axis in
        rad/s, invisible at the hand
    """

    compliance_gain: float = 0.1
    deviation_bias: np.ndarray = (0.0, 0.0, 0.0)
    noise_std: float = 0.0
    joint_weights: EstimatorWeights = STRETCH_WEIGHTS
    swivel_rate: float = 0.0

    def __post_init__(self):
        if not (self.compliance_gain >= 0 and self.noise_std >= 0):
            raise ValueError("compliance gain and noise must be non-negative")
        bias = np.array(self.deviation_bias, dtype=np.float64)
        assert bias.shape == (3,), "deviation bias must be a 3-vector"
        bias.setflags(write=False)
        object.__setattr__(self, "deviation_bias", bias)

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


def optimal_stretch_direction(P):
    """
    :param ArmPosture P:
    :return: unit vector from the shoulder through the hand
    :rtype: np.ndarray
    """
    chord = P.p_h - P.p_s
    norm = np.linalg.norm(chord)
    if norm <= 1e-6:
        raise DegeneratePosture("hand coincides with the shoulder")
    return chord / norm


def stiffness_rotation(direction):
    """
    Minimal rotation taking the global x-axis onto ``direction``, returned transposed so
    that its first row is the direction.

    :param np.ndarray direction: unit vector
    :rtype: np.ndarray
    """
    d = np.asarray(direction, dtype=np.float64)
    x_axis = np.array([1.0, 0.0, 0.0])
    axis = np.cross(x_axis, d)
    sin_angle = np.linalg.norm(axis)
    if sin_angle < 1e-12:
        rotvec = np.zeros(3) if d[0] > 0 else np.array([0.0, 0.0, math.pi])
    else:
        rotvec = axis / sin_angle * math.atan2(sin_angle, float(np.dot(x_axis, d)))
    return Rotation.from_rotvec(rotvec).as_matrix().T


def local_stiffness(cfg):
    return np.diag([cfg.k_x, 0.0, 0.0])


def rotate_stiffness(gamma, K_local):
    """
    :param np.ndarray gamma: rotation with the stiff direction as first row
    :param np.ndarray K_local:
    :return: gamma' K_local gamma
    """
    return gamma.T @ K_local @ gamma


def global_stiffness(direction, cfg):
    """
    :param np.ndarray direction: unit guidance direction
    :param StiffnessConfig cfg:
    :return: k_x d d', stiff along d and fully compliant perpendicular to it
    :rtype: np.ndarray
    """
    d = np.asarray(direction, dtype=np.float64)
    assert abs(np.linalg.norm(d) - 1.0) <= 1e-9, "direction must be a unit vector"
    return cfg.k_x * np.outer(d, d)


def guidance_force(K_global, cfg, x_d, x, v):
    """
    Task space PD law with zero desired velocity.

    :rtype: np.ndarray
    """
    return K_global @ (np.asarray(x_d) - np.asarray(x)) - cfg.damping * np.asarray(v)


class SimulatedHuman:
    """
    Ground truth arm that is pulled by the stretch controller.

    The hand follows the guidance force with a first order response, the arm posture is
    updated from the hand motion with the human's own joint weights and an optional
    elbow swivel. Owns its random generator so runs are reproducible per seed.
    """

    def __init__(
        self, posture, L, cfg, human, dt=DEFAULT_DT, seed=0, lead=STRETCH_LEAD
    ):
        """
        :param ArmPosture posture: initial posture, consistent with ``L``
        :param LimbLengths L:
        :param StiffnessConfig cfg:
        :param HumanResponseModel human:
        :param float dt: control period in seconds
        :param int seed:
        :param float lead: distance of the desired hand position ahead of the hand
        """
        assert dt > 0, "dt must be positive"
        self.lead = lead
        self.L = L
        self.cfg = cfg
        self.human = human
        self.dt = dt
        self.rng = np.random.default_rng(seed)

        self.posture = posture
        self.estimate = PostureEstimate(joint_angles_from_posture(posture, L), 0)
        self.velocity = np.zeros(3)
        self.stopped = False

    def step(self):
        """
        Advances the simulation by one control period.

        :return: the new ground truth posture
        :rtype: ArmPosture
        """
        P = self.posture
        x = P.p_h

        if not self.stopped and elbow_angle(P) > STRAIGHT_STOP:
            logging.info("arm is stretched, stopping the stretch controller")
            self.stopped = True

        if self.stopped:
            v_follow = np.zeros(3)
        else:
            d = optimal_stretch_direction(P)
            K = global_stiffness(d, self.cfg)
            x_d = x + self.lead * d
            c = self.human.compliance_gain
            # damping is solved implicitly: v = c (K (x_d - x) - D v)
            v_follow = c * (K @ (x_d - x)) / (1.0 + c * self.cfg.damping)

        self.velocity = v_follow + self.human.deviation_bias
        noise = self.human.noise_std * self.rng.standard_normal(3)
        hand = self._clip_to_reach(x + self.velocity * self.dt + noise)
        if np.array_equal(hand, x) and self.human.swivel_rate == 0:
            return P

        self.estimate = step_estimate(
            self.estimate, hand, self.L, self.human.joint_weights
        )
        P = forward_kinematics(self.estimate.q_hat, self.L)
        if self.human.swivel_rate != 0:
            P = self._swivel(P, self.human.swivel_rate * self.dt)
        self.posture = P
        return P

    def _clip_to_reach(self, hand):
        radius = np.linalg.norm(hand)
        Lu, Lf = self.L.upper_arm, self.L.forearm
        max_radius = math.sqrt(Lu ** 2 + Lf ** 2 - 2 * Lu * Lf * math.cos(MAX_STRETCH))
        min_radius = self.L.min_reach + FOLD_MARGIN
        if radius > max_radius:
            return hand * (max_radius / radius)
        if radius < min_radius:
            return hand * (min_radius / radius)
        return hand

    def _swivel(self, P, angle):
        axis = P.p_h / np.linalg.norm(P.p_h)
        p_e = Rotation.from_rotvec(angle * axis).apply(P.p_e)
        swiveled = type(P)(P.p_s, p_e, P.p_h)
        q = joint_angles_from_posture(swiveled, self.L)
        self.estimate = PostureEstimate(q, self.estimate.step_index)
        return forward_kinematics(q, self.L)


def simulate_stretch(
    P0, L, cfg, human, steps, dt=DEFAULT_DT, seed=0, lead=STRETCH_LEAD
):
    """
    :param ArmPosture P0:
    :param LimbLengths L:
    :param StiffnessConfig cfg:
    :param HumanResponseModel human:
    :param int steps:
    :param float dt:
    :param int seed:
    :param float lead:
    :return: the initial posture followed by one posture per step
    :rtype: list[ArmPosture]
    """
    sim = SimulatedHuman(P0, L, cfg, human, dt=dt, seed=seed, lead=lead)
    postures = [P0]
    for _ in range(steps):
        postures.append(sim.step())
    return postures
