"""
Frames, rigid transforms and the four degree of freedom arm model.

All arm geometry lives in the shoulder frame: origin at the shoulder, +z up,
+x in the direction the person faces and +y from the right shoulder towards the
body midline. With all joint angles at zero the arm hangs straight down along -z.

    alpha: shoulder flexion about +y
    beta:  shoulder abduction about +x
    phi:   elbow flexion, 0 is a straight arm
    gamma: humeral rotation about the upper arm axis

The elbow angle (interior angle at the elbow) is exactly pi - phi in this convention.
"""

__all__ = [
    "RigidTransform",
    "LimbLengths",
    "ArmPosture",
    "JointAngles",
    "ARM_LENGTHS",
    "DEFAULT_BODY_REF",
    "wrap_angle",
    "transform_point",
    "estimate_rigid_transform",
    "rigid_transform_residuals",
    "shoulder_rotation",
    "forward_kinematics",
    "joint_angles_from_posture",
    "jacobian",
    "elbow_angle",
    "arm_plane_normal",
    "chord_elbow_angle",
    "posture_from_elbow_angle",
]

import dataclasses
import math

import numpy as np
from scipy.spatial.transform import Rotation

from dressing_core.lib.errors import (
    DegeneratePosture,
    InsufficientData,
    LengthMismatch,
    SingularPosture,
)

ORTHONORMAL_TOLERANCE = 1e-9
LENGTH_TOLERANCE = 1e-4
COLLINEAR_AREA = 1e-8
STRAIGHT_ARM_SIN = 1e-12
DEFAULT_BODY_REF = (0.0, 0.3, 0.0)


def _frozen_vector(x, size=3, name="vector"):
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.shape != (size,):
        raise ValueError("%s must have %d components, got %s" % (name, size, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError("%s must be finite, got %s" % (name, arr))
    arr.setflags(write=False)
    return arr


def wrap_angle(angle):
    """
    :param float|np.ndarray angle: radians
    :return: the same angle wrapped to (-pi, pi]
    """
    angle = np.asarray(angle, dtype=np.float64)
    in_range = (angle > -np.pi) & (angle <= np.pi)
    wrapped = np.where(in_range, angle, np.pi - np.mod(np.pi - angle, 2 * np.pi))
    return wrapped if wrapped.ndim else float(wrapped)


@dataclasses.dataclass(frozen=True, eq=False)
class RigidTransform:
    """
    x' = R x + t, mapping points given in the interactive robot base into the dressing
    robot base.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
            raise ValueError("rotation must be a finite 3x3 matrix")
        if np.max(np.abs(rotation.T @ rotation - np.eye(3))) > ORTHONORMAL_TOLERANCE:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOLERANCE:
            raise ValueError("rotation is not proper, det=%r" % np.linalg.det(rotation))
        rotation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(
            self, "translation", _frozen_vector(self.translation, name="translation")
        )

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def transform_point(self, x):
        return self.rotation @ np.asarray(x, dtype=np.float64) + self.translation

    def inverse(self):
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other):
        """
        :param RigidTransform other: applied first
        :return: transform equal to applying ``other`` and then ``self``
        :rtype: RigidTransform
        """
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


@dataclasses.dataclass(frozen=True)
class LimbLengths:
    upper_arm: float
    forearm: float

    def __post_init__(self):
        if not (self.upper_arm > 0 and self.forearm > 0):
            raise ValueError("limb lengths must be positive: %r" % (self,))

    @property
    def reach(self):
        return self.upper_arm + self.forearm

    @property
    def min_reach(self):
        """
        shoulder to hand distance of the fully folded arm
        """
        return abs(self.upper_arm - self.forearm)


# shoulder to elbow / elbow to hand in meters
ARM_LENGTHS = {
    "mannequin": LimbLengths(upper_arm=0.253, forearm=0.264),
    "human1": LimbLengths(upper_arm=0.296, forearm=0.305),
    "human2": LimbLengths(upper_arm=0.263, forearm=0.275),
}


@dataclasses.dataclass(frozen=True, eq=False)
class ArmPosture:
    p_s: np.ndarray
    p_e: np.ndarray
    p_h: np.ndarray

    def __post_init__(self):
        for name in ("p_s", "p_e", "p_h"):
            object.__setattr__(
                self, name, _frozen_vector(getattr(self, name), name=name)
            )

    @classmethod
    def from_points(cls, p_e, p_h):
        return cls(np.zeros(3), p_e, p_h)

    def as_array(self):
        """
        :return: rows shoulder, elbow, hand
        :rtype: np.ndarray
        """
        return np.stack([self.p_s, self.p_e, self.p_h])

    def __eq__(self, other):
        if not isinstance(other, ArmPosture):
            return NotImplemented
        return bool(np.array_equal(self.as_array(), other.as_array()))

    def __repr__(self):
        return "ArmPosture(p_s=%s, p_e=%s, p_h=%s)" % (
            self.p_s.tolist(),
            self.p_e.tolist(),
            self.p_h.tolist(),
        )


@dataclasses.dataclass(frozen=True)
class JointAngles:
    alpha: float
    beta: float
    phi: float
    gamma: float

    def __post_init__(self):
        values = (self.alpha, self.beta, self.phi, self.gamma)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("joint angles must be finite: %r" % (values,))
        if not 0.0 <= self.phi <= math.pi:
            raise ValueError("phi must lie in [0, pi], got %r" % self.phi)
        for v in (self.alpha, self.beta, self.gamma):
            if not -math.pi < v <= math.pi:
                raise ValueError("alpha, beta and gamma must lie in (-pi, pi]")

    @classmethod
    def from_vector(cls, q):
        """
        Builds angles from an arbitrary 4-vector, reflecting a negative or overshooting
        flexion onto the equivalent posture with gamma turned by pi.

        :param np.ndarray|list[float] q: alpha, beta, phi, gamma
        :rtype: JointAngles
        """
        alpha, beta, phi, gamma = (float(v) for v in np.asarray(q, dtype=np.float64))
        phi = float(wrap_angle(phi))
        if phi < 0:
            phi = -phi
            gamma += math.pi
        return cls(
            alpha=float(wrap_angle(alpha)),
            beta=float(wrap_angle(beta)),
            phi=phi,
            gamma=float(wrap_angle(gamma)),
        )

    def as_vector(self):
        return np.array([self.alpha, self.beta, self.phi, self.gamma])

    def normalized(self):
        return JointAngles.from_vector(self.as_vector())


def transform_point(T, x):
    """
    :param RigidTransform T:
    :param np.ndarray x: point
    :return: R x + t
    :rtype: np.ndarray
    """
    return T.transform_point(x)


def estimate_rigid_transform(points_a, points_b):
    """
    Least squares rigid transform with ``T(points_a) ~ points_b`` (SVD based, reflection
    corrected).

    :param np.ndarray points_a: N x 3
    :param np.ndarray points_b: N x 3
    :rtype: RigidTransform
    """
    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    assert a.shape == b.shape and a.ndim == 2 and a.shape[1] == 3, (
        "need matching N x 3 point sets, got %s and %s" % (a.shape, b.shape)
    )
    if a.shape[0] < 3:
        raise InsufficientData("need at least 3 correspondences, got %d" % a.shape[0])

    centroid_a = a.mean(axis=0)
    centroid_b = b.mean(axis=0)
    a0 = a - centroid_a
    b0 = b - centroid_b
    spread = np.linalg.svd(a0, compute_uv=False)
    if spread[1] <= 1e-9 * max(spread[0], 1e-300):
        raise InsufficientData("correspondences are collinear")

    H = a0.T @ b0
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = centroid_b - R @ centroid_a
    return RigidTransform(R, t)


def rigid_transform_residuals(T, points_a, points_b):
    """
    :param RigidTransform T:
    :param np.ndarray points_a: N x 3
    :param np.ndarray points_b: N x 3
    :return: distance of every mapped point of ``points_a`` to its partner
    :rtype: np.ndarray
    """
    a = np.asarray(points_a, dtype=np.float64)
    b = np.asarray(points_b, dtype=np.float64)
    return np.linalg.norm(a @ T.rotation.T + T.translation - b, axis=1)


def shoulder_rotation(alpha, beta):
    """
    :return: rotation of the upper arm frame, Ry(-alpha) Rx(-beta)
    :rtype: np.ndarray
    """
    return Rotation.from_euler("YX", [-alpha, -beta]).as_matrix()


def _forearm_local(phi, gamma):
    return Rotation.from_euler("z", gamma).apply([math.sin(phi), 0.0, -math.cos(phi)])


def forward_kinematics(q, L):
    """
    :param JointAngles q:
    :param LimbLengths L:
    :rtype: ArmPosture
    """
    R_sh = shoulder_rotation(q.alpha, q.beta)
    p_e = L.upper_arm * (R_sh @ np.array([0.0, 0.0, -1.0]))
    p_h = p_e + L.forearm * (R_sh @ _forearm_local(q.phi, q.gamma))
    return ArmPosture(np.zeros(3), p_e, p_h)


def joint_angles_from_posture(P, L, strict=False):
    """
    Inverse of :func:`forward_kinematics`.

    :param ArmPosture P:
    :param LimbLengths L:
    :param bool strict: raise on a straight arm instead of resolving gamma to 0
    :rtype: JointAngles
    """
    upper = P.p_e - P.p_s
    fore = P.p_h - P.p_e
    upper_len = np.linalg.norm(upper)
    fore_len = np.linalg.norm(fore)
    if abs(upper_len - L.upper_arm) > LENGTH_TOLERANCE:
        raise LengthMismatch(
            "upper arm is %.6f m, expected %.6f m" % (upper_len, L.upper_arm)
        )
    if abs(fore_len - L.forearm) > LENGTH_TOLERANCE:
        raise LengthMismatch(
            "forearm is %.6f m, expected %.6f m" % (fore_len, L.forearm)
        )

    u = upper / upper_len
    beta = math.asin(float(np.clip(-u[1], -1.0, 1.0)))
    alpha = math.atan2(u[0], -u[2])

    f_loc = shoulder_rotation(alpha, beta).T @ (fore / fore_len)
    radial = math.hypot(f_loc[0], f_loc[1])
    phi = math.atan2(radial, -f_loc[2])
    if radial < STRAIGHT_ARM_SIN:
        if strict:
            raise SingularPosture("arm is straight, humeral rotation is unobservable")
        gamma = 0.0
    else:
        gamma = math.atan2(f_loc[1], f_loc[0])
    return JointAngles.from_vector([alpha, beta, phi, gamma])


def jacobian(q, L):
    """
    Partial derivatives of the hand position with respect to (alpha, beta, phi, gamma).

    :param JointAngles q:
    :param LimbLengths L:
    :return: 3 x 4 matrix
    :rtype: np.ndarray
    """
    P = forward_kinematics(q, L)
    R_sh = shoulder_rotation(q.alpha, q.beta)
    y_axis = np.array([0.0, 1.0, 0.0])
    abduction_axis = Rotation.from_euler("y", -q.alpha).apply([1.0, 0.0, 0.0])
    humeral_axis = R_sh @ np.array([0.0, 0.0, 1.0])
    flexion_dir = R_sh @ Rotation.from_euler("z", q.gamma).apply(
        [math.cos(q.phi), 0.0, math.sin(q.phi)]
    )
    J = np.empty((3, 4))
    J[:, 0] = -np.cross(y_axis, P.p_h)
    J[:, 1] = -np.cross(abduction_axis, P.p_h)
    J[:, 2] = L.forearm * flexion_dir
    J[:, 3] = np.cross(humeral_axis, P.p_h - P.p_e)
    return J


def elbow_angle(P):
    """
    :param ArmPosture P:
    :return: interior angle at the elbow in [0, pi]
    :rtype: float
    """
    a = P.p_s - P.p_e
    b = P.p_h - P.p_e
    if np.linalg.norm(a) <= 1e-9 or np.linalg.norm(b) <= 1e-9:
        raise DegeneratePosture("elbow coincides with shoulder or hand")
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b)))


def arm_plane_normal(P, previous=None, body_ref=DEFAULT_BODY_REF):
    """
    Unit normal of the plane through shoulder, elbow and hand, pointing to the body side.

    :param ArmPosture P:
    :param np.ndarray|None previous: normal returned for a collinear arm
    :param tuple[float]|np.ndarray body_ref: point on the body side of the arm
    :rtype: np.ndarray
    """
    n = np.cross(P.p_e - P.p_s, P.p_h - P.p_s)
    norm = np.linalg.norm(n)
    if 0.5 * norm < COLLINEAR_AREA:
        if previous is None:
            raise DegeneratePosture("arm is straight, the arm plane is undefined")
        return np.array(previous, dtype=np.float64)
    n = n / norm
    if np.dot(n, np.asarray(body_ref, dtype=np.float64) - P.p_e) < 0:
        n = -n
    return n


def chord_elbow_angle(chord, L):
    """
    :param float chord: shoulder to hand distance
    :param LimbLengths L:
    :return: the elbow angle belonging to that distance
    :rtype: float
    """
    cos_psi = (L.upper_arm ** 2 + L.forearm ** 2 - chord ** 2) / (
        2 * L.upper_arm * L.forearm
    )
    return math.acos(float(np.clip(cos_psi, -1.0, 1.0)))


def posture_from_elbow_angle(psi, L, alpha=0.0, beta=0.0, gamma=0.0):
    """
    :param float psi: elbow angle in radians
    :param LimbLengths L:
    :rtype: ArmPosture
    """
    q = JointAngles.from_vector([alpha, beta, math.pi - psi, gamma])
    return forward_kinematics(q, L)
