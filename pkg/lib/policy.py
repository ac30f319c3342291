"""
Dressing policy learned from demonstrations.

Demonstrations are recorded with a static arm and converted into the dressing
coordinate. Two Gaussian mixtures map the input (s, psi) to the change of the
distance to the arm and of the angle around the arm relative to the start of the
demonstration. At execution time the progress scalar advances with a constant
increment and every query is mapped back to Cartesian space on the current curve.
"""

__all__ = [
    "DemonstrationRecord",
    "TrainingSample",
    "ProgressDynamics",
    "DressingPolicy",
    "Waypoint",
    "OUTER_STRATEGY_LIMIT",
    "DEMO_PROFILES",
    "CORPUS_ELBOW_ANGLES",
    "start_reference",
    "transform_demos",
    "untransform_samples",
    "samples_to_array",
    "step_progress",
    "train_policy",
    "generate_waypoint",
    "synthesize_demonstration",
    "synthetic_demo_corpus",
]

import dataclasses
import logging
import math

import numpy as np

from dressing_core.lib.dressing import (
    DEFAULT_ARC_RADIUS,
    DressingCoord,
    Strategy,
    build_progress_curve,
    from_dressing,
    inner_side_angle,
    to_dressing,
)
from dressing_core.lib.geometry import (
    arm_plane_normal,
    elbow_angle,
    posture_from_elbow_angle,
)
from dressing_core.lib.gmm import fit_gmm, gmr_condition, select_k_bic

DEFAULT_COMPONENTS = 8
DEFAULT_INCREMENT = 0.01
SNAP_TOLERANCE = 1e-12
OUTER_STRATEGY_LIMIT = math.radians(120.0)
# distance to the arm at the start, around the elbow and at the shoulder
DEMO_PROFILES = {
    Strategy.Inner: (0.06, 0.035, 0.04),
    Strategy.Outer: (0.06, 0.09, 0.04),
}
CORPUS_ELBOW_ANGLES = (
    80.0,
    85.0,
    90.0,
    100.0,
    110.0,
    140.0,
    145.0,
    150.0,
    160.0,
    170.0,
)


@dataclasses.dataclass(frozen=True, eq=False)
class DemonstrationRecord:
    """
    :param ArmPosture posture: static arm posture during the demonstration
    :param np.ndarray gripper_path: N x 3 gripper positions in the shoulder frame
    :param np.ndarray timestamps: N strictly increasing times in seconds
    """

    posture: object
    gripper_path: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        path = np.array(self.gripper_path, dtype=np.float64).reshape(-1, 3)
        times = np.array(self.timestamps, dtype=np.float64).reshape(-1)
        if path.shape[0] < 2:
            raise ValueError("a demonstration needs at least two samples")
        if times.shape[0] != path.shape[0]:
            raise ValueError("need one timestamp per path sample")
        if np.any(np.diff(times) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        path.setflags(write=False)
        times.setflags(write=False)
        object.__setattr__(self, "gripper_path", path)
        object.__setattr__(self, "timestamps", times)


@dataclasses.dataclass(frozen=True)
class TrainingSample:
    s: float
    psi: float
    delta_l: float
    delta_theta: float
    t: float = 0.0
    demo: int = 0


@dataclasses.dataclass(frozen=True)
class ProgressDynamics:
    c: float = DEFAULT_INCREMENT
    s_target: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("progress increment must be positive, got %r" % self.c)
        if not 0 < self.s_target <= 1:
            raise ValueError(
                "progress target must lie in (0, 1], got %r" % self.s_target
            )


@dataclasses.dataclass(frozen=True, eq=False)
class DressingPolicy:
    """
    :param GaussianMixture gmm_l: (s, psi) -> delta l
    :param GaussianMixture gmm_theta: (s, psi) -> delta theta
    :param float arc_radius: elbow arc radius the training data was converted with
    """

    gmm_l: object
    gmm_theta: object
    arc_radius: float = DEFAULT_ARC_RADIUS


@dataclasses.dataclass(frozen=True, eq=False)
class Waypoint:
    point: np.ndarray
    coord: DressingCoord
    extrapolated: bool = False
    clamped: bool = False


def start_reference(demo, r=DEFAULT_ARC_RADIUS):
    """
    :param DemonstrationRecord demo:
    :param float r:
    :return: distance to the arm and angle around it at the first path sample
    :rtype: (float, float)
    """
    P = demo.posture
    coord = to_dressing(
        demo.gripper_path[0], P, build_progress_curve(P, r), arm_plane_normal(P)
    )
    return coord.l, coord.theta


def transform_demos(demos, r=DEFAULT_ARC_RADIUS):
    """
    :param list[DemonstrationRecord] demos:
    :param float r: elbow arc radius
    :rtype: list[TrainingSample]
    """
    samples = []
    for index, demo in enumerate(demos):
        P = demo.posture
        psi = elbow_angle(P)
        curve = build_progress_curve(P, r)
        v = arm_plane_normal(P)
        coords = [to_dressing(x, P, curve, v) for x in demo.gripper_path]
        l = np.array([c.l for c in coords])
        theta = np.unwrap([c.theta for c in coords])
        for c, dl, dtheta, t in zip(
            coords, l - l[0], theta - theta[0], demo.timestamps
        ):
            samples.append(
                TrainingSample(
                    s=c.s,
                    psi=psi,
                    delta_l=float(dl),
                    delta_theta=float(dtheta),
                    t=float(t),
                    demo=index,
                )
            )
        logging.info(
            "demo %d: elbow angle %.1f deg, %d samples"
            % (index, math.degrees(psi), len(coords))
        )
    return samples


def untransform_samples(samples, posture, start_ref, r=DEFAULT_ARC_RADIUS):
    """
    Maps training samples of one demonstration back to Cartesian gripper positions.

    :param list[TrainingSample] samples:
    :param ArmPosture posture: the demonstration posture
    :param (float, float) start_ref: distance and angle at the first sample
    :param float r:
    :rtype: np.ndarray
    """
    curve = build_progress_curve(posture, r)
    v = arm_plane_normal(posture)
    l0, theta0 = start_ref
    return np.array(
        [
            from_dressing(
                DressingCoord(
                    sample.s, max(l0 + sample.delta_l, 0.0), theta0 + sample.delta_theta
                ),
                posture,
                curve,
                v,
            )
            for sample in samples
        ]
    )


def samples_to_array(samples):
    """
    :param list[TrainingSample] samples:
    :return: N x 4 array with columns s, psi, delta_l, delta_theta
    :rtype: np.ndarray
    """
    return np.array(
        [[x.s, x.psi, x.delta_l, x.delta_theta] for x in samples], dtype=np.float64
    ).reshape(-1, 4)


def step_progress(s, dyn):
    """
    :param float s: current progress
    :param ProgressDynamics dyn:
    :return: s + min(c, s_target - s)
    :rtype: float
    """
    assert s <= dyn.s_target + SNAP_TOLERANCE, "progress is past the target"
    s_next = s + min(dyn.c, dyn.s_target - s)
    if dyn.s_target - s_next < SNAP_TOLERANCE:
        s_next = dyn.s_target
    return s_next


def train_policy(
    samples,
    num_components=DEFAULT_COMPONENTS,
    k_range=None,
    seed=0,
    r=DEFAULT_ARC_RADIUS,
):
    """
    :param list[TrainingSample] samples:
    :param int num_components: components of both mixtures
    :param Iterable[int]|None k_range: select the component counts by BIC instead
    :param int seed:
    :param float r: elbow arc radius used for the training data
    :rtype: DressingPolicy
    """
    data = samples_to_array(samples)
    data_l = data[:, [0, 1, 2]]
    data_theta = data[:, [0, 1, 3]]
    if k_range is not None:
        k_l = select_k_bic(data_l, k_range, seed, input_dim=2)
        k_theta = select_k_bic(data_theta, k_range, seed, input_dim=2)
    else:
        k_l = k_theta = num_components
    logging.info(
        "training mixtures with %d (l) and %d (theta) components" % (k_l, k_theta)
    )
    return DressingPolicy(
        gmm_l=fit_gmm(data_l, k_l, seed, input_dim=2),
        gmm_theta=fit_gmm(data_theta, k_theta, seed, input_dim=2),
        arc_radius=r,
    )


def generate_waypoint(gmm_l, gmm_theta, s, psi, start_ref, P, curve, v):
    """
    :param GaussianMixture gmm_l:
    :param GaussianMixture gmm_theta:
    :param float s: progress
    :param float psi: elbow angle of the (estimated) posture
    :param (float, float) start_ref: distance and angle around the arm at the start
    :param ArmPosture P:
    :param ProgressCurve curve:
    :param np.ndarray v:
    :rtype: Waypoint
    """
    query = np.array([s, psi])
    extrapolated = not (gmm_l.inside_bounds(query) and gmm_theta.inside_bounds(query))
    if extrapolated:
        logging.warning(
            "policy query s=%.3f psi=%.1f deg lies outside the training data"
            % (s, math.degrees(psi))
        )
    delta_l = float(gmr_condition(gmm_l, query)[0][0])
    delta_theta = float(gmr_condition(gmm_theta, query)[0][0])
    l0, theta0 = start_ref
    l = l0 + delta_l
    clamped = l < 0
    if clamped:
        logging.warning("policy distance %.4f m is negative, placing on the arm" % l)
        l = 0.0
    coord = DressingCoord(s, l, theta0 + delta_theta)
    return Waypoint(
        point=from_dressing(coord, P, curve, v),
        coord=coord,
        extrapolated=extrapolated,
        clamped=clamped,
    )


def synthesize_demonstration(
    posture,
    strategy,
    r=DEFAULT_ARC_RADIUS,
    num_points=101,
    duration=10.0,
    profile=None,
    noise_std=0.0,
    rng=None,
):
    """
    Demonstration-like dressing path: starts above the hand on the inner side, keeps
    the garment away from the arm around the elbow and ends close to the shoulder.
    The outer strategy moves around to the back of the arm before reaching the elbow.
    On the inner side the path stays inside the elbow arc radius, otherwise the tube
    around the curve overlaps itself and progress along the path is not monotone.

    :param ArmPosture posture:
    :param Strategy strategy:
    :param float r:
    :param int num_points:
    :param float duration: seconds
    :param (float, float, float)|None profile: distance to the arm at start, around
        the elbow and at the shoulder, per strategy default if None
    :param float noise_std: gripper position noise in m
    :param np.random.Generator|None rng: needed for noise
    :rtype: DemonstrationRecord
    """
    curve = build_progress_curve(posture, r)
    v = arm_plane_normal(posture)
    theta0 = inner_side_angle(curve, v)
    s = np.linspace(0.0, 1.0, num_points)
    l_start, l_elbow, l_end = profile or DEMO_PROFILES[strategy]
    assert strategy == Strategy.Outer or l_elbow < r, "inner path leaves the arc"
    l = np.interp(s, [0.0, 0.3, 0.7, 1.0], [l_start, l_elbow, l_elbow, l_end])
    if strategy == Strategy.Outer:
        delta_theta = np.interp(s, [0.0, 0.1, 0.4, 1.0], [0.0, 0.0, math.pi, math.pi])
    else:
        delta_theta = np.zeros_like(s)
    path = np.array(
        [
            from_dressing(DressingCoord(si, li, theta0 + dt), posture, curve, v)
            for si, li, dt in zip(s, l, delta_theta)
        ]
    )
    if noise_std > 0:
        path = path + noise_std * rng.standard_normal(path.shape)
    return DemonstrationRecord(
        posture=posture,
        gripper_path=path,
        timestamps=np.linspace(0.0, duration, num_points),
    )


def synthetic_demo_corpus(
    L,
    elbow_angles_deg=CORPUS_ELBOW_ANGLES,
    seed=0,
    r=DEFAULT_ARC_RADIUS,
    noise_std=0.001,
    strategy=None,
):
    """
    One demonstration per elbow angle, outer strategy for small angles and inner
    strategy otherwise unless ``strategy`` forces one of them.

    :param LimbLengths L:
    :param Iterable[float] elbow_angles_deg:
    :param int seed:
    :param float r:
    :param float noise_std:
    :param Strategy|None strategy:
    :rtype: list[DemonstrationRecord]
    """
    rng = np.random.default_rng(seed)
    demos = []
    for angle in elbow_angles_deg:
        psi = math.radians(angle)
        if strategy is not None:
            chosen = strategy
        else:
            chosen = Strategy.Outer if psi < OUTER_STRATEGY_LIMIT else Strategy.Inner
        demos.append(
            synthesize_demonstration(
                posture_from_elbow_angle(psi, L),
                chosen,
                r=r,
                noise_std=noise_std,
                rng=rng,
            )
        )
    return demos
