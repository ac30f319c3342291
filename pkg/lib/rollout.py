"""
Closed loop dressing rollouts against a simulated human.

Every tick the simulated human moves the hand under the stretch controller, the
estimator follows the measured hand, the progress scalar advances and the policy
places the gripper on the progress curve of the ESTIMATED posture. The true posture is
only used to measure errors and to decide the outcome.
"""

__all__ = [
    "Mode",
    "Outcome",
    "SuccessThresholds",
    "RolloutConfig",
    "RolloutResult",
    "run_rollout",
    "run_rollouts",
    "evaluate_success",
    "estimation_errors",
    "evaluate_estimation",
]

import dataclasses
import enum
import logging
import math

import numpy as np

from dressing_core.lib.dressing import (
    DEFAULT_ARC_RADIUS,
    DressingCoord,
    Segment,
    armscye_far_point,
    build_progress_curve,
    distance_to_arm,
    from_dressing,
    inner_side_angle,
    locate_on_curve,
    project_to_arm_plane,
)
from dressing_core.lib.errors import DressingError
from dressing_core.lib.estimation import (
    STRETCH_WEIGHTS,
    EstimatorWeights,
    PostureEstimate,
    hand_in_dressing_frame,
    hand_in_interactive_frame,
    step_estimate,
)
from dressing_core.lib.geometry import (
    ArmPosture,
    LimbLengths,
    RigidTransform,
    arm_plane_normal,
    elbow_angle,
    forward_kinematics,
    joint_angles_from_posture,
)
from dressing_core.lib.policy import (
    DressingPolicy,
    ProgressDynamics,
    generate_waypoint,
    step_progress,
)
from dressing_core.lib.stretch import (
    DEFAULT_DT,
    STRETCH_LEAD,
    HumanResponseModel,
    SimulatedHuman,
    StiffnessConfig,
)

DEFAULT_MAX_STEPS = 300
DEFAULT_START_DISTANCE = 0.06


class Mode(enum.Enum):
    Compliant = "compliant"
    NonCompliant = "noncompliant"
    StaticArm = "static"


class Outcome(enum.Enum):
    Success = "Success"
    CollisionFailure = "CollisionFailure"
    NoConvergence = "NoConvergence"


@dataclasses.dataclass(frozen=True)
class SuccessThresholds:
    """
    :param float shoulder_radius: final gripper distance to the shoulder
    :param float collision_floor: minimal clearance between garment and arm
    :param float|None armscye_diameter: diameter of the rigid armhole ring, None
        disables the ring checks
    :param float ring_slack: how much further the far side of the ring may travel
        than the gripper while passing the elbow before the garment gets stuck
    """

    shoulder_radius: float = 0.06
    collision_floor: float = 0.015
    armscye_diameter: float = 0.12
    ring_slack: float = 0.19


@dataclasses.dataclass(frozen=True)
class RolloutConfig:
    """
    :param RigidTransform robot_base: actual interactive robot base in the dressing
        frame, moves the reported hand
    :param RigidTransform|None calibration: interactive robot base as known to the
        dressing robot, maps the reported hand back, exact if None
    """

    initial_posture: ArmPosture
    limb_lengths: LimbLengths
    human: HumanResponseModel = HumanResponseModel()
    stiffness: StiffnessConfig = StiffnessConfig()
    weights: EstimatorWeights = STRETCH_WEIGHTS
    dynamics: ProgressDynamics = ProgressDynamics()
    policy_files: tuple = ()
    arc_radius: float = DEFAULT_ARC_RADIUS
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    mode: Mode = Mode.Compliant
    dt: float = DEFAULT_DT
    lead: float = STRETCH_LEAD
    robot_base: RigidTransform = RigidTransform.identity()
    calibration: RigidTransform = None
    start_l: float = DEFAULT_START_DISTANCE
    start_theta: float = None
    thresholds: SuccessThresholds = SuccessThresholds()

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive, got %r" % self.max_steps)
        if not self.arc_radius > 0:
            raise ValueError("arc radius must be positive, got %r" % self.arc_radius)
        if not self.start_l >= 0:
            raise ValueError("start distance must be non-negative")
        assert isinstance(self.mode, Mode), "mode must be a Mode, got %r" % self.mode
        object.__setattr__(self, "policy_files", tuple(self.policy_files))

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


@dataclasses.dataclass(frozen=True, eq=False)
class RolloutResult:
    """
    All traces hold one entry per tick, the initial state included.
    """

    true_postures: list
    estimated_postures: list
    gripper_path: np.ndarray
    s_trace: np.ndarray
    elbow_error_trace: np.ndarray
    l_true_trace: np.ndarray
    ring_clearance_trace: np.ndarray
    ring_drag_trace: np.ndarray
    psi_true_trace: np.ndarray
    psi_est_trace: np.ndarray
    extrapolated: np.ndarray
    outcome: Outcome
    outcome_detail: str = ""

    def __len__(self):
        return len(self.s_trace)

    def metrics(self):
        """
        :return: summary values of the rollout, in a stable order
        :rtype: dict[str, str|int|float]
        """
        final_distance = float(
            np.linalg.norm(self.gripper_path[-1] - self.true_postures[-1].p_s)
        )
        return {
            "outcome": self.outcome.value,
            "steps": len(self) - 1,
            "final_s": float(self.s_trace[-1]),
            "final_shoulder_distance": final_distance,
            "min_l_true": float(self.l_true_trace.min()),
            "min_ring_clearance": float(self.ring_clearance_trace.min()),
            "max_ring_drag": float(self.ring_drag_trace.max()),
            "max_elbow_error": float(self.elbow_error_trace.max()),
            "mean_elbow_error": float(self.elbow_error_trace.mean()),
            "extrapolated_steps": int(self.extrapolated.sum()),
        }


def _human_model(cfg):
    if cfg.mode == Mode.Compliant:
        return cfg.human.replace(deviation_bias=np.zeros(3))
    return cfg.human


def _measured_hand(P_true, cfg):
    # the interactive robot reports its end effector in its own base frame
    reported = hand_in_interactive_frame(P_true.p_h, cfg.robot_base)
    calibration = cfg.robot_base if cfg.calibration is None else cfg.calibration
    return hand_in_dressing_frame(reported, calibration)


def _ring_state(x, P, r, v_prev, diameter):
    """
    :return: clearance of the far side of the ring to the arm, the far point, whether
        the gripper passes the elbow and the arm plane normal
    :rtype: (float, np.ndarray|None, bool, np.ndarray)
    """
    if diameter is None:
        return math.inf, None, False, v_prev
    v = arm_plane_normal(P, previous=v_prev)
    curve = build_progress_curve(P, r)
    far = armscye_far_point(x, P, curve, v, diameter)
    segment = locate_on_curve(project_to_arm_plane(x, P, v), curve)[0]
    return distance_to_arm(far, P), far, segment == Segment.Elbow, v


def evaluate_success(
    s_trace,
    gripper_path,
    l_true_trace,
    P_true_final,
    thresholds=SuccessThresholds(),
    s_target=1.0,
    ring_clearance_trace=(),
    ring_drag_trace=(),
):
    """
    :param Sequence[float] s_trace:
    :param np.ndarray gripper_path: N x 3
    :param Sequence[float] l_true_trace: gripper distance to the true arm per step
    :param ArmPosture P_true_final:
    :param SuccessThresholds thresholds:
    :param float s_target:
    :param Sequence[float] ring_clearance_trace: armhole ring distance to the true arm
    :param Sequence[float] ring_drag_trace: accumulated extra travel of the far side
        of the ring around the elbow
    :return: outcome and a human readable reason
    :rtype: (Outcome, str)
    """
    assert len(s_trace) > 0, "need a non-empty trace"
    floor = thresholds.collision_floor
    l_true = np.asarray(l_true_trace, dtype=np.float64)
    if len(l_true) and l_true.min() < floor:
        step = int(np.argmin(l_true))
        return (
            Outcome.CollisionFailure,
            "gripper %.4f m from the arm at step %d" % (l_true[step], step),
        )
    ring = np.asarray(ring_clearance_trace, dtype=np.float64)
    if len(ring) and ring.min() < floor:
        step = int(np.argmin(ring))
        return (
            Outcome.CollisionFailure,
            "armhole %.4f m from the arm at step %d" % (ring[step], step),
        )
    drag = np.asarray(ring_drag_trace, dtype=np.float64)
    if len(drag) and drag.max() > thresholds.ring_slack:
        step = int(np.argmax(drag > thresholds.ring_slack))
        return (
            Outcome.CollisionFailure,
            "armhole stuck at the elbow at step %d, s=%.3f, drag %.4f m"
            % (step, s_trace[step], drag[step]),
        )
    if s_trace[-1] < s_target:
        return Outcome.NoConvergence, "stopped at s=%.3f" % s_trace[-1]
    distance = float(np.linalg.norm(np.asarray(gripper_path[-1]) - P_true_final.p_s))
    if distance > thresholds.shoulder_radius:
        return Outcome.NoConvergence, "gripper ends %.4f m from the shoulder" % distance
    return Outcome.Success, "gripper ends %.4f m from the shoulder" % distance


def _load_policy(cfg):
    from dressing_core.lib.formats import read_gmm

    assert len(cfg.policy_files) == 2, "need one model file for l and one for theta"
    path_l, path_theta = cfg.policy_files
    return DressingPolicy(read_gmm(path_l), read_gmm(path_theta), cfg.arc_radius)


def run_rollout(cfg, policy=None):
    """
    :param RolloutConfig cfg:
    :param DressingPolicy|None policy: loaded from ``cfg.policy_files`` if not given
    :rtype: RolloutResult
    """
    if policy is None:
        policy = _load_policy(cfg)
    L = cfg.limb_lengths
    r = cfg.arc_radius
    diameter = cfg.thresholds.armscye_diameter
    sim = SimulatedHuman(
        cfg.initial_posture,
        L,
        cfg.stiffness,
        _human_model(cfg),
        dt=cfg.dt,
        seed=cfg.seed,
        lead=cfg.lead,
    )
    estimate = PostureEstimate(joint_angles_from_posture(cfg.initial_posture, L), 0)

    P_true = cfg.initial_posture
    P_est = forward_kinematics(estimate.q_hat, L)
    v = arm_plane_normal(P_est)
    curve = build_progress_curve(P_est, r)
    theta0 = cfg.start_theta
    if theta0 is None:
        theta0 = inner_side_angle(curve, v)
    start_ref = (cfg.start_l, theta0)
    s = 0.0
    gripper = from_dressing(DressingCoord(s, cfg.start_l, theta0), P_est, curve, v)
    v_true = arm_plane_normal(P_true)

    trace = {
        "true": [],
        "est": [],
        "gripper": [],
        "s": [],
        "ring": [],
        "drag": [],
        "extrapolated": [],
    }
    ring = {"far": None, "elbow": False}

    def record(extrapolated):
        clearance, far, elbow, v_ring = _ring_state(
            gripper, P_true, r, v_true, diameter
        )
        drag = trace["drag"][-1] if trace["drag"] else 0.0
        if ring["far"] is not None and (elbow or ring["elbow"]):
            # the far side has to go around the outside of the elbow
            drag += float(np.linalg.norm(far - ring["far"]))
            drag -= float(np.linalg.norm(gripper - trace["gripper"][-1]))
        ring.update(far=far, elbow=elbow)
        trace["true"].append(P_true)
        trace["est"].append(P_est)
        trace["gripper"].append(gripper)
        trace["s"].append(s)
        trace["ring"].append(clearance)
        trace["drag"].append(drag)
        trace["extrapolated"].append(extrapolated)
        return v_ring

    detail = None
    try:
        v_true = record(False)
        for _ in range(cfg.max_steps):
            if s >= cfg.dynamics.s_target:
                break
            if cfg.mode != Mode.StaticArm:
                P_true = sim.step()
            estimate = step_estimate(
                estimate, _measured_hand(P_true, cfg), L, cfg.weights
            )
            P_est = forward_kinematics(estimate.q_hat, L)
            v = arm_plane_normal(P_est, previous=v)
            curve = build_progress_curve(P_est, r)
            s = step_progress(s, cfg.dynamics)
            waypoint = generate_waypoint(
                policy.gmm_l,
                policy.gmm_theta,
                s,
                elbow_angle(P_est),
                start_ref,
                P_est,
                curve,
                v,
            )
            gripper = waypoint.point
            v_true = record(waypoint.extrapolated)
    except DressingError as e:
        logging.warning("rollout aborted: %s: %s" % (type(e).__name__, e))
        detail = "%s: %s" % (type(e).__name__, e)

    true_postures = trace["true"]
    estimated_postures = trace["est"]
    gripper_path = np.array(trace["gripper"])
    l_true = np.array(
        [distance_to_arm(x, P) for x, P in zip(gripper_path, true_postures)]
    )
    if detail is None:
        outcome, detail = evaluate_success(
            trace["s"],
            gripper_path,
            l_true,
            true_postures[-1],
            cfg.thresholds,
            cfg.dynamics.s_target,
            trace["ring"],
            trace["drag"],
        )
    else:
        outcome = Outcome.NoConvergence
    logging.info(
        "rollout finished after %d steps: %s (%s)"
        % (len(trace["s"]) - 1, outcome.value, detail)
    )
    return RolloutResult(
        true_postures=true_postures,
        estimated_postures=estimated_postures,
        gripper_path=gripper_path,
        s_trace=np.array(trace["s"]),
        elbow_error_trace=np.array(
            [
                np.linalg.norm(a.p_e - b.p_e)
                for a, b in zip(true_postures, estimated_postures)
            ]
        ),
        l_true_trace=l_true,
        ring_clearance_trace=np.array(trace["ring"]),
        ring_drag_trace=np.array(trace["drag"]),
        psi_true_trace=np.array([elbow_angle(P) for P in true_postures]),
        psi_est_trace=np.array([elbow_angle(P) for P in estimated_postures]),
        extrapolated=np.array(trace["extrapolated"], dtype=bool),
        outcome=outcome,
        outcome_detail=detail,
    )


def run_rollouts(configs, policy=None):
    """
    Rollouts sharing one policy, e.g. a seed sweep of one configuration.

    :param Iterable[RolloutConfig] configs:
    :param DressingPolicy|None policy: loaded from the first configuration if not given
    :rtype: list[RolloutResult]
    """
    configs = list(configs)
    if policy is None and configs:
        policy = _load_policy(configs[0])
    results = [run_rollout(cfg, policy) for cfg in configs]
    successes = sum(result.outcome == Outcome.Success for result in results)
    logging.info("%d of %d rollouts succeeded" % (successes, len(results)))
    return results


def estimation_errors(cfg, steps=None):
    """
    Elbow error of the estimator while the simulated human is stretched, no dressing.

    :param RolloutConfig cfg:
    :param int|None steps: defaults to ``cfg.max_steps``
    :return: elbow position error per tick, initial state included
    :rtype: np.ndarray
    """
    steps = cfg.max_steps if steps is None else steps
    L = cfg.limb_lengths
    sim = SimulatedHuman(
        cfg.initial_posture,
        L,
        cfg.stiffness,
        _human_model(cfg),
        dt=cfg.dt,
        seed=cfg.seed,
        lead=cfg.lead,
    )
    estimate = PostureEstimate(joint_angles_from_posture(cfg.initial_posture, L), 0)
    P_true = cfg.initial_posture
    errors = [np.linalg.norm(P_true.p_e - forward_kinematics(estimate.q_hat, L).p_e)]
    for _ in range(steps):
        if cfg.mode != Mode.StaticArm:
            P_true = sim.step()
        estimate = step_estimate(
            estimate, _measured_hand(P_true, cfg), L, cfg.weights
        )
        errors.append(
            np.linalg.norm(P_true.p_e - forward_kinematics(estimate.q_hat, L).p_e)
        )
    return np.array(errors)


def evaluate_estimation(configs):
    """
    :param Sequence[RolloutConfig] configs:
    :return: maximum and mean elbow error per case in meters
    :rtype: list[(float, float)]
    """
    assert len(configs) > 0, "need at least one case"
    results = []
    for index, cfg in enumerate(configs):
        errors = estimation_errors(cfg)
        results.append((float(errors.max()), float(errors.mean())))
        logging.info(
            "case %d: max elbow error %.1f mm, mean %.1f mm"
            % (index, 1000 * results[-1][0], 1000 * results[-1][1])
        )
    return results
