import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from dressing_core.lib.dressing import Strategy, build_progress_curve, distance_to_arm
from dressing_core.lib.geometry import (
    ArmPosture,
    RigidTransform,
    posture_from_elbow_angle,
)
from dressing_core.lib.policy import (
    ProgressDynamics,
    TrainingSample,
    synthetic_demo_corpus,
    train_policy,
    transform_demos,
)
from dressing_core.lib.rollout import (
    Mode,
    Outcome,
    RolloutConfig,
    evaluate_estimation,
    evaluate_success,
    estimation_errors,
    run_rollout,
    run_rollouts,
)
from dressing_core.lib.stretch import HumanResponseModel


@pytest.fixture(scope="module")
def closer_policy():
    """
    Moves the gripper 2 cm closer to the arm than at the start, everywhere.
    """
    samples = [
        TrainingSample(s, math.radians(psi), -0.02, 0.0)
        for s in np.linspace(0.0, 1.0, 11)
        for psi in np.linspace(60.0, 170.0, 12)
    ]
    return train_policy(samples, num_components=1, seed=0)


def _config(mannequin, degrees, **kwargs):
    return RolloutConfig(
        initial_posture=posture_from_elbow_angle(math.radians(degrees), mannequin),
        limb_lengths=mannequin,
        **kwargs,
    )


def test_evaluate_success():
    P = ArmPosture.from_points([0.0, 0.0, -0.253], [0.264, 0.0, -0.253])
    path = np.array([P.p_h + [0.0, 0.0, 0.06], [0.03, 0.0, 0.0]])
    outcome, _ = evaluate_success([0.5, 1.0], path, [0.06, 0.03], P)
    assert outcome == Outcome.Success

    outcome, detail = evaluate_success([0.5, 1.0], path, [0.06, 0.01], P)
    assert outcome == Outcome.CollisionFailure
    assert "step 1" in detail

    outcome, detail = evaluate_success(
        [0.5, 1.0], path, [0.06, 0.03], P, ring_clearance_trace=[0.05, 0.0]
    )
    assert outcome == Outcome.CollisionFailure
    assert "armhole" in detail

    outcome, detail = evaluate_success(
        [0.5, 1.0], path, [0.06, 0.03], P, ring_drag_trace=[0.0, 0.2]
    )
    assert outcome == Outcome.CollisionFailure
    assert "stuck at the elbow at step 1" in detail
    outcome, _ = evaluate_success(
        [0.5, 1.0], path, [0.06, 0.03], P, ring_drag_trace=[0.0, 0.18]
    )
    assert outcome == Outcome.Success

    outcome, _ = evaluate_success([0.5, 0.9], path, [0.06, 0.03], P)
    assert outcome == Outcome.NoConvergence

    far = np.array([path[0], [0.1, 0.0, 0.0]])
    outcome, _ = evaluate_success([0.5, 1.0], far, [0.06, 0.03], P)
    assert outcome == Outcome.NoConvergence


def test_config_validation(mannequin):
    with pytest.raises(ValueError):
        _config(mannequin, 90, max_steps=0)
    with pytest.raises(ValueError):
        _config(mannequin, 90, arc_radius=0.0)
    with pytest.raises(ValueError):
        _config(mannequin, 90, start_l=-0.01)
    with pytest.raises(AssertionError):
        _config(mannequin, 90, mode="static")
    cfg = _config(mannequin, 90, policy_files=["a.json", "b.json"])
    assert cfg.policy_files == ("a.json", "b.json")
    assert cfg.replace(seed=3).seed == 3


def test_static_arm_success(mannequin, closer_policy):
    cfg = _config(mannequin, 100, mode=Mode.StaticArm)
    result = run_rollout(cfg, closer_policy)
    assert result.outcome == Outcome.Success
    assert len(result) == 101
    assert result.s_trace[-1] == 1.0
    assert np.all(np.diff(result.s_trace) > 0)
    assert np.linalg.norm(result.gripper_path[-1]) == pytest.approx(0.04, abs=1e-9)
    np.testing.assert_allclose(result.elbow_error_trace, 0.0, atol=1e-12)
    assert result.true_postures[-1] is cfg.initial_posture


def test_compliant_arm_success(mannequin, closer_policy):
    cfg = _config(mannequin, 100, dynamics=ProgressDynamics(c=0.04))
    result = run_rollout(cfg, closer_policy)
    assert result.outcome == Outcome.Success, result.outcome_detail
    assert len(result) == 26
    assert result.psi_true_trace[-1] > result.psi_true_trace[0]
    assert result.elbow_error_trace.max() < 1e-3
    for P in result.true_postures:
        assert np.linalg.norm(P.p_h - P.p_e) == pytest.approx(mannequin.forearm)
    assert result.l_true_trace.min() > cfg.thresholds.collision_floor
    expected = [
        distance_to_arm(x, P)
        for x, P in zip(result.gripper_path, result.true_postures)
    ]
    np.testing.assert_allclose(result.l_true_trace, expected)


def test_learned_policy_dresses_a_bent_arm(mannequin, corpus_policy):
    result = run_rollout(_config(mannequin, 90, mode=Mode.StaticArm), corpus_policy)
    assert result.outcome == Outcome.Success, result.outcome_detail
    assert len(result) == 101

@pytest.fixture(scope="module")
def inner_policy(mannequin):
    """
    Trained on demonstrations that pass the elbow on the inner side at every angle.
    """
    demos = synthetic_demo_corpus(mannequin, seed=0, strategy=Strategy.Inner)
    return train_policy(transform_demos(demos), num_components=8, seed=0)


def test_inner_strategy_gets_stuck_at_a_bent_elbow(mannequin, inner_policy):
    cfg = _config(mannequin, 80, mode=Mode.StaticArm)
    result = run_rollout(cfg, inner_policy)
    assert result.outcome == Outcome.CollisionFailure
    assert "stuck at the elbow" in result.outcome_detail
    assert result.l_true_trace.min() > cfg.thresholds.collision_floor
    assert result.ring_clearance_trace.min() > cfg.thresholds.collision_floor

    curve = build_progress_curve(cfg.initial_posture, cfg.arc_radius)
    s_he = curve.d1 / curve.total_length
    s_es = (curve.d1 + curve.arc_length) / curve.total_length
    stuck = int(np.argmax(result.ring_drag_trace > cfg.thresholds.ring_slack))
    assert stuck > 1
    assert s_he < result.s_trace[stuck] <= s_es + 0.03
    np.testing.assert_array_equal(
        result.ring_drag_trace[result.s_trace < s_he - 0.02], 0.0
    )


def test_outer_strategy_passes_a_bent_elbow(mannequin, corpus_policy):
    result = run_rollout(_config(mannequin, 80, mode=Mode.StaticArm), corpus_policy)
    assert result.outcome == Outcome.Success, result.outcome_detail
    assert result.ring_drag_trace.max() < 0.01
    assert result.ring_drag_trace[-1] < 0.0


def test_inner_strategy_passes_an_open_elbow(mannequin, inner_policy):
    result = run_rollout(_config(mannequin, 150, mode=Mode.StaticArm), inner_policy)
    assert result.outcome == Outcome.Success, result.outcome_detail
    assert 0.0 < result.ring_drag_trace.max() < 0.19


def test_learned_policy_dresses_a_stretched_arm(mannequin, corpus_policy):
    cfg = _config(mannequin, 120)
    result = run_rollout(cfg, corpus_policy)
    assert result.outcome == Outcome.Success, result.outcome_detail
    assert len(result) == 101
    assert result.psi_true_trace[-1] > math.radians(160)
    assert result.elbow_error_trace.max() < 1e-3
    assert np.linalg.norm(result.gripper_path[-1]) < cfg.thresholds.shoulder_radius


def test_exact_calibration_is_transparent(mannequin, closer_policy):
    base = RigidTransform(
        Rotation.from_euler("z", 30, degrees=True).as_matrix(), [0.5, 0.0, 0.0]
    )
    cfg = _config(mannequin, 100, dynamics=ProgressDynamics(c=0.04))
    reference = run_rollout(cfg, closer_policy)
    moved = run_rollout(cfg.replace(robot_base=base), closer_policy)
    assert moved.outcome == reference.outcome
    np.testing.assert_allclose(moved.gripper_path, reference.gripper_path, atol=1e-9)


def test_miscalibration_changes_the_rollout(mannequin, closer_policy):
    cfg = _config(mannequin, 100, mode=Mode.StaticArm)
    reference = run_rollout(cfg, closer_policy)
    rotated = RigidTransform(
        Rotation.from_euler("z", 10, degrees=True).as_matrix(), np.zeros(3)
    )
    result = run_rollout(cfg.replace(calibration=rotated), closer_policy)
    assert len(result) > 1
    n = min(len(result), len(reference))
    difference = np.linalg.norm(
        result.gripper_path[:n] - reference.gripper_path[:n], axis=1
    )
    assert difference.max() > 0.01

    P0 = cfg.initial_posture
    shifted = RigidTransform(np.eye(3), 0.3 * P0.p_h / np.linalg.norm(P0.p_h))
    result = run_rollout(cfg.replace(calibration=shifted), closer_policy)
    assert result.outcome == Outcome.NoConvergence
    assert "UnreachableHand" in result.outcome_detail
    assert len(result) == 1


def test_run_rollouts_over_seeds(mannequin, closer_policy):
    human = HumanResponseModel(noise_std=0.0005)
    cfg = _config(
        mannequin,
        100,
        mode=Mode.NonCompliant,
        human=human,
        dynamics=ProgressDynamics(c=0.05),
    )
    results = run_rollouts([cfg.replace(seed=seed) for seed in range(3)], closer_policy)
    assert len(results) == 3
    single = run_rollout(cfg.replace(seed=1), closer_policy)
    np.testing.assert_array_equal(results[1].gripper_path, single.gripper_path)
    assert not np.array_equal(results[0].gripper_path, results[1].gripper_path)
    assert run_rollouts([]) == []


def test_collision_at_the_start(mannequin, closer_policy):
    result = run_rollout(
        _config(mannequin, 100, mode=Mode.StaticArm, start_l=0.0), closer_policy
    )
    assert result.outcome == Outcome.CollisionFailure
    assert "step 0" in result.outcome_detail
    assert result.s_trace[-1] == 1.0


def test_step_limit(mannequin, closer_policy):
    result = run_rollout(
        _config(mannequin, 100, mode=Mode.StaticArm, max_steps=1), closer_policy
    )
    assert result.outcome == Outcome.NoConvergence
    assert len(result) == 2


def test_rollout_is_deterministic(mannequin, closer_policy):
    human = HumanResponseModel(noise_std=0.0005, swivel_rate=0.005)
    cfg = _config(
        mannequin,
        100,
        mode=Mode.NonCompliant,
        human=human,
        dynamics=ProgressDynamics(c=0.05),
        seed=11,
    )
    first = run_rollout(cfg, closer_policy)
    second = run_rollout(cfg, closer_policy)
    np.testing.assert_array_equal(first.gripper_path, second.gripper_path)
    np.testing.assert_array_equal(first.elbow_error_trace, second.elbow_error_trace)
    assert first.outcome == second.outcome
    assert first.metrics() == second.metrics()


def test_metrics(mannequin, closer_policy):
    result = run_rollout(_config(mannequin, 100, mode=Mode.StaticArm), closer_policy)
    metrics = result.metrics()
    assert list(metrics) == [
        "outcome",
        "steps",
        "final_s",
        "final_shoulder_distance",
        "min_l_true",
        "min_ring_clearance",
        "max_ring_drag",
        "max_elbow_error",
        "mean_elbow_error",
        "extrapolated_steps",
    ]
    assert metrics["outcome"] == "Success"
    assert metrics["steps"] == 100
    assert metrics["final_s"] == 1.0


def test_estimation_of_a_model_consistent_arm(mannequin):
    cfg = _config(mannequin, 90, max_steps=60)
    errors = estimation_errors(cfg)
    assert errors.shape == (61,)
    assert errors.max() < 1e-3
    np.testing.assert_allclose(estimation_errors(cfg, steps=0), [0.0], atol=1e-12)


@pytest.mark.parametrize(
    "human",
    [
        HumanResponseModel(swivel_rate=0.004, deviation_bias=(0.0, 0.002, 0.0)),
        HumanResponseModel(swivel_rate=0.006),
        HumanResponseModel(swivel_rate=0.008, noise_std=0.0003),
        HumanResponseModel(swivel_rate=0.01, noise_std=0.0005),
    ],
)
def test_estimation_of_a_swiveling_arm(mannequin, human):
    cfg = _config(mannequin, 90, mode=Mode.NonCompliant, human=human, max_steps=120)
    ((max_error, mean_error),) = evaluate_estimation([cfg])
    assert 0.001 < max_error <= 0.035
    assert mean_error <= 0.025
    assert mean_error <= max_error


def test_estimation_error_grows_along_the_stretch(mannequin):
    human = HumanResponseModel(swivel_rate=0.005, noise_std=0.0005)
    first, last = [], []
    for seed in range(100):
        cfg = _config(mannequin, 90, mode=Mode.NonCompliant, human=human, seed=seed)
        errors = estimation_errors(cfg, steps=30)
        first.append(errors[1])
        last.append(errors[-1])
    assert np.median(last) >= np.median(first)
