"""
Command line interface.

    dressing-core fit-weights ANGLES -o WEIGHTS
    dressing-core estimate HAND_PATH WEIGHTS -o POSTURES
    dressing-core transform DEMO [DEMO ...] -o SAMPLES [--arc-radius R]
    dressing-core untransform SAMPLES -o DEMO [--demo INDEX]
    dressing-core train SAMPLES --out-l MODEL --out-theta MODEL [--k K | --k-range A..B]
    dressing-core calibrate CORRESPONDENCES -o CALIBRATION
    dressing-core rollout CONFIG --trace TRACE --metrics METRICS [--seed N] [--mode M]
        [--calibration CALIBRATION]
    dressing-core classify DEMO [--arc-radius R]

Exit codes: 0 ok, 2 unreadable input, 3 violated precondition, 4 numerical failure.
"""

__all__ = ["main", "build_parser"]

import argparse
import logging
import sys

from dressing_core.lib import formats
from dressing_core.lib.dressing import (
    DEFAULT_ARC_RADIUS,
    build_progress_curve,
    classify_strategy,
)
from dressing_core.lib.errors import DressingError, FormatError
from dressing_core.lib.estimation import compute_weights, track
from dressing_core.lib.geometry import (
    arm_plane_normal,
    estimate_rigid_transform,
    rigid_transform_residuals,
)
from dressing_core.lib.policy import (
    DEFAULT_COMPONENTS,
    DemonstrationRecord,
    start_reference,
    train_policy,
    transform_demos,
    untransform_samples,
)
from dressing_core.lib.rollout import Mode, run_rollout


def parse_k_range(text):
    """
    :param str text: "A..B" or a comma separated list
    :rtype: list[int]
    """
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            return list(range(int(first), int(last) + 1))
        return [int(k) for k in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("invalid component range %r" % text)


def cmd_fit_weights(args):
    angles, _ = formats.read_joint_angles(args.angles)
    weights = compute_weights(angles, regularize=args.regularize)
    formats.write_weights(args.out, weights)
    print(" ".join("%.6g" % w for w in weights.q_diag))


def cmd_estimate(args):
    hand_path, L, initial, timestamps = formats.read_hand_path(args.hand_path)
    weights = formats.read_weights(args.weights)
    postures = track(initial, hand_path, L, weights)
    formats.write_posture_trace(args.out, postures, timestamps)
    logging.info("estimated %d postures" % len(postures))


def cmd_transform(args):
    demos = [formats.read_demonstration(path) for path in args.demos]
    samples = transform_demos(demos, args.arc_radius)
    references = [(d.posture, start_reference(d, args.arc_radius)) for d in demos]
    formats.write_training_samples(args.out, samples, references, args.arc_radius)


def cmd_untransform(args):
    samples, references, arc_radius = formats.read_training_samples(args.samples)
    if not 0 <= args.demo < len(references):
        raise FormatError(
            "%s: no demonstration %d, file holds %d"
            % (args.samples, args.demo, len(references))
        )
    posture, start = references[args.demo]
    selected = [x for x in samples if x.demo == args.demo]
    path = untransform_samples(selected, posture, start, arc_radius)
    formats.write_demonstration(
        args.out, DemonstrationRecord(posture, path, [x.t for x in selected])
    )


def cmd_train(args):
    samples, _, arc_radius = formats.read_training_samples(args.samples)
    policy = train_policy(
        samples,
        num_components=args.k,
        k_range=args.k_range,
        seed=args.seed,
        r=arc_radius,
    )
    formats.write_gmm(args.out_l, policy.gmm_l)
    formats.write_gmm(args.out_theta, policy.gmm_theta)
    print("%d %d" % (policy.gmm_l.K, policy.gmm_theta.K))


def cmd_calibrate(args):
    points_interactive, points_dressing = formats.read_correspondences(
        args.correspondences
    )
    T = estimate_rigid_transform(points_interactive, points_dressing)
    formats.write_calibration(args.out, T)
    residuals = rigid_transform_residuals(T, points_interactive, points_dressing)
    print("%.6g" % residuals.max())


def cmd_rollout(args):
    cfg = formats.read_rollout_config(args.config)
    if args.calibration is not None:
        cfg = cfg.replace(calibration=formats.read_calibration(args.calibration))
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.mode is not None:
        cfg = cfg.replace(mode=Mode(args.mode))
    result = run_rollout(cfg)
    formats.write_rollout_trace(
        args.trace, result, seed=cfg.seed, mode=cfg.mode.value
    )
    formats.write_metrics(args.metrics, result.metrics())
    print("outcome=%s" % result.outcome.value)


def cmd_classify(args):
    demo = formats.read_demonstration(args.demo)
    P = demo.posture
    strategy, distance = classify_strategy(
        demo.gripper_path,
        P,
        build_progress_curve(P, args.arc_radius),
        arm_plane_normal(P),
    )
    print("%s %+.3f" % (strategy.value, distance))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dressing-core", description="bimanual robot dressing tools"
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-weights", help="estimator weights from joint angles")
    p.add_argument("angles")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--regularize", action="store_true")
    p.set_defaults(func=cmd_fit_weights)

    p = sub.add_parser("estimate", help="track the arm posture along a hand path")
    p.add_argument("hand_path")
    p.add_argument("weights")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("transform", help="demonstrations to training samples")
    p.add_argument("demos", nargs="+")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--arc-radius", type=float, default=DEFAULT_ARC_RADIUS)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("untransform", help="training samples back to a demonstration")
    p.add_argument("samples")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--demo", type=int, default=0)
    p.set_defaults(func=cmd_untransform)

    p = sub.add_parser("train", help="train the two policy mixtures")
    p.add_argument("samples")
    p.add_argument("--out-l", required=True)
    p.add_argument("--out-theta", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--k", type=int, default=DEFAULT_COMPONENTS)
    group.add_argument("--k-range", type=parse_k_range, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="interactive robot base from point pairs")
    p.add_argument("correspondences")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("rollout", help="closed loop dressing simulation")
    p.add_argument("config")
    p.add_argument("--trace", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    p.add_argument("--calibration", default=None)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("classify", help="inner or outer dressing strategy of a demo")
    p.add_argument("demo")
    p.add_argument("--arc-radius", type=float, default=DEFAULT_ARC_RADIUS)
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None):
    """
    :param list[str]|None argv: defaults to the process arguments
    :return: exit code
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        args.func(args)
    except DressingError as e:
        logging.error("%s: %s" % (type(e).__name__, e))
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
