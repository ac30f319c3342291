"""
Text file formats.

Tables are comma separated numbers preceded by a single header comment holding a JSON
object with the schema name, version, units and column names:

    # {"columns": ["t", "x", "y", "z"], "schema": "hand_path", "version": 1, ...}
    0,0.1,0.2,-0.3

Numbers are written with 17 significant digits so that every float survives a write
and read unchanged. Mixture models and rollout configurations are JSON documents.
All writes go through a temporary file that is renamed onto the target.
"""

__all__ = [
    "SCHEMA_VERSION",
    "write_table",
    "read_table",
    "write_joint_angles",
    "read_joint_angles",
    "write_weights",
    "read_weights",
    "write_hand_path",
    "read_hand_path",
    "write_posture_trace",
    "read_posture_trace",
    "write_demonstration",
    "read_demonstration",
    "write_training_samples",
    "read_training_samples",
    "write_calibration",
    "read_calibration",
    "write_correspondences",
    "read_correspondences",
    "write_gmm",
    "read_gmm",
    "write_rollout_config",
    "read_rollout_config",
    "write_rollout_trace",
    "read_rollout_trace",
    "write_metrics",
    "read_metrics",
]

import json
import os

import numpy as np

from dressing_core.lib.errors import FormatError
from dressing_core.lib.estimation import EstimatorWeights
from dressing_core.lib.geometry import (
    ARM_LENGTHS,
    ArmPosture,
    JointAngles,
    LimbLengths,
    RigidTransform,
    forward_kinematics,
    posture_from_elbow_angle,
)
from dressing_core.lib.gmm import GaussianMixture
from dressing_core.lib.policy import (
    DemonstrationRecord,
    ProgressDynamics,
    TrainingSample,
)
from dressing_core.lib.rollout import Mode, RolloutConfig, SuccessThresholds
from dressing_core.lib.stretch import HumanResponseModel, StiffnessConfig
from dressing_core.util import atomic_write, uncached_path, uopen

SCHEMA_VERSION = 1
NUMBER_FORMAT = "%.17g"
UNITS = {"length": "m", "time": "s", "angle": "rad"}

POSTURE_COLUMNS = ["s_x", "s_y", "s_z", "e_x", "e_y", "e_z", "h_x", "h_y", "h_z"]
JOINT_COLUMNS = ["alpha", "beta", "phi", "gamma"]


def _posture_to_list(P):
    return P.as_array().tolist()


def _posture_from_list(rows, where):
    try:
        points = np.array(rows, dtype=np.float64)
        if points.shape != (3, 3):
            raise ValueError("posture needs shoulder, elbow and hand points")
        return ArmPosture(points[0], points[1], points[2])
    except (TypeError, ValueError) as e:
        raise FormatError("%s: invalid posture: %s" % (where, e))


def _posture_row(P):
    return np.concatenate([P.p_s, P.p_e, P.p_h])


def _posture_from_row(row):
    return ArmPosture(row[0:3], row[3:6], row[6:9])


def _timestamps(timestamps, n):
    if timestamps is None:
        return np.arange(n, dtype=np.float64)
    return np.asarray(timestamps, dtype=np.float64)


def write_table(path, schema, columns, rows, **meta):
    """
    :param str|tk.Path path:
    :param str schema: name checked by the reader
    :param list[str] columns:
    :param np.ndarray|list rows: one sequence of numbers per row
    :param meta: further JSON serializable header entries
    """
    header = {
        "schema": schema,
        "version": SCHEMA_VERSION,
        "units": UNITS,
        "columns": list(columns),
    }
    header.update(meta)
    with atomic_write(path) as f:
        f.write("# %s\n" % json.dumps(header, sort_keys=True))
        for row in rows:
            assert len(row) == len(columns), "row does not match the columns"
            f.write(",".join(NUMBER_FORMAT % float(v) for v in row) + "\n")


def read_table(path, schema=None, increasing_column=None):
    """
    :param str|tk.Path path:
    :param str|None schema: expected schema name
    :param str|None increasing_column: column that must be strictly increasing
    :return: header and an N x len(columns) array
    :rtype: (dict, np.ndarray)
    """
    name = uncached_path(path)
    try:
        with uopen(name, "rt") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise FormatError("%s: cannot read file: %s" % (name, e))
    if not lines or not lines[0].startswith("#"):
        raise FormatError("%s:1: missing header comment" % name)
    try:
        header = json.loads(lines[0][1:])
    except ValueError as e:
        raise FormatError("%s:1: header is not valid JSON: %s" % (name, e))
    if not isinstance(header, dict) or "columns" not in header:
        raise FormatError("%s:1: header has no column list" % name)
    if schema is not None and header.get("schema") != schema:
        raise FormatError(
            "%s:1: expected schema %r, found %r" % (name, schema, header.get("schema"))
        )
    if header.get("version") != SCHEMA_VERSION:
        raise FormatError(
            "%s:1: unsupported version %r" % (name, header.get("version"))
        )

    columns = header["columns"]
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != len(columns):
            raise FormatError(
                "%s:%d: expected %d values, found %d"
                % (name, number, len(columns), len(fields))
            )
        try:
            rows.append([float(v) for v in fields])
        except ValueError as e:
            raise FormatError("%s:%d: %s" % (name, number, e))
        if increasing_column is not None and len(rows) > 1:
            index = columns.index(increasing_column)
            if rows[-1][index] <= rows[-2][index]:
                raise FormatError(
                    "%s:%d: %s must be strictly increasing"
                    % (name, number, increasing_column)
                )
    return header, np.array(rows, dtype=np.float64).reshape(-1, len(columns))


def write_joint_angles(path, angles, timestamps=None):
    """
    :param str path:
    :param list[JointAngles] angles:
    :param np.ndarray|None timestamps:
    """
    t = _timestamps(timestamps, len(angles))
    rows = [[ti] + a.as_vector().tolist() for ti, a in zip(t, angles)]
    write_table(path, "joint_angles", ["t"] + JOINT_COLUMNS, rows)


def read_joint_angles(path):
    """
    :rtype: (list[JointAngles], np.ndarray)
    """
    _, rows = read_table(path, "joint_angles", increasing_column="t")
    angles = []
    for number, row in enumerate(rows, start=2):
        try:
            angles.append(JointAngles(*(float(v) for v in row[1:5])))
        except ValueError as e:
            raise FormatError("%s:%d: %s" % (uncached_path(path), number, e))
    return angles, rows[:, 0]


def write_weights(path, weights):
    """
    :param str path:
    :param EstimatorWeights weights:
    """
    write_table(path, "weights", ["q_%s" % c for c in JOINT_COLUMNS], [weights.q_diag])


def read_weights(path):
    """
    :rtype: EstimatorWeights
    """
    _, rows = read_table(path, "weights")
    if rows.shape[0] != 1:
        raise FormatError(
            "%s: expected exactly one row of weights" % uncached_path(path)
        )
    try:
        return EstimatorWeights(tuple(rows[0]))
    except ValueError as e:
        raise FormatError("%s:2: %s" % (uncached_path(path), e))


def write_hand_path(path, hand_path, L, initial_posture, timestamps=None):
    """
    :param str path:
    :param np.ndarray hand_path: N x 3 hand positions in the shoulder frame
    :param LimbLengths L:
    :param ArmPosture initial_posture:
    :param np.ndarray|None timestamps:
    """
    hand_path = np.asarray(hand_path, dtype=np.float64).reshape(-1, 3)
    t = _timestamps(timestamps, len(hand_path))
    write_table(
        path,
        "hand_path",
        ["t", "x", "y", "z"],
        np.column_stack([t, hand_path]),
        frame="shoulder",
        limb_lengths=[L.upper_arm, L.forearm],
        initial_posture=_posture_to_list(initial_posture),
    )


def _limb_lengths(value, where):
    if isinstance(value, str):
        if value not in ARM_LENGTHS:
            raise FormatError("%s: unknown arm preset %r" % (where, value))
        return ARM_LENGTHS[value]
    try:
        upper_arm, forearm = (float(v) for v in value)
        return LimbLengths(upper_arm, forearm)
    except (TypeError, ValueError) as e:
        raise FormatError("%s: invalid limb lengths: %s" % (where, e))


def read_hand_path(path):
    """
    :return: hand positions, limb lengths, initial posture and timestamps
    :rtype: (np.ndarray, LimbLengths, ArmPosture, np.ndarray)
    """
    name = uncached_path(path)
    header, rows = read_table(path, "hand_path", increasing_column="t")
    for key in ("limb_lengths", "initial_posture"):
        if key not in header:
            raise FormatError("%s:1: header lacks %s" % (name, key))
    L = _limb_lengths(header["limb_lengths"], name)
    P0 = _posture_from_list(header["initial_posture"], name)
    return rows[:, 1:4], L, P0, rows[:, 0]


def write_posture_trace(path, postures, timestamps=None):
    """
    :param str path:
    :param list[ArmPosture] postures:
    :param np.ndarray|None timestamps:
    """
    t = _timestamps(timestamps, len(postures))
    rows = [np.concatenate([[ti], _posture_row(P)]) for ti, P in zip(t, postures)]
    write_table(path, "posture_trace", ["t"] + POSTURE_COLUMNS, rows, frame="shoulder")


def read_posture_trace(path):
    """
    :rtype: (list[ArmPosture], np.ndarray)
    """
    _, rows = read_table(path, "posture_trace", increasing_column="t")
    return [_posture_from_row(row[1:]) for row in rows], rows[:, 0]


def write_demonstration(path, demo):
    """
    :param str path:
    :param DemonstrationRecord demo:
    """
    write_table(
        path,
        "demonstration",
        ["t", "x", "y", "z"],
        np.column_stack([demo.timestamps, demo.gripper_path]),
        frame="shoulder",
        posture=_posture_to_list(demo.posture),
    )


def read_demonstration(path):
    """
    :rtype: DemonstrationRecord
    """
    name = uncached_path(path)
    header, rows = read_table(path, "demonstration", increasing_column="t")
    if "posture" not in header:
        raise FormatError("%s:1: header lacks the demonstration posture" % name)
    posture = _posture_from_list(header["posture"], name)
    try:
        return DemonstrationRecord(posture, rows[:, 1:4], rows[:, 0])
    except ValueError as e:
        raise FormatError("%s: %s" % (name, e))


def write_training_samples(path, samples, references, arc_radius):
    """
    :param str path:
    :param list[TrainingSample] samples:
    :param list[(ArmPosture, (float, float))] references: posture and start reference
        of every demonstration, indexed by ``TrainingSample.demo``
    :param float arc_radius:
    """
    write_table(
        path,
        "training_samples",
        ["demo", "t", "s", "psi", "delta_l", "delta_theta"],
        [[x.demo, x.t, x.s, x.psi, x.delta_l, x.delta_theta] for x in samples],
        arc_radius=arc_radius,
        demos=[
            {"posture": _posture_to_list(P), "start": [float(v) for v in start]}
            for P, start in references
        ],
    )


def read_training_samples(path):
    """
    :return: samples, per demonstration posture and start reference, arc radius
    :rtype: (list[TrainingSample], list[(ArmPosture, (float, float))], float)
    """
    name = uncached_path(path)
    header, rows = read_table(path, "training_samples")
    try:
        references = [
            (
                _posture_from_list(d["posture"], name),
                tuple(float(v) for v in d["start"]),
            )
            for d in header.get("demos", [])
        ]
        arc_radius = float(header["arc_radius"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError("%s:1: invalid demonstration references: %s" % (name, e))
    samples = [
        TrainingSample(
            s=row[2],
            psi=row[3],
            delta_l=row[4],
            delta_theta=row[5],
            t=row[1],
            demo=int(row[0]),
        )
        for row in rows
    ]
    return samples, references, arc_radius


def write_calibration(path, T):
    """
    :param str path:
    :param RigidTransform T:
    """
    columns = ["r%d%d" % (i, j) for i in range(1, 4) for j in range(1, 4)]
    columns += ["t1", "t2", "t3"]
    row = np.concatenate([T.rotation.reshape(-1), T.translation])
    write_table(path, "calibration", columns, [row])


def read_calibration(path):
    """
    :rtype: RigidTransform
    """
    name = uncached_path(path)
    _, rows = read_table(path, "calibration")
    if rows.shape != (1, 12):
        raise FormatError("%s: expected one row of 12 numbers" % name)
    try:
        return RigidTransform(rows[0, :9].reshape(3, 3), rows[0, 9:])
    except ValueError as e:
        raise FormatError("%s:2: %s" % (name, e))


def write_correspondences(path, points_interactive, points_dressing):
    """
    :param str path:
    :param np.ndarray points_interactive: N x 3, interactive robot frame
    :param np.ndarray points_dressing: N x 3, the same points in the dressing frame
    """
    rows = np.hstack(
        [
            np.asarray(points_interactive, dtype=np.float64),
            np.asarray(points_dressing, dtype=np.float64),
        ]
    )
    columns = ["interactive_x", "interactive_y", "interactive_z"]
    columns += ["dressing_x", "dressing_y", "dressing_z"]
    write_table(path, "correspondences", columns, rows, frame="interactive,dressing")


def read_correspondences(path):
    """
    :return: points in the interactive robot frame and in the dressing frame
    :rtype: (np.ndarray, np.ndarray)
    """
    name = uncached_path(path)
    _, rows = read_table(path, "correspondences")
    if rows.shape[0] < 3:
        raise FormatError(
            "%s: need at least 3 point pairs, found %d" % (name, rows.shape[0])
        )
    return rows[:, :3], rows[:, 3:]


def write_gmm(path, gmm):
    """
    :param str path:
    :param GaussianMixture gmm:
    """
    doc = {
        "schema": "gaussian_mixture",
        "version": SCHEMA_VERSION,
        "K": gmm.K,
        "dim": gmm.dim,
        "input_dim": gmm.input_dim,
        "output_dim": gmm.output_dim,
        "weights": gmm.weights.tolist(),
        "means": gmm.means.tolist(),
        "covariances": gmm.covariances.reshape(gmm.K, -1).tolist(),
        "input_bounds": None if gmm.input_bounds is None else gmm.input_bounds.tolist(),
        "log_likelihood_trace": list(gmm.log_likelihood_trace),
    }
    with atomic_write(path) as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def _read_json(path, schema):
    name = uncached_path(path)
    try:
        with uopen(name, "rt") as f:
            doc = json.load(f)
    except OSError as e:
        raise FormatError("%s: cannot read file: %s" % (name, e))
    except ValueError as e:
        raise FormatError("%s: not valid JSON: %s" % (name, e))
    if not isinstance(doc, dict) or doc.get("schema") != schema:
        raise FormatError("%s: expected a %s document" % (name, schema))
    if doc.get("version") != SCHEMA_VERSION:
        raise FormatError("%s: unsupported version %r" % (name, doc.get("version")))
    return doc


def read_gmm(path):
    """
    :rtype: GaussianMixture
    """
    doc = _read_json(path, "gaussian_mixture")
    try:
        K, dim = int(doc["K"]), int(doc["dim"])
        return GaussianMixture(
            weights=doc["weights"],
            means=doc["means"],
            covariances=np.array(doc["covariances"], dtype=np.float64).reshape(
                K, dim, dim
            ),
            input_dim=int(doc["input_dim"]),
            input_bounds=doc.get("input_bounds"),
            log_likelihood_trace=doc.get("log_likelihood_trace", ()),
        )
    except (KeyError, TypeError, ValueError, AssertionError) as e:
        raise FormatError("%s: invalid mixture: %s" % (uncached_path(path), e))


def write_rollout_config(path, cfg):
    """
    Writes the fully explicit form of a configuration, policy file names as given.

    :param str path:
    :param RolloutConfig cfg:
    """
    human = cfg.human
    doc = {
        "schema": "rollout_config",
        "version": SCHEMA_VERSION,
        "limb_lengths": [cfg.limb_lengths.upper_arm, cfg.limb_lengths.forearm],
        "initial_posture": {"points": _posture_to_list(cfg.initial_posture)},
        "human": {
            "compliance_gain": human.compliance_gain,
            "deviation_bias": human.deviation_bias.tolist(),
            "noise_std": human.noise_std,
            "joint_weights": list(human.joint_weights.q_diag),
            "swivel_rate": human.swivel_rate,
        },
        "stiffness": {"k_x": cfg.stiffness.k_x, "damping": cfg.stiffness.damping},
        "weights": list(cfg.weights.q_diag),
        "dynamics": {"c": cfg.dynamics.c, "s_target": cfg.dynamics.s_target},
        "policy_files": [uncached_path(p) for p in cfg.policy_files],
        "arc_radius": cfg.arc_radius,
        "seed": cfg.seed,
        "max_steps": cfg.max_steps,
        "mode": cfg.mode.value,
        "dt": cfg.dt,
        "lead": cfg.lead,
        "robot_base": _transform_to_dict(cfg.robot_base),
        "calibration": (
            None if cfg.calibration is None else _transform_to_dict(cfg.calibration)
        ),
        "start_l": cfg.start_l,
        "start_theta": cfg.start_theta,
        "thresholds": {
            "shoulder_radius": cfg.thresholds.shoulder_radius,
            "collision_floor": cfg.thresholds.collision_floor,
            "armscye_diameter": cfg.thresholds.armscye_diameter,
            "ring_slack": cfg.thresholds.ring_slack,
        },
    }
    with atomic_write(path) as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def _transform_to_dict(T):
    return {"rotation": T.rotation.tolist(), "translation": T.translation.tolist()}


def _initial_posture(entry, L, where):
    if not isinstance(entry, dict) or len(entry) != 1:
        raise FormatError(
            "%s: initial_posture needs exactly one of points, joint_angles or "
            "elbow_angle_deg" % where
        )
    ((kind, value),) = entry.items()
    if kind == "points":
        return _posture_from_list(value, where)
    if kind == "joint_angles":
        return forward_kinematics(JointAngles.from_vector(value), L)
    if kind == "elbow_angle_deg":
        return posture_from_elbow_angle(np.radians(float(value)), L)
    raise FormatError("%s: unknown initial posture kind %r" % (where, kind))


def read_rollout_config(path):
    """
    Only limb lengths and initial posture are required, everything else falls back to
    the library defaults. Relative policy file names are resolved against the directory
    of the configuration file.

    :rtype: RolloutConfig
    """
    name = uncached_path(path)
    doc = _read_json(path, "rollout_config")
    base_dir = os.path.dirname(os.path.abspath(name))
    try:
        L = _limb_lengths(doc["limb_lengths"], name)
        kwargs = {
            "limb_lengths": L,
            "initial_posture": _initial_posture(doc["initial_posture"], L, name),
            "policy_files": tuple(
                os.path.join(base_dir, p) for p in doc.get("policy_files", [])
            ),
        }
        if "human" in doc:
            human = dict(doc["human"])
            if "joint_weights" in human:
                human["joint_weights"] = EstimatorWeights(tuple(human["joint_weights"]))
            kwargs["human"] = HumanResponseModel(**human)
        if "stiffness" in doc:
            kwargs["stiffness"] = StiffnessConfig(**doc["stiffness"])
        if "weights" in doc:
            kwargs["weights"] = EstimatorWeights(tuple(doc["weights"]))
        if "dynamics" in doc:
            kwargs["dynamics"] = ProgressDynamics(**doc["dynamics"])
        if "mode" in doc:
            kwargs["mode"] = Mode(doc["mode"])
        for key in ("robot_base", "calibration"):
            if doc.get(key) is not None:
                kwargs[key] = RigidTransform(
                    doc[key]["rotation"], doc[key]["translation"]
                )
        if "thresholds" in doc:
            kwargs["thresholds"] = SuccessThresholds(**doc["thresholds"])
        for key, convert in (
            ("arc_radius", float),
            ("seed", int),
            ("max_steps", int),
            ("dt", float),
            ("lead", float),
            ("start_l", float),
        ):
            if key in doc:
                kwargs[key] = convert(doc[key])
        if doc.get("start_theta") is not None:
            kwargs["start_theta"] = float(doc["start_theta"])
        return RolloutConfig(**kwargs)
    except (KeyError, TypeError, ValueError, AssertionError) as e:
        raise FormatError("%s: invalid rollout configuration: %s" % (name, e))


ROLLOUT_COLUMNS = (
    ["step", "s", "gripper_x", "gripper_y", "gripper_z"]
    + ["true_%s" % c for c in POSTURE_COLUMNS]
    + ["est_%s" % c for c in POSTURE_COLUMNS]
    + [
        "elbow_error",
        "l_true",
        "ring_clearance",
        "ring_drag",
        "psi_true",
        "psi_est",
        "extrapolated",
    ]
)


def write_rollout_trace(path, result, **meta):
    """
    :param str path:
    :param RolloutResult result:
    :param meta: further header entries, e.g. seed and mode
    """
    rows = [
        np.concatenate(
            [
                [i, result.s_trace[i]],
                result.gripper_path[i],
                _posture_row(result.true_postures[i]),
                _posture_row(result.estimated_postures[i]),
                [
                    result.elbow_error_trace[i],
                    result.l_true_trace[i],
                    result.ring_clearance_trace[i],
                    result.ring_drag_trace[i],
                    result.psi_true_trace[i],
                    result.psi_est_trace[i],
                    float(result.extrapolated[i]),
                ],
            ]
        )
        for i in range(len(result))
    ]
    write_table(
        path,
        "rollout_trace",
        ROLLOUT_COLUMNS,
        rows,
        frame="shoulder",
        outcome=result.outcome.value,
        outcome_detail=result.outcome_detail,
        **meta,
    )


def read_rollout_trace(path):
    """
    :rtype: (dict, np.ndarray)
    """
    return read_table(path, "rollout_trace", increasing_column="step")


def write_metrics(path, metrics):
    """
    :param str path:
    :param dict[str, str|int|float] metrics: written as key=value lines in order
    """
    with atomic_write(path) as f:
        for key, value in metrics.items():
            if isinstance(value, float):
                value = NUMBER_FORMAT % value
            f.write("%s=%s\n" % (key, value))


def read_metrics(path):
    """
    :rtype: dict[str, str]
    """
    name = uncached_path(path)
    metrics = {}
    with uopen(name, "rt") as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError("%s:%d: expected key=value" % (name, number))
            key, value = line.split("=", 1)
            metrics[key] = value
    return metrics
