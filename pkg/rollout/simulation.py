__all__ = ["DressingRolloutJob", "DressingRolloutSweepJob"]

from sisyphus import *

Path = setup_path(__package__)

import numpy as np

import dressing_core.lib.formats as formats
import dressing_core.util as util
from dressing_core.lib.rollout import Mode, Outcome, run_rollout, run_rollouts


def _rollout_config(config_file, model_l, model_theta, mode, calibration_file):
    cfg = formats.read_rollout_config(config_file)
    cfg = cfg.replace(
        policy_files=(util.uncached_path(model_l), util.uncached_path(model_theta))
    )
    if mode is not None:
        cfg = cfg.replace(mode=Mode(mode))
    if calibration_file is not None:
        cfg = cfg.replace(calibration=formats.read_calibration(calibration_file))
    return cfg


class DressingRolloutJob(Job):
    """
    Closed loop dressing simulation with a trained policy. Writes the full trace, the
    key=value metrics and a plot of progress, elbow angles and clearance.
    """

    def __init__(
        self,
        config_file,
        model_l,
        model_theta,
        seed=None,
        mode=None,
        calibration_file=None,
    ):
        """
        :param tk.Path config_file: rollout configuration, its policy files are replaced
        :param tk.Path model_l: e.g. TrainDressingPolicyJob.out_model_l
        :param tk.Path model_theta:
        :param int|None seed: overrides the seed of the configuration
        :param str|None mode: "compliant", "noncompliant" or "static", overrides the
            configuration
        :param tk.Path|None calibration_file: interactive robot base in the dressing
            frame, e.g. from EstimateCalibrationJob, overrides the configuration
        """
        assert mode is None or mode in [m.value for m in Mode], "unknown mode %r" % mode
        self.config_file = config_file
        self.model_l = model_l
        self.model_theta = model_theta
        self.seed = seed
        self.mode = mode
        self.calibration_file = calibration_file

        self.out_trace = self.output_path("trace.csv")
        self.out_metrics = self.output_path("metrics.txt")
        self.out_outcome = self.output_var("outcome")
        self.out_plot = self.output_path("rollout.png")

        self.rqmt = {"time": 1, "cpu": 1, "mem": 2}

    def tasks(self):
        yield Task("run", resume="run", rqmt=self.rqmt)

    def run(self):
        cfg = _rollout_config(
            self.config_file,
            self.model_l,
            self.model_theta,
            self.mode,
            self.calibration_file,
        )
        if self.seed is not None:
            cfg = cfg.replace(seed=self.seed)
        result = run_rollout(cfg)

        formats.write_rollout_trace(
            self.out_trace, result, seed=cfg.seed, mode=cfg.mode.value
        )
        formats.write_metrics(self.out_metrics, result.metrics())
        self.out_outcome.set(result.outcome.value)
        self.plot(result)

    def plot(self, result):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        steps = np.arange(len(result))
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
        ax1.plot(steps, result.s_trace, color="#2A4D6E", label="s")
        ax1.set_ylabel("progress")
        ax3 = ax1.twinx()
        ax3.plot(
            steps, np.degrees(result.psi_true_trace), color="#AA3C39", label="true"
        )
        ax3.plot(
            steps,
            np.degrees(result.psi_est_trace),
            "--",
            color="#93A537",
            label="estimated",
        )
        ax3.set_ylabel("elbow angle [deg]")
        ax3.legend(loc="lower right")

        ax2.plot(steps, result.l_true_trace, label="gripper")
        ax2.plot(steps, np.minimum(result.ring_clearance_trace, 1.0), label="armhole")
        ax2.plot(steps, result.ring_drag_trace, ":", label="armhole drag")
        ax2.set_xlabel("step")
        ax2.set_ylabel("distance [m]")
        ax2.legend()
        ax1.set_title(result.outcome.value)
        fig.savefig(self.out_plot.get_path())
        plt.close(fig)


class DressingRolloutSweepJob(Job):
    """
    One configuration rolled out once per seed with a shared policy.
    """

    def __init__(
        self,
        config_file,
        model_l,
        model_theta,
        seeds,
        mode=None,
        calibration_file=None,
    ):
        """
        :param tk.Path config_file: rollout configuration, its policy files are replaced
        :param tk.Path model_l:
        :param tk.Path model_theta:
        :param list[int] seeds:
        :param str|None mode: overrides the configuration
        :param tk.Path|None calibration_file: overrides the configuration
        """
        assert len(seeds) > 0, "need at least one seed"
        assert mode is None or mode in [m.value for m in Mode], "unknown mode %r" % mode
        self.config_file = config_file
        self.model_l = model_l
        self.model_theta = model_theta
        self.seeds = list(seeds)
        self.mode = mode
        self.calibration_file = calibration_file

        self.out_metrics = {
            seed: self.output_path("metrics.%d.txt" % seed) for seed in self.seeds
        }
        self.out_outcomes = self.output_var("outcomes")
        self.out_success_rate = self.output_var("success_rate")

        self.rqmt = {"time": 2, "cpu": 1, "mem": 2}

    def tasks(self):
        yield Task("run", resume="run", rqmt=self.rqmt)

    def run(self):
        cfg = _rollout_config(
            self.config_file,
            self.model_l,
            self.model_theta,
            self.mode,
            self.calibration_file,
        )
        results = run_rollouts(cfg.replace(seed=seed) for seed in self.seeds)
        outcomes = {}
        for seed, result in zip(self.seeds, results):
            formats.write_metrics(self.out_metrics[seed], result.metrics())
            outcomes[seed] = result.outcome.value
        self.out_outcomes.set(outcomes)
        successes = sum(r.outcome == Outcome.Success for r in results)
        self.out_success_rate.set(successes / len(results))
