__all__ = ["EvaluateEstimationJob"]

from sisyphus import *

Path = setup_path(__package__)

import numpy as np

import dressing_core.lib.formats as formats
from dressing_core.lib.rollout import estimation_errors
from dressing_core.summary.table import format_table


class EvaluateEstimationJob(Job):
    """
    Stretches a simulated human per case and reports maximum and mean elbow error of
    the posture estimator, one row per case.
    """

    def __init__(self, config_files, steps=None, plot=True):
        """
        :param dict[str, tk.Path] config_files: rollout configuration per case name
        :param int|None steps: stretch steps, defaults to max_steps of each config
        :param bool plot: also plot the error traces
        """
        self.config_files = config_files
        self.steps = steps
        self.plot = plot

        self.out_report = self.output_path("report.txt")
        self.out_errors = self.output_var("errors")
        if self.plot:
            self.out_plot = self.output_path("elbow_error.png")

        self.rqmt = {"time": 1, "cpu": 1, "mem": 2}

    def tasks(self):
        yield Task("run", rqmt=self.rqmt)

    def run(self):
        traces = {}
        for name in sorted(self.config_files):
            cfg = formats.read_rollout_config(self.config_files[name])
            traces[name] = estimation_errors(cfg, self.steps)

        data = {}
        for name, errors in traces.items():
            data[("max [mm]", name)] = "%.1f" % (1000 * errors.max())
            data[("mean [mm]", name)] = "%.1f" % (1000 * errors.mean())
        with open(self.out_report.get_path(), "wt") as f:
            f.write(format_table(data, "case", list(traces), ["max [mm]", "mean [mm]"]))
        self.out_errors.set(
            {name: (float(e.max()), float(e.mean())) for name, e in traces.items()}
        )

        if self.plot:
            import matplotlib

            matplotlib.use("Agg")
            import matplotlib.pyplot as plt

            fig, ax = plt.subplots()
            for name, errors in traces.items():
                ax.plot(np.arange(len(errors)), 1000 * errors, label=name)
            ax.set_xlabel("step")
            ax.set_ylabel("elbow error [mm]")
            ax.grid(True)
            ax.legend()
            fig.savefig(self.out_plot.get_path())
            plt.close(fig)
