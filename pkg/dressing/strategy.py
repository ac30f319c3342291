__all__ = ["ClassifyStrategyJob"]

from sisyphus import *

Path = setup_path(__package__)

import math

import dressing_core.lib.formats as formats
from dressing_core.lib.dressing import (
    DEFAULT_ARC_RADIUS,
    build_progress_curve,
    classify_strategy,
)
from dressing_core.lib.geometry import arm_plane_normal, elbow_angle
from dressing_core.summary.table import format_table


class ClassifyStrategyJob(Job):
    """
    Decides for every demonstration whether the path passes the elbow on the inner or
    on the outer side, with the signed distance from the elbow.
    """

    def __init__(self, demo_files, arc_radius=DEFAULT_ARC_RADIUS):
        """
        :param dict[str, tk.Path] demo_files: demonstration per name
        :param float arc_radius:
        """
        self.demo_files = demo_files
        self.arc_radius = arc_radius

        self.out_report = self.output_path("strategies.txt")
        self.out_strategies = self.output_var("strategies")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        strategies = {}
        data = {}
        names = sorted(self.demo_files, key=str)
        for name in names:
            demo = formats.read_demonstration(self.demo_files[name])
            P = demo.posture
            strategy, distance = classify_strategy(
                demo.gripper_path,
                P,
                build_progress_curve(P, self.arc_radius),
                arm_plane_normal(P),
            )
            strategies[name] = (strategy.value, distance)
            row = str(name)
            data[("elbow angle", row)] = "%.1f" % math.degrees(elbow_angle(P))
            data[("strategy", row)] = strategy.value
            data[("distance [m]", row)] = "%+.3f" % distance

        with open(self.out_report.get_path(), "wt") as f:
            f.write(
                format_table(
                    data,
                    "demo",
                    [str(n) for n in names],
                    ["elbow angle", "strategy", "distance [m]"],
                )
            )
        self.out_strategies.set(strategies)
