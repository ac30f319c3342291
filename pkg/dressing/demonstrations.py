__all__ = ["SynthesizeDemonstrationsJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats
from dressing_core.lib.dressing import DEFAULT_ARC_RADIUS, Strategy
from dressing_core.lib.geometry import ARM_LENGTHS, LimbLengths
from dressing_core.lib.policy import CORPUS_ELBOW_ANGLES, synthetic_demo_corpus


class SynthesizeDemonstrationsJob(Job):
    """
    Creates demonstration-like dressing paths for static arms, one file per elbow angle.
    Small elbow angles use the outer strategy, large ones the inner strategy, unless a
    strategy is forced.
    """

    def __init__(
        self,
        limb_lengths="mannequin",
        elbow_angles_deg=CORPUS_ELBOW_ANGLES,
        strategy=None,
        seed=0,
        noise_std=0.001,
        arc_radius=DEFAULT_ARC_RADIUS,
    ):
        """
        :param str|tuple[float, float] limb_lengths: preset name or (upper arm, forearm)
        :param tuple[float] elbow_angles_deg:
        :param str|None strategy: "Inner" or "Outer" to use it for every demonstration
        :param int seed:
        :param float noise_std: gripper noise in m
        :param float arc_radius:
        """
        assert strategy in (None, "Inner", "Outer"), "unknown strategy %r" % strategy
        self.limb_lengths = limb_lengths
        self.elbow_angles_deg = tuple(elbow_angles_deg)
        self.strategy = strategy
        self.seed = seed
        self.noise_std = noise_std
        self.arc_radius = arc_radius

        self.out_demos = {
            angle: self.output_path("demo.%03d.csv" % round(angle))
            for angle in self.elbow_angles_deg
        }

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        if isinstance(self.limb_lengths, str):
            L = ARM_LENGTHS[self.limb_lengths]
        else:
            L = LimbLengths(*self.limb_lengths)
        demos = synthetic_demo_corpus(
            L,
            self.elbow_angles_deg,
            seed=self.seed,
            r=self.arc_radius,
            noise_std=self.noise_std,
            strategy=None if self.strategy is None else Strategy(self.strategy),
        )
        for angle, demo in zip(self.elbow_angles_deg, demos):
            formats.write_demonstration(self.out_demos[angle], demo)
