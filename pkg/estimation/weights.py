__all__ = ["FitEstimatorWeightsJob"]

from sisyphus import *

Path = setup_path(__package__)

import logging

import dressing_core.lib.formats as formats
from dressing_core.lib.estimation import compute_weights


class FitEstimatorWeightsJob(Job):
    """
    Fits the diagonal joint weights of the posture estimator on a recorded stretch
    motion given as joint angles.
    """

    def __init__(self, angle_file, regularize=False):
        """
        :param tk.Path angle_file: joint angle table
        :param bool regularize: do not fail on joints that never move
        """
        self.angle_file = angle_file
        self.regularize = regularize

        self.out_weights = self.output_path("weights.csv")
        self.out_weight_values = self.output_var("weights")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        angles, _ = formats.read_joint_angles(self.angle_file)
        weights = compute_weights(angles, regularize=self.regularize)
        logging.info("weights from %d samples: %s" % (len(angles), weights.q_diag))
        formats.write_weights(self.out_weights, weights)
        self.out_weight_values.set(list(weights.q_diag))
