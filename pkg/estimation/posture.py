__all__ = ["EstimatePostureJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats
from dressing_core.lib.estimation import track


class EstimatePostureJob(Job):
    """
    Runs the recursive posture estimator over a hand path. The hand path file carries
    the limb lengths and the initial posture in its header.
    """

    def __init__(self, hand_path_file, weights_file):
        """
        :param tk.Path hand_path_file:
        :param tk.Path weights_file: e.g. FitEstimatorWeightsJob.out_weights
        """
        self.hand_path_file = hand_path_file
        self.weights_file = weights_file

        self.out_postures = self.output_path("postures.csv")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        hand_path, L, initial, timestamps = formats.read_hand_path(self.hand_path_file)
        weights = formats.read_weights(self.weights_file)
        postures = track(initial, hand_path, L, weights)
        formats.write_posture_trace(self.out_postures, postures, timestamps)
