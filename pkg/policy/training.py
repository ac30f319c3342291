__all__ = ["TrainDressingPolicyJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats
from dressing_core.lib.policy import DEFAULT_COMPONENTS, train_policy


class TrainDressingPolicyJob(Job):
    """
    Trains the two mixtures of the dressing policy, (s, psi) -> delta l and
    (s, psi) -> delta theta, with K-means initialised EM.
    """

    def __init__(
        self, samples_file, num_components=DEFAULT_COMPONENTS, k_range=None, seed=0
    ):
        """
        :param tk.Path samples_file: e.g. TransformDemonstrationsJob.out_samples
        :param int num_components: components of both mixtures
        :param tuple[int]|None k_range: select the component counts by BIC instead
        :param int seed: seed of the K-means initialisation
        """
        self.samples_file = samples_file
        self.num_components = num_components
        self.k_range = k_range
        self.seed = seed

        self.out_model_l = self.output_path("model_l.json")
        self.out_model_theta = self.output_path("model_theta.json")
        self.out_num_components = self.output_var("num_components")

        self.rqmt = {"time": 1, "cpu": 1, "mem": 2}

    def tasks(self):
        yield Task("run", resume="run", rqmt=self.rqmt)

    def run(self):
        samples, _, arc_radius = formats.read_training_samples(self.samples_file)
        policy = train_policy(
            samples,
            num_components=self.num_components,
            k_range=self.k_range,
            seed=self.seed,
            r=arc_radius,
        )
        formats.write_gmm(self.out_model_l, policy.gmm_l)
        formats.write_gmm(self.out_model_theta, policy.gmm_theta)
        self.out_num_components.set((policy.gmm_l.K, policy.gmm_theta.K))
