__all__ = ["TransformDemonstrationsJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats
from dressing_core.lib.dressing import DEFAULT_ARC_RADIUS
from dressing_core.lib.policy import start_reference, transform_demos


class TransformDemonstrationsJob(Job):
    """
    Converts recorded dressing paths into policy training samples (s, psi, delta l,
    delta theta), relative to the start of each demonstration.
    """

    def __init__(self, demo_files, arc_radius=DEFAULT_ARC_RADIUS):
        """
        :param list[tk.Path]|dict[Any, tk.Path] demo_files:
        :param float arc_radius: radius of the elbow arc of the progress curve
        """
        self.demo_files = demo_files
        self.arc_radius = arc_radius

        self.out_samples = self.output_path("samples.csv")
        self.out_num_samples = self.output_var("num_samples")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        files = self.demo_files
        if isinstance(files, dict):
            files = [files[k] for k in sorted(files)]
        demos = [formats.read_demonstration(f) for f in files]
        samples = transform_demos(demos, self.arc_radius)
        references = [(d.posture, start_reference(d, self.arc_radius)) for d in demos]
        formats.write_training_samples(
            self.out_samples, samples, references, self.arc_radius
        )
        self.out_num_samples.set(len(samples))
