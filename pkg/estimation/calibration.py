__all__ = ["EstimateCalibrationJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats
from dressing_core.lib.geometry import (
    estimate_rigid_transform,
    rigid_transform_residuals,
)


class EstimateCalibrationJob(Job):
    """
    Pose of the interactive robot base in the dressing robot frame from points measured
    by both robots.
    """

    def __init__(self, correspondences_file):
        """
        :param tk.Path correspondences_file: see formats.write_correspondences
        """
        self.correspondences_file = correspondences_file

        self.out_calibration = self.output_path("calibration.csv")
        self.out_max_residual = self.output_var("max_residual")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        points_interactive, points_dressing = formats.read_correspondences(
            self.correspondences_file
        )
        T = estimate_rigid_transform(points_interactive, points_dressing)
        formats.write_calibration(self.out_calibration, T)
        residuals = rigid_transform_residuals(T, points_interactive, points_dressing)
        self.out_max_residual.set(float(residuals.max()))
