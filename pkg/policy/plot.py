__all__ = ["PlotPolicySurfaceJob"]

from sisyphus import *

Path = setup_path(__package__)

import numpy as np

import dressing_core.lib.formats as formats
from dressing_core.lib.gmm import gmr_condition


class PlotPolicySurfaceJob(Job):
    """
    Plots the regressed delta l and delta theta over progress and elbow angle.
    """

    def __init__(self, model_l, model_theta, psi_range_deg=(80.0, 170.0), grid_size=50):
        """
        :param tk.Path model_l:
        :param tk.Path model_theta:
        :param tuple[float, float] psi_range_deg: plotted elbow angles in degree
        :param int grid_size: grid points per axis
        """
        self.model_l = model_l
        self.model_theta = model_theta
        self.psi_range_deg = psi_range_deg
        self.grid_size = grid_size

        self.out_plot = self.output_path("policy.png")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        s = np.linspace(0.0, 1.0, self.grid_size)
        psi_deg = np.linspace(*self.psi_range_deg, self.grid_size)
        S, PSI = np.meshgrid(s, psi_deg)

        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for ax, model, label in zip(
            axes,
            (self.model_l, self.model_theta),
            ("delta l [m]", "delta theta [rad]"),
        ):
            gmm = formats.read_gmm(model)
            values = np.array(
                [
                    gmr_condition(gmm, [si, np.radians(pi)])[0][0]
                    for si, pi in zip(S.ravel(), PSI.ravel())
                ]
            ).reshape(S.shape)
            mesh = ax.pcolormesh(S, PSI, values, shading="auto")
            fig.colorbar(mesh, ax=ax, label=label)
            ax.set_xlabel("s")
            ax.set_ylabel("elbow angle [deg]")
        fig.tight_layout()
        fig.savefig(self.out_plot.get_path())
        plt.close(fig)
