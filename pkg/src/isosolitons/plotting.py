"""Static figures of solved trajectories and flow runs (matplotlib, Agg)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "svg.hashsalt": "isosolitons",  # deterministic SVG ids
}


def plot_solution(traj, path):
    """Two panels: ``u(r)`` and ``|T|²(r)`` on log-log axes."""
    r = traj.r
    torsion = traj.diagnostics["torsion_norm_sq"]
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        ax0.plot(r, traj.u, color="C0")
        ax0.set_xscale("log")
        ax0.set_xlabel("r")
        ax0.set_ylabel("u")
        ax0.axvline(np.exp(traj.x_switch), color="0.6", ls=":", lw=0.8)
        pos = torsion > 0
        if pos.any():
            ax1.loglog(r[pos], torsion[pos], color="C3")
        ax1.set_xlabel("r")
        ax1.set_ylabel("|T|²")
        fig.suptitle(f"{traj.case.label}, a1={traj.a1:g}: {traj.diagnostics['classification'].value}")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_flow(report, path):
    """``sup|u|`` and the energy proxy against time."""
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        ax0.plot(report.times, report.sup_u, marker=".", color="C0")
        ax0.set_xlabel("t")
        ax0.set_ylabel("sup|u|")
        ax1.plot(report.times, report.energy, marker=".", color="C2")
        ax1.set_xlabel("t")
        ax1.set_ylabel("∫|T|²")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return Path(path)
