"""SVG panels for a simulation log: joint angles, duty, error, wrist path."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import SimLog  # noqa: E402

_RC = {
    "svg.hashsalt": "softreach",
    "svg.fonttype": "none",
    "path.simplify": False,
}
PANELS = ("angles", "pwm", "error", "wrist")


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def emit_plots(sim_log: SimLog, out_dir, prefix: str = "") -> list[Path]:
    """Write one SVG per panel and return the paths.

    Output bytes depend only on the log contents.
    """
    if len(sim_log) == 0:
        raise ValueError("empty log")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = sim_log["t"]
    paths = []
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
        for ax, j, name in zip(axes, "se", ("shoulder", "elbow")):
            ax.plot(t, np.degrees(sim_log[f"theta_{j}_des"]), "k--", label="desired")
            ax.plot(t, np.degrees(sim_log[f"theta_{j}_true"]), label="true")
            ax.plot(t, np.degrees(sim_log[f"theta_{j}_meas"]), alpha=0.6, label="measured")
            ax.set_ylabel(f"{name} [deg]")
        axes[0].legend(loc="best")
        axes[-1].set_xlabel("t [s]")
        paths.append(_save(fig, out_dir / f"{prefix}angles.svg"))

        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(t, sim_log["pwm_s"], label="shoulder")
        ax.plot(t, sim_log["pwm_e"], label="elbow")
        ax.set_ylim(-5, 105)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("PWM [%]")
        ax.legend(loc="best")
        paths.append(_save(fig, out_dir / f"{prefix}pwm.svg"))

        fig, ax = plt.subplots(figsize=(6, 3))
        for j, name in zip("se", ("shoulder", "elbow")):
            err = np.abs(sim_log[f"theta_{j}_des"] - sim_log[f"theta_{j}_true"])
            ax.plot(t, np.degrees(err), label=name)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("|error| [deg]")
        ax.legend(loc="best")
        paths.append(_save(fig, out_dir / f"{prefix}error.svg"))

        fig, axes = plt.subplots(1, 3, figsize=(9, 3))
        for ax, (a, b) in zip(axes, (("x", "y"), ("x", "z"), ("y", "z"))):
            ax.plot(sim_log[f"{a}_des"], sim_log[f"{b}_des"], "k--", label="desired")
            ax.plot(sim_log[a], sim_log[b], label="true")
            ax.set_xlabel(f"{a} [m]")
            ax.set_ylabel(f"{b} [m]")
            ax.set_aspect("equal", adjustable="datalim")
        axes[0].legend(loc="best")
        fig.tight_layout()
        paths.append(_save(fig, out_dir / f"{prefix}wrist.svg"))
    return paths


def plot_workspace(points: np.ndarray, path) -> Path:
    with plt.rc_context(_RC):
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="3d")
        ax.scatter(points[:, 0], points[:, 1], points[:, 2], s=2)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("z [m]")
        return _save(fig, Path(path))


def plot_singularities(ts: np.ndarray, te: np.ndarray, dets: np.ndarray, path) -> Path:
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 3, figsize=(10, 3), sharey=True)
        for i, ax in enumerate(axes):
            im = ax.contourf(np.degrees(ts), np.degrees(te), dets[:, :, i].T, levels=20)
            ax.contour(np.degrees(ts), np.degrees(te), dets[:, :, i].T, levels=[0.0], colors="r")
            ax.set_title(f"det J{i + 1}")
            ax.set_xlabel("theta_s [deg]")
            fig.colorbar(im, ax=ax)
        axes[0].set_ylabel("theta_e [deg]")
        fig.tight_layout()
        return _save(fig, Path(path))
