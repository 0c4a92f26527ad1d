"""Static SVG charts for training curves, per-slot comparisons and sweep surfaces."""

import logging
import os
from typing import Dict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp keep re-runs byte-identical.
plt.rcParams["svg.hashsalt"] = "hvac-maac"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote plot {path}")
    return path


def plot_reward_curve(training_log: pd.DataFrame, path: str) -> str:
    """Per-agent episode reward and its running mean."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for agent, rows in training_log.groupby("agent", sort=True):
        line, = ax.plot(rows["episode"], rows["reward_sum"], linewidth=0.5, alpha=0.3)
        ax.plot(rows["episode"], rows["running_mean_200"], color=line.get_color(), linewidth=1.5,
                label=f"agent {int(agent) + 1}")
    ax.set_xlabel("episode")
    ax.set_ylabel("episode reward")
    ax.grid(True, alpha=0.3)
    if len(training_log):
        ax.legend(loc="lower right", fontsize="small")
    return _save(fig, path)


def plot_slots(slot_logs: Dict[str, pd.DataFrame], n_zones: int, path: str) -> str:
    """Energy cost, mean zone airflow and damper position per slot for each scheme."""
    fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
    airflow_columns = [f"airflow_{i}" for i in range(1, n_zones + 1)]
    for scheme, log in slot_logs.items():
        x = np.arange(len(log))
        axes[0].plot(x, log["energy_cost"], label=scheme, linewidth=1.0)
        axes[1].plot(x, log[airflow_columns].mean(axis=1), label=scheme, linewidth=1.0)
        axes[2].step(x, log["damper"], where="post", label=scheme, linewidth=1.0)
    axes[0].set_ylabel("energy cost (RMB)")
    axes[1].set_ylabel("mean airflow (g/s)")
    axes[2].set_ylabel("damper position")
    axes[2].set_xlabel("slot")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    axes[0].legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def plot_sweep_surface(results: pd.DataFrame, metric: str, path: str) -> str:
    """Seed-averaged ``metric`` over the alpha/beta grid."""
    table = results.groupby(["alpha", "beta"])[metric].mean().unstack("beta").sort_index()
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(table.to_numpy(), origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(table.columns)))
    ax.set_xticklabels([f"{b:g}" for b in table.columns])
    ax.set_yticks(range(len(table.index)))
    ax.set_yticklabels([f"{a:g}" for a in table.index])
    ax.set_xlabel("beta")
    ax.set_ylabel("alpha")
    for (r, c), value in np.ndenumerate(table.to_numpy()):
        ax.text(c, r, f"{value:.3g}", ha="center", va="center", color="white", fontsize="small")
    fig.colorbar(image, ax=ax, label=metric)
    return _save(fig, path)
