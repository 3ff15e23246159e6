"""
SVG charts of divergence curves.
"""
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

SERIES = ("forward_kl", "inverse_kl", "jsd")


def plot_curves(rows: Sequence[Dict], objective: str, path: Union[str, Path]) -> Path:
    """One panel per divergence, one line per seed; infinite values are left out."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_seed: Dict[int, List[Dict]] = {}
    for row in rows:
        if row["objective"] == objective:
            by_seed.setdefault(row["seed"], []).append(row)
    fig, axes = plt.subplots(1, len(SERIES), figsize=(4 * len(SERIES), 3.2))
    for ax, name in zip(axes, SERIES):
        for seed, points in sorted(by_seed.items()):
            steps = [p["step"] for p in points]
            values = np.array([p[name] for p in points], dtype=np.float64)
            values[~np.isfinite(values)] = np.nan
            ax.plot(steps, values, label=f"seed {seed}", linewidth=1.2)
        ax.set_title(name.replace("_", " "))
        ax.set_xlabel("step")
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("nats")
    axes[-1].legend(fontsize="small")
    fig.suptitle(objective)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path
