from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from models import IrfBands  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date stamp keep the SVG byte-identical across runs.
plt.rcParams["svg.hashsalt"] = "ineqvar"


def plot_bands_svg(
    bands: IrfBands,
    path: Path,
    variables: Optional[Sequence[str]] = None,
    title: Optional[str] = None,
) -> Path:
    """Median line and shaded outer band per variable, one panel each."""
    variables = list(variables or bands.variables)
    n_cols = min(4, len(variables))
    n_rows = int(np.ceil(len(variables) / n_cols))
    fig, axes = plt.subplots(n_rows, n_cols, figsize=(3.2 * n_cols, 2.6 * n_rows), squeeze=False)
    horizons = np.arange(bands.spec.horizon + 1)
    mid = len(bands.spec.quantiles) // 2

    for ax, name in zip(axes.ravel(), variables):
        i = bands.index(name)
        ax.fill_between(horizons, bands.lower(name), bands.upper(name), alpha=0.25, linewidth=0)
        ax.plot(horizons, bands.responses[i, :, mid], linewidth=1.8)
        ax.axhline(0.0, linewidth=0.8, color="black")
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("Quarters", fontsize=9)
        ax.tick_params(labelsize=8)
    for ax in axes.ravel()[len(variables):]:
        ax.set_visible(False)

    label = ", ".join(bands.shutdown) if bands.shutdown else "baseline"
    fig.suptitle(title or f"{bands.spec.scale:+g} shock to {bands.spec.shock_variable} ({label})", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote band chart to {path}")
    return Path(path)
