"""Deterministic SVG output through matplotlib's Agg backend."""

from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "gazemodal"
plt.rcParams["svg.fonttype"] = "none"


def save_svg(fig, path: Union[str, Path]) -> Path:
    """Write ``fig`` as SVG without a timestamp and close it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path
