"""Static SVG figures of eigenvalue tracks."""

import logging
import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "specflow"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..exceptions import ParameterError  # noqa: E402
from .enumeration import TrackSet, lift_track, split_simple  # noqa: E402

logger = logging.getLogger(__name__)


def _track_points(ts: TrackSet, track):
    idx = np.flatnonzero(track.active)
    lo = max(int(idx[0]) - 1, 0)
    hi = min(int(idx[-1]) + 1, ts.size - 1)
    values = np.asarray(lift_track(track, ts.space))[lo:hi + 1]
    if ts.space.is_circular:
        return np.cos(values), np.sin(values)
    if ts.space.is_complex:
        return np.real(values), np.imag(values)
    return ts.params[lo:hi + 1], np.real(values)


def plot_tracks(ts: TrackSet, path: str, thetas: Optional[Sequence[float]] = None,
                title: Optional[str] = None) -> str:
    """
    Circle spaces: unit circle, one polyline per simple track, rays at the given angles.
    Line spaces plot value against parameter, plane spaces the complex trajectories.
    """
    if thetas is not None and len(thetas) and not ts.space.is_circular:
        raise ParameterError("Theta rays only make sense on the circle")
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        if ts.space.is_circular:
            grid = np.linspace(0.0, 2.0 * np.pi, 361)
            ax.plot(np.cos(grid), np.sin(grid), color="0.7", linewidth=1.0)
            if ts.space.is_quotient:
                for start, end in ts.space.essential.pieces:
                    arc = np.linspace(start, end, 64)
                    ax.plot(np.cos(arc), np.sin(arc), color="black", linewidth=3.0)
            else:
                ax.plot([np.cos(ts.space.basepoint)], [np.sin(ts.space.basepoint)], "ko")
            for theta in (thetas if thetas is not None else ()):
                ax.plot([0.0, 1.2 * np.cos(theta)], [0.0, 1.2 * np.sin(theta)],
                        color="tab:red", linewidth=0.6, linestyle="--")
            ax.set_aspect("equal")
            ax.set_xlim(-1.3, 1.3)
            ax.set_ylim(-1.3, 1.3)
        colors = plt.get_cmap("tab10")
        for k, track in enumerate(split_simple(ts).tracks):
            xs, ys = _track_points(ts, track)
            ax.plot(xs, ys, color=colors(k % 10), linewidth=1.2)
        if title:
            ax.set_title(title)
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.info(f"Wrote {path}")
    return path
