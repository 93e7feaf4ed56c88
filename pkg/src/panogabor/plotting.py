"""Matplotlib figures written next to the CLI's numeric outputs.

Figures are built on :class:`matplotlib.figure.Figure` directly (no pyplot
state) and saved without a software/date stamp so identical inputs give
identical files.
"""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .gabor import DISTORTION_MODES, distortion_profile
from .geometry import latitudes

_METADATA = {"Software": None}


def _figure(width=6.0, height=None):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    fig = Figure(figsize=(width, height or width * golden), dpi=100)
    FigureCanvasAgg(fig)
    return fig


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=_METADATA)


def loss_trace_figure(trace, path, title="gradient descent"):
    fig = _figure()
    ax = fig.add_subplot()
    ax.plot(np.arange(len(trace)), trace, lw=1.5)
    ax.set_xlabel("step")
    ax.set_ylabel("total loss")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    _save(fig, path)


def distortion_profile_figure(height, path, highlight="linear"):
    """Coefficient against latitude for every distortion mode."""
    lat = np.degrees(latitudes(height))
    fig = _figure()
    ax = fig.add_subplot()
    for mode in DISTORTION_MODES:
        c = np.atleast_1d(distortion_profile(height, mode))
        marker = "o" if height < 16 else None
        ax.plot(lat, c, lw=2.0 if mode == highlight else 1.0, marker=marker, label=mode)
    ax.set_xlabel("latitude (deg)")
    ax.set_ylabel("distortion coefficient")
    ax.legend(frameon=False)
    _save(fig, path)


def bank_figure(bank, path):
    """The eight kernels of one bank on a shared symmetric colour scale."""
    k = bank.kernels
    lim = float(np.abs(k).max()) or 1.0
    fig = _figure(8.0, 1.6)
    for i in range(k.shape[0]):
        ax = fig.add_subplot(1, k.shape[0], i + 1)
        ax.imshow(k[i], cmap="RdBu_r", vmin=-lim, vmax=lim, interpolation="nearest")
        ax.set_title(f"{np.degrees(bank.params.thetas[i]):.1f}\N{DEGREE SIGN}", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    _save(fig, path)


def gradient_figure(depth, gx, gy, path):
    fig = _figure(10.0, 2.4)
    panels = [("depth (m)", depth, "viridis"), ("G_x", gx, "RdBu_r"), ("G_y", gy, "RdBu_r")]
    for i, (title, data, cmap) in enumerate(panels):
        ax = fig.add_subplot(1, 3, i + 1)
        if cmap == "RdBu_r":
            lim = float(np.abs(data).max()) or 1.0
            im = ax.imshow(data, cmap=cmap, vmin=-lim, vmax=lim)
        else:
            im = ax.imshow(data, cmap=cmap)
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.025)
    _save(fig, path)
