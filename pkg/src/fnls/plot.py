"""Standalone SVG charts: reduced value vs iteration, fiber profile, boundary-max strip."""

from __future__ import annotations

import io
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .report import atomic_write_text

# fixed ids and no date stamp keep the SVG byte-stable
matplotlib.rcParams["svg.hashsalt"] = "fnls"
matplotlib.rcParams["svg.fonttype"] = "none"


def _svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def energy_chart(history, title: str = "reduced value") -> str:
    """history rows: (iteration, reduced_value, tangent_res, pohozaev_res, lambda)."""
    arr = np.asarray(history, dtype=float)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.plot(arr[:, 0], arr[:, 1], marker="o", ms=3)
    ax1.set_ylabel("F")
    ax1.set_title(title)
    ax2.semilogy(arr[:, 0], np.maximum(arr[:, 2], 1e-300), marker="o", ms=3, label="tangent residual")
    ax2.semilogy(arr[:, 0], np.maximum(np.abs(arr[:, 3]), 1e-300), marker="s", ms=3, label="|Pohozaev|")
    ax2.set_xlabel("iteration")
    ax2.legend()
    fig.tight_layout()
    return _svg(fig)


def fiber_chart(hs, values, h_star: float | None = None, title: str = "F(h * u)") -> str:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(hs, values)
    if h_star is not None:
        ax.axvline(h_star, color="k", ls="--", lw=0.8)
    ax.axhline(0.0, color="0.6", lw=0.5)
    ax.set_xlabel("h")
    ax.set_ylabel("F")
    ax.set_title(title)
    fig.tight_layout()
    return _svg(fig)


def boundary_strip(hs, angles, values, title: str = "F on the side of Q") -> str:
    """values[i, j] at (angle i, h j)."""
    fig, ax = plt.subplots(figsize=(6, 2.5))
    im = ax.imshow(np.asarray(values), aspect="auto", origin="lower",
                   extent=(hs[0], hs[-1], angles[0], angles[-1]), cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("h")
    ax.set_ylabel("direction index")
    ax.set_title(title)
    fig.tight_layout()
    return _svg(fig)


def write_svg(text: str, path: str | os.PathLike) -> None:
    atomic_write_text(path, text)
