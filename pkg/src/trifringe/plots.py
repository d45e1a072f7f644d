"""File-rendered figures for the report paths (no interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .detection import Histogram
from .estimation import FitResult
from .interference import FringeSeries


def fringe_figure(
    raw: FringeSeries,
    fit: FitResult | None,
    accidental_level: float,
    path,
    net: FringeSeries | None = None,
):
    """Coincidence fringe with fit overlay and the accidental floor."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(raw.phases, raw.values, "o", ms=3.5, color="#1f77b4", label="raw coincidences")
    if net is not None:
        ax.plot(net.phases, net.values, ".", ms=2.5, color="#2ca02c", alpha=0.6, label="net")
    if fit is not None and fit.converged:
        dense = np.linspace(raw.phases[0], raw.phases[-1], 1200)
        ax.plot(dense, fit.model_values(dense), "-", lw=1.2, color="#d62728", label="fit")
    if accidental_level > 0:
        ax.axhline(accidental_level, color="0.4", lw=1.0, ls="--", label="accidental level")
    j, k, _ = raw.channel
    ax.set_xlabel("scan phase (rad)")
    ax.set_ylabel("counts per point")
    ax.set_title(f"central-peak fringe, channel ({j},{k})")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def histogram_figure(hist: Histogram, path):
    """Arrival-time-difference histogram per channel plus the channel sum."""
    centers_ns = hist.bin_centers() * 1e9
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    total = hist.counts.sum(axis=(0, 1))
    ax.step(centers_ns, total, where="mid", color="k", lw=1.4, label="all channels")
    for j in range(3):
        for k in range(3):
            ax.step(centers_ns, hist.counts[j, k], where="mid", lw=0.6, alpha=0.45)
    half_window_ns = hist.timing.window / 2 * 1e9
    for peak in (-2, -1, 0, 1, 2):
        center = peak * hist.timing.delta_tau * 1e9
        ax.axvspan(center - half_window_ns, center + half_window_ns, color="y", alpha=0.08)
    ax.set_xlabel("arrival-time difference (ns)")
    ax.set_ylabel("counts per bin")
    ax.set_title("coincidence time-of-arrival histogram")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def qkd_figure(lambdas, error_rates, path):
    """Trit error rate versus the noise mixing weight."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    lam = np.asarray(lambdas, dtype=float)
    ax.plot(lam, error_rates, "o-", color="#1f77b4", label="simulated")
    dense = np.linspace(0, 1, 200)
    ax.plot(dense, 2.0 / 3.0 * (1.0 - dense), "--", color="0.5", lw=1.0, label="2/3 (1 - lambda)")
    ax.set_xlabel("noise mixing weight")
    ax.set_ylabel("sifted trit error rate")
    ax.set_ylim(-0.02, 0.72)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
