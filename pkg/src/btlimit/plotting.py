"""Static figures for the experiment harness.

Figures are written as SVG with a fixed hash salt and no date stamp, so
reruns give identical files.  Every plotted series is also written to CSV by
the caller; the figures are presentation only.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

theme_color = "#333333"
btlimit_rc = {
    "font.size": 9,
    "axes.edgecolor": theme_color,
    "axes.labelcolor": theme_color,
    "axes.linewidth": 0.6,
    "axes.grid": True,
    "grid.color": "#bbbbbb",
    "grid.linewidth": 0.4,
    "grid.alpha": 0.7,
    "xtick.color": theme_color,
    "ytick.color": theme_color,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8,
    "legend.framealpha": 1,
    "legend.edgecolor": theme_color,
    "svg.hashsalt": "btlimit",
    "svg.fonttype": "path",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_observation(t, true, noisy, path, epsilon: float):
    """True segment and its noisy observation on [-T, T]."""
    with plt.rc_context(btlimit_rc):
        fig, ax = plt.subplots(figsize=(6, 3.2))
        ax.plot(t, noisy, ".", ms=2.5, color="#999999", label="noisy data")
        ax.plot(t, true, "-", color="k", label="true signal")
        ax.set_xlabel("t (s)")
        ax.set_title(f"observation, max error {epsilon:g}")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_extrapolation(t, true, extrapolated, path, t_half: float):
    with plt.rc_context(btlimit_rc):
        fig, ax = plt.subplots(figsize=(6, 3.2))
        ax.axvspan(-t_half, t_half, color="#eeeeee", lw=0)
        ax.plot(t, true, "-", color="k", label="true signal")
        ax.plot(t, extrapolated, "--", color="C3", label="MNS extrapolation")
        ax.set_xlabel("t (s)")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_sweep(epsilons, mean_max_error, mean_ratio, path):
    """Max extrapolation error (dashed) and R(eps) (dash-dot) against eps."""
    with plt.rc_context(btlimit_rc):
        fig, ax = plt.subplots(figsize=(6, 3.6))
        ax.plot(epsilons, mean_max_error, "--o", ms=3, color="k", label="max |f - f~|")
        ax.plot(epsilons, mean_ratio, "-.s", ms=3, color="C0", label="R(eps) = max error / eps^(1/3)")
        ax.set_xscale("log")
        ax.set_xlabel("eps")
        ax.legend(loc="best")
        return _save(fig, path)


def plot_spectrum(freqs, power, bands, path):
    with plt.rc_context(btlimit_rc):
        fig, ax = plt.subplots(figsize=(6, 3.2))
        for lo, hi in bands:
            ax.axvspan(lo, hi, color="#dde8f5", lw=0)
        ax.semilogy(freqs, np.maximum(power, 1e-300), color="k", lw=0.8)
        peak = float(np.max(power)) if np.max(power) > 0 else 1.0
        ax.set_ylim(peak * 1e-12, peak * 2)
        ax.set_xlabel("omega (rad/s)")
        ax.set_ylabel("windowed power")
        return _save(fig, path)


def plot_basis(t, values, path):
    with plt.rc_context(btlimit_rc):
        fig, ax = plt.subplots(figsize=(6, 3.6))
        for k, row in enumerate(values):
            ax.plot(t, row, lw=0.9, label=f"phi_{k}")
        ax.set_xlabel("t (s)")
        ax.legend(loc="upper right", ncol=2)
        return _save(fig, path)
