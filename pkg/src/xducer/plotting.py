"""SVG figures for the CLI reports.

Figures are written with the Agg backend and fixed SVG metadata so that
reruns on identical inputs give identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "xducer",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.linewidth": 0.8,
    "figure.figsize": (5.0, 3.6),
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_swap(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        t_ns = np.asarray(result.times) * 1e9
        ax.plot(t_ns, result.pop_qubit, label="qubit")
        ax.plot(t_ns, result.pop_phonon, label="phonon")
        ax.set_xlabel("time (ns)")
        ax.set_ylabel("occupation")
        ax.set_title(f"swap, eta_pe = {result.eta_pe:.4f}")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_readout_sweep(rows, n_max: float, path):
    """Scatter of eta_om over (n_o, tau) with the n_added = n_max boundary."""
    arr = np.asarray(rows, dtype=float)
    n_o, tau, eta, noise = arr[:, 0], arr[:, 1] * 1e9, arr[:, 3], arr[:, 4]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        sc = ax.scatter(tau, n_o, c=eta, s=14, cmap="viridis", vmin=0.0)
        fig.colorbar(sc, ax=ax, label="eta_om")
        nu, tu = np.unique(n_o), np.unique(tau)
        if len(nu) > 1 and len(tu) > 1 and len(arr) == len(nu) * len(tu):
            grid = noise.reshape(len(nu), len(tu))
            if grid.min() < n_max < grid.max():
                cs = ax.contour(tu, nu, grid, levels=[n_max], colors="crimson", linewidths=1.2)
                ax.clabel(cs, fmt={n_max: f"n_added = {n_max:g}"}, fontsize=7)
        ax.set_xlabel("pulse duration tau (ns)")
        ax.set_ylabel("intracavity photons n_o")
        fig.tight_layout()
        return _save(fig, path)


def plot_hybridization(points, path, color_by: str = "g_om"):
    """Mode frequencies vs piezo frequency, coloured by |g_om| or |g_pe|."""
    if color_by not in ("g_om", "g_pe"):
        raise ValueError("color_by must be 'g_om' or 'g_pe'")
    xs, ys, cs = [], [], []
    best_x, best_y = [], []
    for p in points:
        for i, m in enumerate(p.modes):
            xs.append(p.piezo_freq / 1e9)
            ys.append(m.freq / 1e9)
            cs.append(abs(getattr(m, color_by)) / (1e3 if color_by == "g_om" else 1e6))
        if p.best is not None:
            best_x.append(p.piezo_freq / 1e9)
            best_y.append(p.modes[p.best].freq / 1e9)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        sc = ax.scatter(xs, ys, c=cs, s=10, cmap="magma_r" if color_by == "g_om" else "viridis")
        fig.colorbar(sc, ax=ax, label="|g_om| (kHz)" if color_by == "g_om" else "|g_pe| (MHz)")
        if best_x:
            ax.plot(best_x, best_y, "k--", lw=0.8, label="max g_om mode")
            ax.legend(frameon=False, loc="upper left")
        ax.set_xlabel("bare piezo frequency (GHz)")
        ax.set_ylabel("mode frequency (GHz)")
        fig.tight_layout()
        return _save(fig, path)
