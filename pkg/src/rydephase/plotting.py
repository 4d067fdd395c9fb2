"""Line-chart figures written next to the CSV/JSON results."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MHZ = 2 * np.pi * 1e6

plt.rcParams.update(
    {
        "font.size": 10,
        "axes.linewidth": 0.8,
        "lines.linewidth": 1.4,
        "figure.figsize": (5.0, 3.4),
        "svg.hashsalt": "rydephase",
        "savefig.bbox": "tight",
    }
)


def _save(fig, path):
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_echo_curves(curves, path):
    fig, ax = plt.subplots()
    for c in curves:
        label = f"N={c.n_atoms}, $\\Omega\\tau$={c.tau:g}"
        x = c.tau_p / c.tau
        if c.stderr is not None and np.any(c.stderr > 0):
            ax.errorbar(x, c.n_r, yerr=c.stderr, marker="o", ms=3, capsize=2, label=label)
        else:
            ax.plot(x, c.n_r, marker="o", ms=3, label=label)
    ax.set_xlabel(r"$\tau_p / \tau$")
    ax.set_ylabel(r"$N_R(\tau)$")
    ax.legend(fontsize=7, frameon=False)
    return _save(fig, path)


def plot_spectrum(spectrum, path, fit_curve=None):
    fig, ax = plt.subplots()
    axis_label = r"$\delta_p$" if spectrum.scan_axis.value == "probe_detuning" else r"$\delta_c$"
    ax.plot(spectrum.detuning / MHZ, spectrum.im_rho_ge, marker=".", lw=1, label="data")
    if fit_curve is not None:
        ax.plot(spectrum.detuning / MHZ, fit_curve, "--", label="fit")
        ax.legend(frameon=False)
    ax.set_xlabel(axis_label + r" / ($2\pi\times$MHz)")
    ax.set_ylabel(r"Im($\rho_{ge}$)")
    return _save(fig, path)


def plot_power_law(points, fit, path):
    fig, ax = plt.subplots()
    x = np.array([p.max_nr for p in points])
    y = np.array([p.gamma_d for p in points])
    ax.loglog(x, y, "s", ms=4, label="data")
    grid = np.geomspace(x.min(), x.max(), 50)
    ax.loglog(grid, fit(grid), "k--", label=f"$a_c$={fit.prefactor:.3g}, b={fit.exponent:.3g}")
    ax.set_xlabel(r"max($N_R$)")
    ax.set_ylabel(r"$\gamma_d$")
    ax.legend(frameon=False)
    return _save(fig, path)
