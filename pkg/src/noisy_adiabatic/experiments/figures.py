"""PNG figures next to the CSV output.

matplotlib is an optional extra (``pip install artifact[figures]``) and is
only imported when a figure is requested.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class FiguresUnavailable(RuntimeError):
    pass


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise FiguresUnavailable("figures need matplotlib: pip install 'artifact[figures]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    fig.clf()
    return path


def trajectory_figure(result, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(result.grid.t, np.abs(result.psi0), lw=1.2)
    ax.set_xlabel(r"$J_0 t$")
    ax.set_ylabel(r"$|\psi_0(t)|$")
    ax.set_ylim(0, 1.05)
    out = _save(fig, path)
    plt.close(fig)
    return out


def ensemble_figure(ens, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    t, m, se = ens.grid.t, ens.mean_abs_psi0, ens.stderr_abs
    ax.plot(t, m, lw=1.2, label=r"$\langle|\psi_0|\rangle$")
    ax.fill_between(t, m - 2 * se, m + 2 * se, alpha=0.3, lw=0)
    if ens.purity is not None:
        ax.plot(t, ens.purity, lw=1.0, ls="--", label="purity")
    ax.set_xlabel(r"$J_0 t$")
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False)
    out = _save(fig, path)
    plt.close(fig)
    return out


def time_scan_figure(report, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    T = [r["passage_time"] for r in report.rows]
    ax.plot(T, report.finals(), "o-")
    ax.axhline(report.target, color="grey", lw=0.8, ls=":")
    if report.threshold is not None:
        ax.axvline(report.threshold, color="grey", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel(r"$J_0 T$")
    ax.set_ylabel(r"$|\psi_0(T)|$")
    out = _save(fig, path)
    plt.close(fig)
    return out


def noise_scan_figure(report, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for row, ens in zip(report.rows, report.ensembles):
        ax.plot(ens.grid.t, ens.mean_abs_psi0, lw=1.0, label=rf"$\Gamma={row['gamma']:g}$")
    ax.set_xlabel(r"$J_0 t$")
    ax.set_ylabel(r"$\langle|\psi_0(t)|\rangle$")
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False, fontsize=8)
    out = _save(fig, path)
    plt.close(fig)
    return out
