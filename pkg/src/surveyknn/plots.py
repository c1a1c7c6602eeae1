"""Figure rendering for study results.

Every study's report consists of a long-format CSV plus one rendered
figure; these helpers draw the figures from StudyResult records and save
them to files (Agg backend, no display needed).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bounds import rate_bound
from .results import StudyResult


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_c4(result: StudyResult, path) -> Path:
    """Max balance ratio against population size, one line per design."""
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    designs = sorted({r.design for r in result.select(statistic="max_ratio")})
    styles = {"pps": "-", "srswor": "--", "stratified": "-."}
    for design in designs:
        records = result.select(statistic="max_ratio", design=design)
        sizes = sorted({r.N for r in records})
        means = [np.mean([r.value for r in records if r.N == N]) for N in sizes]
        ax.plot(sizes, means, styles.get(design, "-"), color="black", label=design)
    ax.set_xlabel("N")
    ax.set_ylabel("max ratio of overall to local sampling fraction")
    ax.legend()
    return _save(fig, path)


def plot_c9(result: StudyResult, path) -> Path:
    """Mean |conditional minus unconditional joint inclusion| against N."""
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    for statistic, style in (("mean_abs_rij_all", "-"), ("mean_abs_rij_offdiag", "--")):
        records = result.select(statistic=statistic)
        sizes = [r.N for r in records]
        ax.plot(sizes, [r.value for r in records], style, color="black",
                marker="o", markersize=3, label=statistic)
    ax.set_xlabel("N")
    ax.set_ylabel("mean absolute conditional shift")
    ax.legend()
    return _save(fig, path)


def _mse_boxplot(result: StudyResult, study: str, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    sizes = sorted({r.N for r in result.select(study=study, statistic="mse")})
    data = [result.values(study=study, statistic="mse", N=N) for N in sizes]
    positions = np.arange(1, len(sizes) + 1)
    ax.boxplot(data, positions=positions, widths=0.6)
    overlay = [result.value(study=study, statistic="rate_overlay", N=N) for N in sizes]
    ax.plot(positions, overlay, "--", color="black", label="adjusted rate shape")
    ax.set_xticks(positions)
    ax.set_xticklabels([str(N) for N in sizes])
    ax.set_xlabel("N")
    ax.set_ylabel("Monte Carlo MSE")
    ax.legend()
    return _save(fig, path)


def plot_consistency(result: StudyResult, path) -> Path:
    """Per-size boxplots of grid-point MSE with the adjusted rate overlay."""
    return _mse_boxplot(result, "consistency", path)


def plot_wine(result: StudyResult, path) -> Path:
    """Per-size boxplots of wine grid-point MSE with the adjusted rate overlay."""
    return _mse_boxplot(result, "wine", path)


def plot_rate_curves(d: int, path, n_values=None) -> Path:
    """Rate-shape curves at the balancing neighbor schedule over a size ladder."""
    from .bounds import kn_schedule

    n_values = np.asarray(n_values if n_values is not None else np.logspace(2, 5, 16), dtype=int)
    fig, ax = plt.subplots(figsize=(6.5, 3.5))
    values = [rate_bound(d, kn_schedule(d, int(n)), int(n), mode="shape") for n in n_values]
    ax.loglog(n_values, values, "-", color="black")
    ax.set_xlabel("n")
    ax.set_ylabel("rate shape at the balancing neighbor count")
    ax.set_title(f"d = {d}")
    return _save(fig, path)
