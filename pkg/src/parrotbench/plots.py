"""Static SVG figures rendered next to the CSV outputs.

All figures are deterministic: fixed sizes, no timestamps, and a fixed hash
salt for SVG element ids, so identical inputs produce identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .experiments import PowerLawFit, ScalingRow

__all__ = [
    "save_figure",
    "forecast_overlay",
    "scaling_figure",
    "invariant_figure",
    "sweep_figure",
    "level_figure",
]

plt.rcParams["svg.hashsalt"] = "parrotbench"
plt.rcParams["figure.figsize"] = (8.0, 4.5)


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def forecast_overlay(
    context: np.ndarray,
    prediction: np.ndarray,
    truth: np.ndarray | None,
    path: str | Path,
    match_end: int | None = None,
    embed_dim: int | None = None,
    title: str = "",
) -> Path:
    """Context, truth, and forecast on one axis, with the matched motif and
    the query window shaded when the copying forecaster produced the result."""
    L = len(context)
    fig, ax = plt.subplots()
    ax.plot(np.arange(L), context, color="0.4", lw=0.9, label="context")
    t_fc = np.arange(L, L + len(prediction))
    if truth is not None:
        ax.plot(t_fc[: len(truth)], truth, color="0.7", lw=0.9, label="truth")
    ax.plot(t_fc, prediction, color="tab:blue", lw=1.1, label="forecast")
    if match_end is not None and embed_dim is not None:
        ax.axvspan(match_end - embed_dim, match_end, color="tab:orange", alpha=0.3,
                   label="matched motif")
        ax.axvspan(L - embed_dim, L, color="gold", alpha=0.3, label="query")
    ax.axvline(L, color="k", lw=0.6, ls=":")
    ax.set_xlabel("sample")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    return save_figure(fig, path)


def scaling_figure(
    per_system_pairs: dict[str, list[tuple[float, float]]],
    fits: dict[str, PowerLawFit],
    rows: Sequence[ScalingRow],
    path: str | Path,
) -> Path:
    """Log-log error-vs-context plot with fitted lines, plus the exponent
    against inverse correlation dimension."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.5))
    for system in sorted(per_system_pairs):
        pairs = per_system_pairs[system]
        Ls = np.array([p[0] for p in pairs], dtype=float)
        vals = np.array([p[1] for p in pairs], dtype=float)
        fit = fits[system]
        (line,) = ax1.loglog(Ls, vals, "o", ms=4)
        grid = np.geomspace(Ls.min(), Ls.max(), 50)
        ax1.loglog(
            grid,
            np.exp(fit.intercept) * grid ** (-fit.alpha),
            "-",
            color=line.get_color(),
            lw=1.0,
            label=f"{system}: alpha={fit.alpha:.2f}, r2={fit.r_squared:.2f}",
        )
    ax1.set_xlabel("context length")
    ax1.set_ylabel("one-step error")
    ax1.legend(fontsize=6)

    inv_d = [1.0 / r.d_cor for r in rows]
    alphas = [r.alpha_e for r in rows]
    ax2.plot(inv_d, alphas, "o")
    for r in rows:
        ax2.annotate(r.system, (1.0 / r.d_cor, r.alpha_e), fontsize=6)
    lim = [0, max(max(inv_d), max(alphas)) * 1.1]
    ax2.plot(lim, lim, "k:", lw=0.8)
    ax2.set_xlabel("1 / correlation dimension")
    ax2.set_ylabel("scaling exponent")
    fig.tight_layout()
    return save_figure(fig, path)


def invariant_figure(rows: Sequence[dict], path: str | Path) -> Path:
    """Invariant errors of long rollouts as a function of context length."""
    Ls = [r["L"] for r in rows]
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.6))
    for ax, key, label in zip(
        axes,
        ("hellinger_psd", "d_cor_error", "lyapunov_error"),
        ("spectral Hellinger distance", "correlation-dimension error",
         "Lyapunov-exponent error"),
    ):
        ax.semilogx(Ls, [r[key] for r in rows], "o-")
        ax.set_xlabel("context length")
        ax.set_ylabel(label)
    fig.tight_layout()
    return save_figure(fig, path)


def sweep_figure(
    medians: dict[tuple[str, int, str], dict[str, float]],
    metric_label: str,
    path: str | Path,
) -> Path:
    """Median metric against context length, one line per method, aggregated
    over systems."""
    methods = sorted({k[2] for k in medians})
    Ls = sorted({k[1] for k in medians})
    fig, ax = plt.subplots()
    for method in methods:
        ys = []
        for L in Ls:
            vals = [
                v["median"] for k, v in medians.items() if k[1] == L and k[2] == method
            ]
            ys.append(float(np.median(vals)))
        if len(Ls) > 1:
            ax.semilogx(Ls, ys, "o-", label=method)
        else:
            ax.plot(Ls, ys, "o", label=method)
    ax.set_xlabel("context length")
    ax.set_ylabel(metric_label)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return save_figure(fig, path)


def level_figure(
    tables: dict[float, dict], value_key: str, xlabel: str, ylabel: str,
    path: str | Path,
) -> Path:
    """Summary value per sweep level (noise or granularity), per method."""
    levels = sorted(tables)
    methods = sorted(next(iter(tables.values())))
    fig, ax = plt.subplots()
    for method in methods:
        ax.semilogx(levels, [tables[lv][method][value_key] for lv in levels],
                    "o-", label=method)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return save_figure(fig, path)
