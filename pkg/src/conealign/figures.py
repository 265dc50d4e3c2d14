"""Matplotlib figures rendered next to the benchmark report files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ExperimentReport

__all__ = ["render_report_figures"]


def render_report_figures(report: ExperimentReport, outdir: str | Path) -> list[Path]:
    """Write summary bars and (when available) validation curves as PNG files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [_summary_bars(report, outdir / "regret_summary.png")]
    curves = _validation_curves(report, outdir / "val_regret.png")
    if curves is not None:
        written.append(curves)
    return written


def _summary_bars(report: ExperimentReport, path: Path) -> Path:
    summary = report.summary()
    methods = list(report.config.methods)
    regs = [summary[m]["regret_mean"] for m in methods]
    reg_err = [summary[m]["regret_std"] for m in methods]
    secs = [summary[m]["time_mean"] for m in methods]
    sec_err = [summary[m]["time_std"] for m in methods]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    pos = np.arange(len(methods))
    ax1.bar(pos, regs, yerr=reg_err, capsize=3, color="tab:blue")
    ax1.set_xticks(pos, methods, rotation=30, ha="right")
    ax1.set_ylabel("test regret (%)")
    ax2.bar(pos, secs, yerr=sec_err, capsize=3, color="tab:orange")
    ax2.set_xticks(pos, methods, rotation=30, ha="right")
    ax2.set_ylabel("training time (s)")
    fig.suptitle(f"{report.config.problem}, deg {report.config.deg}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _validation_curves(report: ExperimentReport, path: Path) -> Path | None:
    curves: dict[str, list[list[float]]] = {}
    for cell in report.cells:
        vals = [row.val_regret for row in cell.epoch_rows]
        if vals and all(math.isfinite(v) for v in vals):
            curves.setdefault(cell.method, []).append(vals)
    if not curves:
        return None

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, runs in curves.items():
        width = min(len(r) for r in runs)
        mean = 100.0 * np.mean([r[:width] for r in runs], axis=0)
        ax.plot(range(1, width + 1), mean, marker="o", markersize=3, label=method)
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation regret (%)")
    ax.set_title(f"{report.config.problem}, deg {report.config.deg}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
