"""Figure rendering for benchmark reports.

Three figures accompany the delimited output: per-division runtime boxplots,
stacked stage-time bars for a couple of representative scenarios, and the
score distribution against the baseline engine.  All render to files through
the Agg backend; nothing opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import BASELINE_ENGINE, ENGINE_PDHG, ENGINES

STAGE_COLUMNS = ["presolve_ms", "relaxation_ms", "crossover_ms", "branch_and_bound_ms"]
STAGE_LABELS = ["presolve", "relaxation", "crossover", "branch & bound"]
ENGINE_COLORS = {ENGINE_PDHG: "tab:blue", BASELINE_ENGINE: "tab:orange"}


def _ok_rows(rows):
    return [r for r in rows if not str(r["status"]).startswith("error:")]


def runtime_boxplot(rows: list[dict], path: str | Path) -> Path:
    """Total-runtime distribution per division group, one box per engine."""
    rows = _ok_rows(rows)
    groups = sorted({r["group"] for r in rows})
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(groups), 4.0))
    width = 0.35
    for k, engine in enumerate(ENGINES):
        data = [
            [float(r["total_ms"]) for r in rows
             if r["group"] == g and r["engine"] == engine]
            for g in groups
        ]
        positions = [i + (k - 0.5) * width for i in range(len(groups))]
        box = ax.boxplot(
            [d or [np.nan] for d in data], positions=positions, widths=width * 0.9,
            patch_artist=True, medianprops={"color": "black"},
        )
        for patch in box["boxes"]:
            patch.set_facecolor(ENGINE_COLORS[engine])
            patch.set_alpha(0.7)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups)
    ax.set_ylabel("total time [ms]")
    ax.set_xlabel("division group")
    handles = [plt.Rectangle((0, 0), 1, 1, facecolor=ENGINE_COLORS[e], alpha=0.7)
               for e in ENGINES]
    ax.legend(handles, ENGINES, frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def stage_breakdown(rows: list[dict], path: str | Path,
                    max_scenarios: int = 2) -> Path:
    """Stacked stage-time bars, engines side by side, for the first few
    scenarios (total runtime decomposed into the four pipeline stages)."""
    rows = _ok_rows(rows)
    names = []
    for r in rows:
        if r["scenario"] not in names:
            names.append(r["scenario"])
        if len(names) >= max_scenarios:
            break
    fig, axes = plt.subplots(1, max(len(names), 1),
                             figsize=(4.0 * max(len(names), 1), 4.0), squeeze=False)
    for ax, name in zip(axes[0], names):
        for k, engine in enumerate(ENGINES):
            sel = [r for r in rows if r["scenario"] == name and r["engine"] == engine]
            if not sel:
                continue
            stages = [np.mean([float(r[col]) for r in sel]) for col in STAGE_COLUMNS]
            bottom = 0.0
            for value, label in zip(stages, STAGE_LABELS):
                ax.bar(k, value, bottom=bottom,
                       label=label if k == 0 else None)
                bottom += value
        ax.set_xticks(range(len(ENGINES)))
        ax.set_xticklabels([e.replace("_", "\n") for e in ENGINES], fontsize=8)
        ax.set_ylabel("time [ms]")
        ax.set_title(name, fontsize=9)
    axes[0][0].legend(fontsize=7, frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def score_histogram(scores: dict[str, float], path: str | Path) -> Path:
    """Distribution of per-scenario quality scores around 1.0."""
    values = list(scores.values())
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    if values:
        # Explicit edges keep the histogram valid when every score ties at 1.
        lo = min(min(values), 0.999)
        hi = max(max(values), 1.001)
        ax.hist(values, bins=np.linspace(lo, hi, 22), color="tab:blue", alpha=0.8)
        ax.axvline(1.0, color="black", linestyle="--", linewidth=1)
    ax.set_xlabel("score (baseline / candidate objective)")
    ax.set_ylabel("scenarios")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_all(rows: list[dict], scores: dict[str, float],
               out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        runtime_boxplot(rows, out / "runtimes_boxplot.png"),
        stage_breakdown(rows, out / "stage_breakdown.png"),
        score_histogram(scores, out / "score_distribution.png"),
    ]
