"""PNG figures for sweep metrics: observed rounds and link passes against their caps."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = {"B1": "#003a7d", "B2": "#ff9d3a", "B3": "#d83034"}
# per-link caps as multiples of g
PASS_CAPS = {"sweep": (4, 0), "semi_selection": (10, -3), "semi_gathering": (4, -1),
             "achievement": (4, 0)}
OWNER = {"sweep": "B2", "semi_selection": "B3", "semi_gathering": "B3", "achievement": "B3"}
# fixed metadata keeps the files byte-stable across runs
_META = {"Software": None, "Creation Time": None}


def load_metrics(path) -> list:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key, value in row.items():
            if value.lstrip("-").isdigit():
                row[key] = int(value)
    return rows


def _rounds_figure(rows, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for tag in sorted({r["variant"] for r in rows}):
        sub = [r for r in rows if r["variant"] == tag]
        ax.scatter([r["round_cap"] for r in sub], [r["rounds"] for r in sub],
                   s=10, alpha=0.6, color=COLORS.get(tag), label=tag)
    top = max((r["round_cap"] for r in rows), default=1)
    ax.plot([0, top], [0, top], color="grey", lw=1, ls="--", label="cap")
    ax.set_xlabel("round cap")
    ax.set_ylabel("observed rounds")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def _passes_figure(rows, path: Path) -> Path:
    worst = defaultdict(int)     # (phase, g) -> max observed passes
    for r in rows:
        for phase in PASS_CAPS:
            if r["variant"] == OWNER[phase]:
                worst[phase, r["g"]] = max(worst[phase, r["g"]], r[f"max_pass_{phase}"])
    phases = [p for p in PASS_CAPS if any(q == p for (q, _) in worst)]
    fig, axes = plt.subplots(1, max(len(phases), 1), figsize=(3.2 * max(len(phases), 1), 3.2),
                             squeeze=False)
    for ax, phase in zip(axes[0], phases):
        gs = sorted({g for (p, g) in worst if p == phase})
        a, b = PASS_CAPS[phase]
        ax.bar(gs, [worst[phase, g] for g in gs], color="#008dff", label="observed")
        ax.plot(gs, [a * g + b for g in gs], "k_", ms=18, mew=2, label="cap")
        ax.set_title(phase.replace("_", " "))
        ax.set_xlabel("g")
        ax.set_xticks(gs)
    axes[0][0].set_ylabel("max passes over one link")
    axes[0][0].legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def render_figures(rows: list, out: Path) -> list:
    out = Path(out)
    return [_rounds_figure(rows, out / "rounds_vs_cap.png"),
            _passes_figure(rows, out / "link_passes.png")]
