"""Report rendering: delimited outputs plus matplotlib figures.

Every evaluation artifact that lands on disk as CSV/JSONL gets a figure
rendered next to it; the Agg backend keeps output stable across runs.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def ensure_dir(path: str) -> None:
    if path:
        os.makedirs(path, exist_ok=True)


def write_jsonl(lines: Iterable[str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


# ----------------------------------------------------------------------
# evaluation table
# ----------------------------------------------------------------------


def format_eval_table(report: dict) -> str:
    """Fixed-width per-question table plus aggregate footer."""
    header = f"{'question_id':<24} {'hit':>4} {'f1':>8} {'paths':>6}  prediction"
    rows = [header, "-" * len(header)]
    for rec in report["records"]:
        top = rec["predictions"][0] if rec["predictions"] else "(none)"
        rows.append(
            f"{rec['question_id']:<24} {rec['hits_at_1']:>4.1f} {rec['f1']:>8.4f} "
            f"{rec['retained_count']:>6d}  {top}"
        )
    agg = report["aggregates"]
    rows.append("-" * len(header))
    rows.append(
        f"{'MEAN':<24} {agg['hits_at_1']:>4.2f} {agg['f1']:>8.4f} "
        f"{agg['retained_mean']:>6.2f}  over {agg['num_questions']} questions"
    )
    return "\n".join(rows) + "\n"


# ----------------------------------------------------------------------
# sweep CSV
# ----------------------------------------------------------------------

SWEEP_HEADER = ["value", "hits_at_1", "f1", "retained_mean"]


def write_sweep_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([repr(float(row[k])) for k in SWEEP_HEADER])


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------


def _new_axes(width: float = 6.0, height: float = 4.0):
    fig, ax = plt.subplots(figsize=(width, height), dpi=100)
    return fig, ax


def save_training_curve(epoch_losses: Sequence[float], path: str) -> None:
    fig, ax = _new_axes()
    ax.plot(range(1, len(epoch_losses) + 1), epoch_losses, marker="o", markersize=3)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean batch loss")
    ax.set_title("structural reasoner training")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_eval_figure(report: dict, path: str) -> None:
    agg = report["aggregates"]
    per_f1 = [rec["f1"] for rec in report["records"]]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4), dpi=100)
    ax1.bar(["Hits@1", "F1"], [agg["hits_at_1"], agg["f1"]], color=["#4878d0", "#ee854a"])
    ax1.set_ylim(0, 1.05)
    ax1.set_title("aggregates")
    for i, v in enumerate([agg["hits_at_1"], agg["f1"]]):
        ax1.text(i, v + 0.02, f"{v:.3f}", ha="center")
    ax2.hist(per_f1, bins=10, range=(0, 1), color="#6acc64", edgecolor="black")
    ax2.set_xlabel("per-question F1")
    ax2.set_ylabel("questions")
    ax2.set_title("F1 distribution")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_sweep_figure(rows: Sequence[dict], parameter: str, path: str) -> None:
    values = [row["value"] for row in rows]
    fig, ax = _new_axes()
    ax.plot(values, [row["hits_at_1"] for row in rows], marker="o", label="Hits@1")
    ax.plot(values, [row["f1"] for row in rows], marker="s", label="F1")
    ax.set_xlabel(parameter)
    ax.set_ylabel("metric")
    ax.set_ylim(-0.02, 1.05)
    twin = ax.twinx()
    retained = [row["retained_mean"] for row in rows]
    if all(not math.isnan(r) for r in retained):
        twin.plot(values, retained, marker="^", color="gray", alpha=0.6, label="retained")
        twin.set_ylabel("mean retained paths")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    ax.set_title(f"sweep over {parameter}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
