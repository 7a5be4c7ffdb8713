"""Flattening search reports to delimited text and rendering them as
figures.

Both outputs are canonical: the CSV uses the same 17-significant-digit
float form as the JSON documents, and figures are rendered with fixed
geometry and stripped metadata so identical reports produce identical
bytes.
"""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .documents import format_float
from .search import SearchReport


def _rows(report: SearchReport) -> list[tuple[str, str]]:
    shape = report.shape
    parties = ";".join(f"{a}x{o}" for a, o in shape.parties)
    order = report.best_ordered.order
    return [
        ("environment_id", report.environment_id),
        ("mode", report.mode),
        ("gamma", format_float(report.gamma)),
        ("seed", str(report.seed)),
        ("budget", str(report.budget)),
        ("shape_memory", str(shape.memory)),
        ("shape_parties", parties),
        ("shape_horizon", "" if shape.horizon is None else str(shape.horizon)),
        ("candidates_total", str(report.counts.total)),
        ("candidates_valid", str(report.counts.valid)),
        ("candidates_ordered", str(report.counts.ordered)),
        ("best_general_value", format_float(report.best_general.value)),
        ("best_ordered_value", format_float(report.best_ordered.value)),
        (
            "best_ordered_order",
            "" if order is None else ">".join(str(i) for i in order.order),
        ),
        ("advantage", format_float(report.advantage)),
        (
            "best_general_table",
            " ".join(
                str(c) for e in report.best_general.strategy.table.entries for c in e
            ),
        ),
        (
            "best_ordered_table",
            " ".join(
                str(c) for e in report.best_ordered.strategy.table.entries for c in e
            ),
        ),
    ]


def flatten_report(report: SearchReport) -> str:
    """Two-column field,value CSV of one search report."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("field", "value"))
    writer.writerows(_rows(report))
    return buffer.getvalue()


def write_csv(report: SearchReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(flatten_report(report))


def render_figure(report: SearchReport, path) -> None:
    """Bar charts of the search outcome: best values by strategy class and
    candidate counts on a log scale, written as a PNG."""
    fig, (ax_value, ax_count) = plt.subplots(1, 2, figsize=(8, 3.5), dpi=100)

    names = ("ordered", "general")
    values = (report.best_ordered.value, report.best_general.value)
    bars = ax_value.bar(names, values, color=("#777777", "#2a6f97"))
    ax_value.bar_label(bars, labels=[format_float(v) for v in values], fontsize=8)
    ax_value.set_title("best strategy value")
    ax_value.set_ylabel(f"objective (gamma={format_float(report.gamma)})")

    count_names = ("total", "valid", "ordered")
    counts = (report.counts.total, report.counts.valid, report.counts.ordered)
    bars = ax_count.bar(count_names, counts, color="#888888")
    ax_count.bar_label(bars, labels=[str(c) for c in counts], fontsize=8)
    ax_count.set_yscale("log")
    ax_count.set_title(f"candidates ({report.mode})")

    env_label = report.environment_id or "(unnamed environment)"
    fig.suptitle(f"advantage {format_float(report.advantage)} on {env_label}", fontsize=10)
    fig.tight_layout()
    # metadata is stripped so renders of equal reports are byte-identical
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
