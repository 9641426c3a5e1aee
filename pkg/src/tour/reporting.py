"""Downstream report rendering: per-query CSV summary and figures.

Run reports stay machine-readable JSON lines; this module turns one into
a flat delimited summary and a set of PNG charts for eyeballing a run.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ExperimentReport

SUMMARY_FIELDS = [
    "query_id",
    "method",
    "iterations_used",
    "stop_reason",
    "backend_calls",
    "cache_hits",
    "top1_context_id",
    "top1_final_score",
    "top1_answer_match",
    "first_relevant_rank",
    "wall_ms",
    "error",
]


def first_relevant_rank(row: dict) -> int | None:
    for entry in row.get("entries", ()):
        if entry.get("relevant"):
            return entry["rank"]
    return None


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Flatten report rows to one delimited-friendly record each."""
    out = []
    for row in rows:
        entries = row.get("entries", ())
        top1 = entries[0] if entries else {}
        out.append(
            {
                "query_id": row.get("query_id", ""),
                "method": row.get("method", ""),
                "iterations_used": row.get("iterations_used", 0),
                "stop_reason": row.get("stop_reason") or "",
                "backend_calls": row.get("backend_calls", 0),
                "cache_hits": row.get("cache_hits", 0),
                "top1_context_id": top1.get("context_id", ""),
                "top1_final_score": top1.get("final_score", ""),
                "top1_answer_match": row.get("top1_answer_match", False),
                "first_relevant_rank": first_relevant_rank(row) or "",
                "wall_ms": row.get("wall_ms", ""),
                "error": row.get("error", ""),
            }
        )
    return out


def write_summary_csv(report: ExperimentReport, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        writer.writeheader()
        writer.writerows(summarize_rows(report.rows))
    return path


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _metrics_figure(aggregate: dict, path: Path) -> Path | None:
    pairs = [(k, v) for k, v in aggregate.items() if k.startswith(("acc@", "mrr@"))]
    if not pairs:
        return None
    labels = [k for k, _ in pairs]
    values = [v for _, v in pairs]
    fig, ax = plt.subplots(figsize=(6, 4))
    bars = ax.bar(labels, values, color="#4878d0")
    ax.bar_label(bars, fmt="%.3f", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("metric value")
    ax.set_title(f"Retrieval metrics ({aggregate.get('method', 'run')})")
    return _save(fig, path)


def _iterations_figure(rows: list[dict], path: Path) -> Path:
    counts: dict[int, int] = {}
    for row in rows:
        t = int(row.get("iterations_used", 0))
        counts[t] = counts.get(t, 0) + 1
    xs = sorted(counts)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([str(x) for x in xs], [counts[x] for x in xs], color="#6acc64")
    ax.set_xlabel("iterations used")
    ax.set_ylabel("queries")
    ax.set_title("Optimization iterations per query")
    return _save(fig, path)


def _rank_figure(rows: list[dict], path: Path) -> Path:
    ranks = [first_relevant_rank(r) for r in rows]
    k = max((len(r.get("entries", ())) for r in rows), default=0)
    labels = [str(i) for i in range(1, k + 1)] + ["none"]
    counts = [0] * (k + 1)
    for r in ranks:
        counts[r - 1 if r is not None else k] += 1
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, counts, color="#d65f5f")
    ax.set_xlabel("rank of first relevant candidate")
    ax.set_ylabel("queries")
    ax.set_title("Where the first relevant candidate lands")
    return _save(fig, path)


def render_report(
    report: ExperimentReport, out_dir: str | Path, prefix: str = "report"
) -> list[Path]:
    """Write the CSV summary and figures; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [write_summary_csv(report, out / f"{prefix}_summary.csv")]
    fig = _metrics_figure(report.aggregate, out / f"{prefix}_metrics.png")
    if fig is not None:
        written.append(fig)
    written.append(_iterations_figure(report.rows, out / f"{prefix}_iterations.png"))
    written.append(_rank_figure(report.rows, out / f"{prefix}_ranks.png"))
    return written
