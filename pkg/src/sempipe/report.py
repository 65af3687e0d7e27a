"""Render evaluation results as CSV, aligned text tables, and figures."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .errors import MalformedInput
from .evaluation import EvalReport, fitness_score

REPORT_COLUMNS = ["model", "f1", "precision", "recall", "map50", "map50_95", "fitness"]
_REQUIRED = {"model", "precision", "recall", "map50", "map50_95"}


def report_row(model: str, rep: EvalReport) -> dict:
    return {
        "model": model,
        "f1": rep.f1,
        "precision": rep.precision,
        "recall": rep.recall,
        "map50": rep.map50,
        "map50_95": rep.map50_95,
        "fitness": rep.fitness,
    }


def write_eval_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in REPORT_COLUMNS})


def write_per_image_csv(rep: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "tp", "fp", "fn"])
        for c in rep.per_image:
            writer.writerow([c.image_id, c.tp, c.fp, c.fn])


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def read_eval_csv(text: str) -> list[dict]:
    """Parse evaluation rows; recomputes f1/fitness when missing."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not _REQUIRED.issubset(reader.fieldnames):
        raise MalformedInput(
            f"report input needs columns {sorted(_REQUIRED)}"
        )
    rows = []
    for rec in reader:
        try:
            row = {"model": rec["model"]}
            for key in ("precision", "recall", "map50", "map50_95"):
                row[key] = float(rec[key])
            f1 = rec.get("f1")
            p, r = row["precision"], row["recall"]
            row["f1"] = float(f1) if f1 else (
                2 * p * r / (p + r) if p + r > 0 else 0.0
            )
            fit = rec.get("fitness")
            row["fitness"] = (
                float(fit) if fit else fitness_score(row["map50"], row["map50_95"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad report row {rec!r}") from exc
        rows.append(row)
    return rows


def format_report(rows: list[dict], fmt: str = "csv") -> str:
    """Six metric columns in table order, 3-decimal cells."""
    cells = [[row["model"]] + [f"{row[c]:.3f}" for c in REPORT_COLUMNS[1:]] for row in rows]
    if fmt == "csv":
        out = [",".join(REPORT_COLUMNS)]
        out += [",".join(c) for c in cells]
        return "\n".join(out) + "\n"
    if fmt == "table":
        widths = [
            max(len(REPORT_COLUMNS[i]), *(len(c[i]) for c in cells)) if cells else len(REPORT_COLUMNS[i])
            for i in range(len(REPORT_COLUMNS))
        ]
        lines = ["  ".join(h.ljust(w) for h, w in zip(REPORT_COLUMNS, widths))]
        for c in cells:
            lines.append("  ".join(v.ljust(w) for v, w in zip(c, widths)))
        return "\n".join(lines) + "\n"
    raise MalformedInput(f"unknown report format {fmt!r}")


def render_figures(rows: list[dict], out_dir) -> list[Path]:
    """Grouped bar chart of the six metrics per model, written as PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = REPORT_COLUMNS[1:]
    models = [row["model"] for row in rows]
    x = np.arange(len(models))
    bar_w = 0.8 / len(metrics)

    fig, ax = plt.subplots(figsize=(max(6, 1.5 * len(models)), 4))
    for i, m in enumerate(metrics):
        ax.bar(x + (i - (len(metrics) - 1) / 2) * bar_w, [row[m] for row in rows],
               width=bar_w, label=m)
    ax.set_xticks(x)
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.legend(fontsize=8, ncol=3)
    fig.tight_layout()
    path = out / "metrics.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
