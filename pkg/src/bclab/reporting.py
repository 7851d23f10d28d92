"""Serialization of series and reports: CSV, JSON, and rendered figures.

CSV series use the fixed columns (n, value_num, value_den, value_float) so
downstream tools get both the exact rational and a float view. JSON output
is deterministic: keys are sorted, rationals appear as "num/den" strings,
and floats use their shortest round-trip form. Figures are PNG renderings
of the same series, written next to the delimited output.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .probability import ratio_str


def json_ready(obj):
    """Recursively convert a report payload into JSON-serializable data."""
    if isinstance(obj, Fraction):
        return ratio_str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {_key(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_json_dict"):
            return obj.to_json_dict()
        return json_ready(dataclasses.asdict(obj))
    if hasattr(obj, "to_json_dict"):
        return obj.to_json_dict()
    return obj


def _key(k):
    if isinstance(k, enum.Enum):
        return k.value
    if isinstance(k, (int, float, Fraction)):
        return str(k)
    return k


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_series_csv(path, rows: Iterable[tuple[int, Fraction]]) -> Path:
    """Write one series with the fixed (n, value_num, value_den, value_float)
    columns; float inputs are recorded through their exact dyadic value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "value_num", "value_den", "value_float"])
        for n, value in rows:
            if isinstance(value, float):
                value = Fraction(value)
            writer.writerow(
                [n, value.numerator, value.denominator, repr(float(value))]
            )
    return path


def read_series_csv(path) -> list[tuple[int, Fraction]]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["n", "value_num", "value_den", "value_float"]:
            raise ValueError(f"unexpected series header {header}")
        for row in reader:
            out.append((int(row[0]), Fraction(int(row[1]), int(row[2]))))
    return out


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_series_figure(path, title: str, series: Mapping[str, Iterable], *, ylabel: str = "value") -> Path:
    """Line chart of one or more (n, value) series."""
    plt = _pyplot()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for label, rows in series.items():
        rows = list(rows)
        xs = [n for n, _ in rows]
        ys = [float(v) for _, v in rows]
        ax.plot(xs, ys, lw=1.4, label=label)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


_VERDICT_COLORS = {
    "holds-at-horizon": "#2e7d32",
    "fails-at-horizon": "#c62828",
    "inconclusive": "#9e9e9e",
}
_VERDICT_MARKS = {
    "holds-at-horizon": "H",
    "fails-at-horizon": "F",
    "inconclusive": "?",
}


def render_verdict_matrix(path, cells: Mapping[str, Mapping[str, object]]) -> Path:
    """Colored model-by-condition verdict grid."""
    plt = _pyplot()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    models = list(cells)
    conditions = list(next(iter(cells.values())))
    fig, ax = plt.subplots(
        figsize=(1.1 * len(conditions) + 2.0, 0.6 * len(models) + 1.6)
    )
    for yi, model in enumerate(models):
        for xi, cond in enumerate(conditions):
            cell = cells[model][cond]
            verdict = getattr(cell, "verdict", cell)
            value = getattr(verdict, "value", str(verdict))
            ax.add_patch(
                plt.Rectangle(
                    (xi, len(models) - 1 - yi),
                    1,
                    1,
                    color=_VERDICT_COLORS.get(value, "#9e9e9e"),
                    alpha=0.75,
                )
            )
            mark = _VERDICT_MARKS.get(value, "?")
            method = getattr(cell, "method", None)
            if method is not None and getattr(method, "value", method) == "monte-carlo":
                mark += "*"
            ax.text(
                xi + 0.5,
                len(models) - 1 - yi + 0.5,
                mark,
                ha="center",
                va="center",
                fontsize=10,
                color="white",
            )
    ax.set_xlim(0, len(conditions))
    ax.set_ylim(0, len(models))
    ax.set_xticks([i + 0.5 for i in range(len(conditions))])
    ax.set_xticklabels(conditions, fontsize=9)
    ax.set_yticks([len(models) - 1 - i + 0.5 for i in range(len(models))])
    ax.set_yticklabels(models, fontsize=9)
    ax.set_title("verdicts at horizon (H holds, F fails, ? inconclusive, * Monte Carlo)")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in name)


def write_experiment_outputs(
    report, out_dir, *, fmt: str = "both", figures: bool = True
) -> list[Path]:
    """Emit an experiment report: JSON summary, per-series CSVs, figures."""
    out_dir = Path(out_dir)
    written = []
    if fmt in ("json", "both"):
        written.append(write_json(out_dir / f"{report.name}.json", report))
    if fmt in ("csv", "both"):
        for name, rows in report.series.items():
            written.append(
                write_series_csv(out_dir / f"{report.name}__{_safe(name)}.csv", rows)
            )
    if figures:
        for name, rows in report.series.items():
            if not rows:
                continue
            written.append(
                render_series_figure(
                    out_dir / f"{report.name}__{_safe(name)}.png",
                    f"{report.name}: {name}",
                    {name: rows},
                )
            )
    return written


def write_condition_outputs(
    reports, out_dir, *, prefix: str, fmt: str = "both", figures: bool = True
) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    if fmt in ("json", "both"):
        payload = [r.to_json_dict() for r in reports]
        written.append(write_json(out_dir / f"{prefix}__conditions.json", payload))
    for report in reports:
        stem = f"{prefix}__{report.condition.value}"
        if fmt in ("csv", "both") and report.diagnostics:
            written.append(
                write_series_csv(out_dir / f"{stem}.csv", report.diagnostics)
            )
        if figures and report.diagnostics:
            written.append(
                render_series_figure(
                    out_dir / f"{stem}.png",
                    f"{report.condition.value} diagnostics ({report.verdict.value})",
                    {report.condition.value: report.diagnostics},
                )
            )
    return written


def write_sweep_outputs(
    result, out_dir, *, fmt: str = "both", figures: bool = True
) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    if fmt in ("json", "both"):
        written.append(write_json(out_dir / "sweep.json", result))
    if fmt in ("csv", "both"):
        path = out_dir / "sweep_matrix.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        conditions = [c.value for c in next(iter(result.matrix.values()))]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model"] + conditions)
            for model, row in result.matrix.items():
                writer.writerow(
                    [model] + [row[key].verdict.value for key in row]
                )
        written.append(path)
    if figures:
        written.append(render_verdict_matrix(out_dir / "sweep_matrix.png", result.cells()))
    return written
