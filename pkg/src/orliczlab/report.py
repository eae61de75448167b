"""Run-directory writer: delimited tables, JSON documents, ladder figures.

Every run of the command-line tool lands in one directory: the resolved
configuration, the check report, one CSV per table, and a PNG rendering of
each numeric ladder table.  The CSV and JSON writers are byte-deterministic
(sorted keys, 17-significant-digit floats, fixed line endings); repeated
runs with the same configuration must produce identical bytes.  Figures are
rendered with the Agg backend at fixed size and carry fixed metadata, but
the PNG encoder is free to change across library versions, so determinism
is only promised for the delimited output.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np


def jsonable(value):
    """Map a report value tree onto plain JSON types.

    Non-finite floats become the string marker "diverged" so documents never
    carry the nonstandard Infinity/NaN tokens.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else "diverged"
    return value


def write_json(path, payload) -> Path:
    path = Path(path)
    text = json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n")
    return path


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def write_csv(path, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([_format_cell(c) for c in row])
    return path


def _numeric(value):
    if isinstance(value, (bool, np.bool_, str)):
        return None
    try:
        v = float(value)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def render_ladder_figure(rows, path, title: str = ""):
    """Plot a header-plus-rows table as ladder curves; None if not plottable.

    The first column is the abscissa; every other numeric column becomes one
    line.  Non-finite entries are dropped point by point (the CSV keeps
    them), and decade-spanning positive axes switch to log scale.
    """
    header, data = rows[0], rows[1:]
    if len(header) < 2 or not data:
        return None
    xs = [_numeric(r[0]) for r in data]
    series = []
    for j in range(1, len(header)):
        pts = [
            (x, _numeric(r[j]))
            for x, r in zip(xs, data)
            if x is not None and _numeric(r[j]) is not None
        ]
        if len(pts) >= 2:
            series.append((str(header[j]), pts))
    if not series:
        return None

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, pts in series:
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    all_x = [p[0] for _, pts in series for p in pts]
    all_y = [p[1] for _, pts in series for p in pts]
    if min(all_x) > 0 and max(all_x) / min(all_x) >= 100.0:
        ax.set_xscale("log")
    if all_y and min(all_y) > 0 and max(all_y) / min(all_y) >= 100.0:
        ax.set_yscale("log")
    ax.set_xlabel(str(header[0]))
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": "orliczlab"})
    plt.close(fig)
    return path


def write_run(out_dir, config: dict, report: dict, tables: dict, figures: bool = True):
    """Write one run directory and return the written paths.

    Layout: config.json (resolved configuration echo), report.json, one
    ``<table>.csv`` per table, and a ``<table>.png`` next to each table that
    has something to plot.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        write_json(out / "config.json", config),
        write_json(out / "report.json", report),
    ]
    for name in sorted(tables):
        rows = tables[name]
        written.append(write_csv(out / f"{name}.csv", rows))
        if figures:
            fig_path = render_ladder_figure(rows, out / f"{name}.png", title=name)
            if fig_path is not None:
                written.append(fig_path)
    return written


def write_scenario_run(rep, out_dir, figures: bool = True):
    """Write a ScenarioReport's run directory (config echo names the scenario)."""
    config = dict(rep.config)
    config["scenario"] = rep.name
    return write_run(out_dir, config, rep.to_json_dict(), rep.tables, figures=figures)
