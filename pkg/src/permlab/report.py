"""CSV tables and JSON sidecars for experiment results.

CSV columns follow :data:`permlab.experiments.COLUMNS` exactly. Floats are
written with 17 significant digits so they reload bit-for-bit; missing values
are empty cells. Wall-clock time lives only in the sidecar, which keeps the
CSV byte-identical between reruns.
"""

from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

from .experiments import COLUMNS


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_cell(row[c]) for c in COLUMNS])


_INT_COLS = {"n", "modes", "L1", "L2", "L", "matrix", "n_matrices"}
_STR_COLS = {"experiment", "method", "d"}


def _parse(col, text):
    if text == "":
        return None
    if col in _STR_COLS:
        return text
    if col == "aggregated":
        return text == "true"
    if col in _INT_COLS:
        return int(text)
    return float(text)


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [{c: _parse(c, t) for c, t in zip(header, line)} for line in reader]


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(".json") if p.suffix == ".csv" else p.with_name(p.name + ".json")


def write_json(path, rows, cfg, wall_time_s, version) -> None:
    doc = {
        "config": cfg.to_dict(),
        "library_version": version,
        "python": platform.python_version(),
        "wall_time_s": wall_time_s,
        "columns": list(COLUMNS),
        "rows": [{c: row[c] for c in COLUMNS} for row in rows],
    }
    Path(path).write_text(json.dumps(doc, indent=1))
