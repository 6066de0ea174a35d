"""Tabular experiment output.

Rows hold only values that are a pure function of the config, so the CSV of
a rerun is byte-identical.  The timestamp lives in the metadata file alone.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np


def format_value(v):
    """CSV cell text: floats at 17 significant digits, integers and strings as-is."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v) + 0.0, ".17g")  # no "-0"
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


@dataclass
class Table:
    columns: list
    rows: list

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


@dataclass
class ExperimentResult:
    """Main table (one row per grid point) plus side tables and a summary.

    ``summary`` holds derived scalars (fitted slopes, pass flags and the like).
    ``metadata`` holds the config hash, seed, code version and timestamp.
    """

    name: str
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    plots: list = field(default_factory=list)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row of length {len(r)} for {len(self.columns)} columns")

    @property
    def table(self):
        return Table(self.columns, self.rows)

    def column(self, name):
        return self.table.column(name)

    def records(self):
        return self.table.records()

    def write(self, out_dir, fmt="csv"):
        """Write the tables and ``<name>_meta.json``; returns the written paths."""
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        tables = [(self.name, Table(self.columns, self.rows))]
        tables += [(f"{self.name}_{k}", t) for k, t in self.tables.items()]
        for stem, t in tables:
            if fmt == "csv":
                p = os.path.join(out_dir, stem + ".csv")
                write_csv(p, t.columns, t.rows)
            elif fmt == "json":
                p = os.path.join(out_dir, stem + ".json")
                with open(p, "w") as fh:
                    json.dump(_jsonable(t.records()), fh, indent=2)
                    fh.write("\n")
            else:
                raise ValueError(f"unknown format {fmt!r}")
            paths.append(p)
        p = os.path.join(out_dir, self.name + "_meta.json")
        with open(p, "w") as fh:
            json.dump(_jsonable({"metadata": self.metadata, "summary": self.summary,
                                 "columns": self.columns}), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(p)
        return paths


def make_metadata(config):
    from .. import __version__

    return {
        "experiment": config.experiment,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "parameters": config.parameters,
    }
