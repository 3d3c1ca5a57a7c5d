"""Deterministic table emission.

CSV is the primary output (diffable, plottable); JSON mirrors carry the
same rows plus metadata.  Floats are written as decimal with 12
significant digits and '\n' line endings, so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            raise ValueError("NaN is never a table value")
        if value == math.inf:
            return "inf"
        if value == -math.inf:
            return "-inf"
        return f"{value:.12g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, float):
        if value == math.inf:
            return "inf"
        if value == -math.inf:
            return "-inf"
        return float(fmt(value))
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item"):               # numpy scalars
        return _jsonable(value.item())
    return value


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def json_obj(self) -> dict:
        return {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [[_jsonable(v) for v in row] for row in self.rows],
            "metadata": _jsonable(self.metadata),
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def write_json(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(json.dumps(self.json_obj(), indent=2, sort_keys=True))
            fh.write("\n")
