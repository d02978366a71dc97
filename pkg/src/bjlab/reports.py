"""Structured campaign outcomes and their JSON / CSV serialisation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

PASS, WARN, FAIL = "PASS", "WARN", "FAIL"


def _clean(value):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if is_dataclass(value) and not isinstance(value, type):
        return _clean(asdict(value))
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_csv(path: Path, rows: list[dict]):
    path = Path(path)
    if not rows:
        path.write_text("")
        return
    fields = list(rows[0].keys())
    for row in rows[1:]:
        for k in row:
            if k not in fields:
                fields.append(k)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _clean(v) for k, v in row.items()})


@dataclass
class BoundReport:
    """Outcome of one verification campaign.

    ``thresholds`` holds every number the verdict was decided against, so the
    verdict can be re-derived from the report alone.
    """

    campaign: str
    verdict: str
    summary: dict
    thresholds: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict != FAIL

    def to_dict(self, include_cells: bool = False) -> dict:
        out = {
            "campaign": self.campaign,
            "verdict": self.verdict,
            "summary": self.summary,
            "thresholds": self.thresholds,
            "notes": self.notes,
            "provenance": self.provenance,
        }
        if include_cells:
            out["cells"] = self.cells
        return _clean(out)

    def write(self, out_dir, stem: str | None = None) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.campaign
        paths = [out_dir / f"{stem}.json"]
        paths[0].write_text(dumps(self.to_dict()))
        if self.cells:
            paths.append(out_dir / f"{stem}.csv")
            write_csv(paths[1], self.cells)
        return paths


def combine_verdicts(*verdicts: str) -> str:
    if FAIL in verdicts:
        return FAIL
    if WARN in verdicts:
        return WARN
    return PASS
