"""CSV tables with a versioned schema line, and JSON run manifests."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        # repr of a plain float round-trips exactly; nan and inf stay readable
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    return v


def write_csv(path, schema: str, columns: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write ``rows`` under a ``# schema: <schema>`` line and a header row.

    Returns the number of data rows written.
    """
    n = 0
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
            writer.writerow([_fmt(v) for v in row])
            n += 1
    return n


def read_csv(path):
    """``(schema, header, rows)`` with rows as lists of strings."""
    with Path(path).open(newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# schema: "):
            raise ValueError(f"{path} has no schema line")
        reader = csv.reader(fh)
        header = next(reader)
        return first[len("# schema: "):], header, list(reader)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: list[str]
    config: dict
    seed: int | None
    version: str
    started: str = field(default_factory=_now)
    finished: str | None = None
    outputs: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def add_output(self, path, rows: int):
        self.outputs[Path(path).name] = rows

    def write(self, path) -> Path:
        self.finished = _now()
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))
