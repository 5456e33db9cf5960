"""Structured command output and benchmark CSV ingestion."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .fitting import ThroughputSample

log = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ReportDocument:
    """Everything a command produced, serializable to JSON and back."""

    command: str
    inputs: dict[str, Any]
    result: dict[str, Any]
    version: str = __version__
    seed: int | None = None
    notices: list[str] = field(default_factory=list)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(asdict(self), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls(**json.loads(text))


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_samples(text: str) -> tuple[list[ThroughputSample], list[str]]:
    """Parse ``p,throughput`` rows; a non-numeric first row is taken as a header.

    Blank lines and ``#`` comments are skipped.  Repeated ``p`` values are
    averaged and reported in the returned notices.
    """
    rows: dict[int, list[float]] = {}
    first = True
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in row]
        if first:
            first = False
            if not all(_is_number(f) for f in fields[:2]):
                continue
        if len(fields) != 2:
            raise ParseError(f"expected 2 columns, got {len(fields)}", lineno)
        try:
            p_val = float(fields[0])
            x = float(fields[1])
        except ValueError:
            raise ParseError(f"non-numeric row {','.join(fields)!r}", lineno) from None
        if p_val != int(p_val) or p_val < 1:
            raise ParseError(f"p must be an integer >= 1, got {fields[0]!r}", lineno)
        if not (x > 0.0) or x == float("inf"):
            raise ParseError(f"throughput must be finite and > 0, got {fields[1]!r}", lineno)
        rows.setdefault(int(p_val), []).append(x)
    if not rows:
        raise ParseError("no data rows")
    notices = []
    samples = []
    for p_val in sorted(rows):
        xs = rows[p_val]
        if len(xs) > 1:
            notices.append(f"p={p_val}: averaged {len(xs)} duplicate rows")
        samples.append(ThroughputSample(p_val, sum(xs) / len(xs)))
    for note in notices:
        log.info(note)
    return samples, notices


def read_samples(path: str | Path) -> tuple[list[ThroughputSample], list[str]]:
    return parse_samples(Path(path).read_text())


def curve_csv(rows, header=("p", "capacity", "throughput")) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
