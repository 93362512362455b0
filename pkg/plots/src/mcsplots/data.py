"""Parsers for the two artifact formats this tool consumes.

Result CSVs carry the fixed header
``n,c,p,source,regime,throughput,tail_null_fraction`` and trace files are
line-oriented: ``tick <t> proc <id> block <kind> cost <units>``.  Both come
from the prediction/simulation toolkit; this package treats the file formats
as the contract and has no code dependency on it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

EXPECTED_HEADER = ["n", "c", "p", "source", "regime", "throughput", "tail_null_fraction"]


class SchemaError(ValueError):
    """An input file does not match the expected schema."""


@dataclass(frozen=True)
class CurvePoint:
    n: int
    c: float
    p: float
    source: str
    throughput: float


def load_points(paths: list[str | Path]) -> list[CurvePoint]:
    points: list[CurvePoint] = []
    for path in paths:
        text = Path(path).read_text()
        reader = csv.reader(text.splitlines())
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        if header != EXPECTED_HEADER:
            raise SchemaError(f"{path}: header {header!r} != {EXPECTED_HEADER!r}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                points.append(
                    CurvePoint(
                        n=int(rec[0]), c=float(rec[1]), p=float(rec[2]),
                        source=rec[3], throughput=float(rec[5]),
                    )
                )
            except (IndexError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return points


@dataclass(frozen=True)
class TraceBlock:
    tick: float
    pid: int
    kind: str
    cost: float

    @property
    def end(self) -> float:
        return self.tick + self.cost


def load_trace(path: str | Path) -> list[TraceBlock]:
    blocks: list[TraceBlock] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split()
        if (
            len(parts) != 8
            or parts[0] != "tick"
            or parts[2] != "proc"
            or parts[4] != "block"
            or parts[6] != "cost"
        ):
            raise SchemaError(f"{path}:{lineno}: malformed trace line {raw!r}")
        try:
            blocks.append(
                TraceBlock(float(parts[1]), int(parts[3]), parts[5], float(parts[7]))
            )
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if not blocks:
        raise SchemaError(f"{path}: trace is empty")
    return blocks
