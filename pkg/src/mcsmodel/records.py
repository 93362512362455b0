"""The shared CSV row schema tying predictions, simulations and measurements.

Every command emits the same header so the three sources can be joined on
(n, c, p):

    n,c,p,source,regime,throughput,tail_null_fraction

``regime`` is only filled for predicted rows and ``tail_null_fraction`` only
for simulated rows; the other cells stay empty.  Floats are written with
``repr`` so files round-trip exactly and identical configs produce
byte-identical output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .errors import ConfigError

CSV_HEADER = ["n", "c", "p", "source", "regime", "throughput", "tail_null_fraction"]


@dataclass(frozen=True)
class ResultRow:
    n: int
    c: float
    p: float
    source: str  # predicted | simulated | measured
    throughput: float
    regime: str = ""
    tail_null_fraction: float | None = None


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_rows(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [r.n, _fmt(r.c), _fmt(r.p), r.source, r.regime,
             _fmt(r.throughput), _fmt(r.tail_null_fraction)]
        )
    return buf.getvalue()


def read_rows(text: str, where: str = "<csv>") -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError(f"{where}: empty CSV") from None
    if header != CSV_HEADER:
        raise ConfigError(
            f"{where}: unexpected CSV header {header!r}, want {CSV_HEADER!r}"
        )
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(CSV_HEADER):
            raise ConfigError(f"{where}:{lineno}: expected {len(CSV_HEADER)} cells")
        try:
            rows.append(
                ResultRow(
                    n=int(rec[0]),
                    c=float(rec[1]),
                    p=float(rec[2]),
                    source=rec[3],
                    regime=rec[4],
                    throughput=float(rec[5]),
                    tail_null_fraction=float(rec[6]) if rec[6] else None,
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{where}:{lineno}: {exc}") from None
    return rows
