"""Per-process timeline strips from a simulator trace.

Critical-section blocks render blue, parallel-section blocks red, lock
bookkeeping (writes, atomics, spins) a neutral gray, giving the execution
schedule at a glance: staircases when the lock is free, a solid serialized
band of back-to-back critical sections when it is contended.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import load_trace  # noqa: E402

CRITICAL_KIND = "local_work.critical"
PARALLEL_KIND = "local_work.parallel"

COLOR_CRITICAL = "tab:blue"
COLOR_PARALLEL = "tab:red"
COLOR_NEUTRAL = "0.8"

_DETERMINISTIC_RC = {
    "svg.hashsalt": "mcsplots",
    "svg.fonttype": "none",
}


def block_color(kind: str) -> str:
    if kind == CRITICAL_KIND:
        return COLOR_CRITICAL
    if kind == PARALLEL_KIND:
        return COLOR_PARALLEL
    return COLOR_NEUTRAL


@dataclass(frozen=True)
class TimelineSummary:
    path: Path
    processes: tuple[int, ...]
    blocks_drawn: int
    critical_intervals: tuple[tuple[float, float, int], ...]  # (start, end, pid)


def render_timeline(trace_path: str | Path, out_path: str | Path) -> TimelineSummary:
    """Draw one horizontal strip per process; returns what was drawn."""
    blocks = load_trace(trace_path)
    pids = sorted({b.pid for b in blocks})
    row = {pid: i for i, pid in enumerate(pids)}

    with plt.rc_context(_DETERMINISTIC_RC):
        fig, ax = plt.subplots(figsize=(10, 0.6 * len(pids) + 1.5))
        drawn = 0
        for b in blocks:
            if b.cost <= 0:
                continue
            ax.broken_barh(
                [(b.tick, b.cost)], (row[b.pid] - 0.4, 0.8),
                facecolors=block_color(b.kind), edgecolors="none",
            )
            drawn += 1
        ax.set_yticks(range(len(pids)))
        ax.set_yticklabels([f"proc {pid}" for pid in pids])
        ax.set_xlabel("ticks (work units)")
        ax.set_ylim(-0.6, len(pids) - 0.4)
        fig.tight_layout()
        out = Path(out_path)
        meta = {"Date": None} if out.suffix == ".svg" else {}
        fig.savefig(out, metadata=meta)
        plt.close(fig)

    crit = tuple(
        sorted(
            (b.tick, b.end, b.pid)
            for b in blocks
            if b.kind == CRITICAL_KIND and b.cost > 0
        )
    )
    return TimelineSummary(
        path=Path(out_path),
        processes=tuple(pids),
        blocks_drawn=drawn,
        critical_intervals=crit,
    )
