"""Throughput-vs-P curve rendering, one small multiple per (n, c) group."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import CurvePoint, SchemaError, load_points  # noqa: E402

# measured curves in blue, predictions in red; the simulator gets a third hue
DEFAULT_COLORS = {
    "measured": "tab:blue",
    "predicted": "tab:red",
    "simulated": "tab:green",
}

_DETERMINISTIC_RC = {
    "svg.hashsalt": "mcsplots",
    "svg.fonttype": "none",
    "path.simplify": False,
}


@dataclass(frozen=True)
class CurveSpec:
    """What to plot: input CSVs, grouping, series colors and axes."""

    csv_paths: tuple[str, ...]
    series_colors: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_COLORS))
    x_label: str = "parallel-section size P (work units)"
    y_label: str = "throughput (operations per time unit)"
    log_x: bool = True
    grid_mode: bool = False


@dataclass(frozen=True)
class RenderedFigure:
    path: Path
    n: int | None
    c: float | None
    points_per_source: dict[str, int]


def _group(points: list[CurvePoint]) -> dict[tuple[int, float], list[CurvePoint]]:
    groups: dict[tuple[int, float], list[CurvePoint]] = {}
    for pt in points:
        groups.setdefault((pt.n, pt.c), []).append(pt)
    return dict(sorted(groups.items()))


def _plot_group(ax, spec: CurveSpec, pts: list[CurvePoint]) -> dict[str, int]:
    counts: dict[str, int] = {}
    sources = sorted({pt.source for pt in pts})
    for source in sources:
        series = sorted(
            ((pt.p, pt.throughput) for pt in pts if pt.source == source)
        )
        counts[source] = len(series)
        color = spec.series_colors.get(source, "tab:gray")
        ax.plot(
            [p for p, _ in series], [t for _, t in series],
            marker=".", color=color, label=source,
        )
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.legend()
    return counts


def _save(fig, path: Path) -> None:
    # strip volatile metadata so identical inputs give identical bytes
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def render_curves(
    spec: CurveSpec, out_dir: str | Path, fmt: str = "svg"
) -> list[RenderedFigure]:
    """One figure per (n, c) group, every available source overlaid.

    Returns the written paths with per-source point counts so callers can
    confirm that no data point was dropped.  grid_mode renders all groups
    into a single figure (rows by n, columns by c) instead.
    """
    points = load_points(list(spec.csv_paths))
    groups = _group(points)
    if not groups:
        raise SchemaError("no data points after grouping")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rendered: list[RenderedFigure] = []
    with plt.rc_context(_DETERMINISTIC_RC):
        if spec.grid_mode:
            n_values = sorted({n for n, _ in groups})
            c_values = sorted({c for _, c in groups})
            fig, axes = plt.subplots(
                len(n_values), len(c_values),
                figsize=(4 * len(c_values), 3 * len(n_values)),
                squeeze=False,
            )
            totals: dict[str, int] = {}
            for i, n in enumerate(n_values):
                for j, c in enumerate(c_values):
                    ax = axes[i][j]
                    pts = groups.get((n, c), [])
                    if pts:
                        for source, count in _plot_group(ax, spec, pts).items():
                            totals[source] = totals.get(source, 0) + count
                    ax.set_title(f"n={n} c={c:g}")
            fig.tight_layout()
            path = out / f"curves_grid.{fmt}"
            _save(fig, path)
            rendered.append(RenderedFigure(path, None, None, totals))
        else:
            for (n, c), pts in groups.items():
                fig, ax = plt.subplots(figsize=(5, 4))
                counts = _plot_group(ax, spec, pts)
                ax.set_title(f"n={n} c={c:g}")
                fig.tight_layout()
                path = out / f"curves_n{n}_c{c:g}.{fmt}"
                _save(fig, path)
                rendered.append(RenderedFigure(path, n, c, counts))
    return rendered
