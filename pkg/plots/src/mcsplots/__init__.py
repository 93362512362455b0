"""Figures for the MCS throughput toolkit: curves and timeline strips."""

from .curves import CurveSpec, RenderedFigure, render_curves
from .data import SchemaError, load_points, load_trace
from .timeline import TimelineSummary, render_timeline

__all__ = [
    "CurveSpec",
    "RenderedFigure",
    "SchemaError",
    "TimelineSummary",
    "load_points",
    "load_trace",
    "render_curves",
    "render_timeline",
]
