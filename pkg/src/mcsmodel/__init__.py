"""Throughput prediction, simulation and calibration for MCS-locked operations."""

from .model import (
    AMD_OPTERON_6378,
    INTEL_XEON_6230,
    MACHINE_PRESETS,
    MachineConstants,
    Prediction,
    Regime,
    Workload,
    classify_regime,
    estimate_alpha,
    predict,
    sweep,
    throughput_contended,
    throughput_free,
    transition_window,
)
from .sim import (
    LockState,
    SimResult,
    access_cost,
    extract_schedule,
    format_trace,
    simulate,
)

__all__ = [
    "AMD_OPTERON_6378",
    "INTEL_XEON_6230",
    "MACHINE_PRESETS",
    "LockState",
    "MachineConstants",
    "Prediction",
    "Regime",
    "SimResult",
    "Workload",
    "access_cost",
    "classify_regime",
    "estimate_alpha",
    "extract_schedule",
    "format_trace",
    "predict",
    "simulate",
    "sweep",
    "throughput_contended",
    "throughput_free",
    "transition_window",
]
