"""Closed-form throughput model for a coarse-grained operation under an MCS lock.

The operation alternates a lock-protected critical section of ``c`` work units
with an unsynchronized parallel section of ``p`` work units, executed by ``n``
symmetric processes that each complete ``alpha`` work units per time unit.
Memory costs follow a symmetric MESI-style cache model with three constants:
``w`` for any write or uncontended atomic swap/CAS, ``r_invalid`` for a read
of a line that is invalid in the reader's cache, and ``r_modified`` for a read
that hits the reader's own cache (modified, exclusive or shared state).

Two steady states have exact closed forms:

* contended (the lock queue never empties): each operation hands the lock off
  along the queue, so one operation completes per ``c + 2*r_invalid + w`` work
  units regardless of ``n`` and ``p``;
* free (every acquirer finds the lock free): each process runs independently
  with a per-operation cost of ``p + c + r_modified + 4*w``.

The two regime conditions leave a window of ``p`` values between
``p_low = (n-1)*(c + 2*r_invalid + w) - 4*w`` and
``p_high = (n-1)*(c + 2*r_invalid + w) + r_invalid - r_modified - 2*w``
where neither steady state holds; there the predictor linearly interpolates
between the regime values at the window edges, which keeps the predicted
curve continuous in ``p``.  (A slightly smaller upper bound, lower by
``2*(r_invalid - r_modified)``, can also be derived for schedule feasibility;
we use the conservative, larger bound throughout.)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class InvalidMeasurementError(ValueError):
    """A throughput measurement cannot be turned into an alpha estimate."""


@dataclass(frozen=True)
class MachineConstants:
    """Calibrated cost model of one machine.

    alpha: work units completed per time unit by one process.
    w: cost of any write, and of an uncontended swap or CAS.
    r_invalid: cost of reading a cache line that is invalid locally.
    r_modified: cost of reading a line already valid in the reader's cache.
    x_contended: cost of a contended swap or CAS; only the simulator's
        startup phase ever exercises it, and it defaults to ``w``.
    """

    alpha: float
    w: float
    r_invalid: float
    r_modified: float
    x_contended: float | None = None

    def __post_init__(self) -> None:
        for name in ("alpha", "w", "r_invalid", "r_modified"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.x_contended is None:
            object.__setattr__(self, "x_contended", float(self.w))
        else:
            object.__setattr__(self, "x_contended", float(self.x_contended))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.w > 0:
            raise ValueError(f"w must be positive, got {self.w}")
        if not self.r_modified > 0:
            raise ValueError(f"r_modified must be positive, got {self.r_modified}")
        if self.r_invalid < self.w:
            raise ValueError(
                f"r_invalid ({self.r_invalid}) must be >= w ({self.w}); "
                "a coherence miss cannot be cheaper than a write"
            )
        if self.r_invalid < self.r_modified:
            raise ValueError(
                f"r_invalid ({self.r_invalid}) must be >= r_modified ({self.r_modified})"
            )
        if self.x_contended < self.w:
            raise ValueError(
                f"x_contended ({self.x_contended}) must be >= w ({self.w})"
            )

    def scaled(self, k: float) -> "MachineConstants":
        """All cost constants and alpha multiplied by ``k`` (unit change)."""
        return MachineConstants(
            self.alpha * k, self.w * k, self.r_invalid * k,
            self.r_modified * k, self.x_contended * k,
        )


# Sample calibrations from two 16-core machines, handy as CLI presets and in
# tests: an Intel Xeon Gold 6230 and an AMD Opteron 6378.
INTEL_XEON_6230 = MachineConstants(alpha=4.04e5, w=15.0, r_invalid=30.0, r_modified=15.0)
AMD_OPTERON_6378 = MachineConstants(alpha=1.24e5, w=20.0, r_invalid=35.0, r_modified=15.0)

MACHINE_PRESETS = {
    "intel": INTEL_XEON_6230,
    "amd": AMD_OPTERON_6378,
}


@dataclass(frozen=True)
class Workload:
    """One experiment point: n processes, critical work c, parallel work p."""

    n: int
    c: float
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "p", float(self.p))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")


class Regime(enum.Enum):
    CONTENDED = "contended"
    FREE = "free"
    TRANSITION = "transition"

    def __str__(self) -> str:  # CSV-friendly
        return self.value


@dataclass(frozen=True)
class Prediction:
    """Regime label plus predicted throughput (operations per time unit)."""

    regime: Regime
    throughput: float
    p_low: float
    p_high: float


def handoff_period(m: MachineConstants, c: float) -> float:
    """Serial work per operation while the lock queue is non-empty."""
    return c + 2.0 * m.r_invalid + m.w


def free_cycle(m: MachineConstants, c: float, p: float) -> float:
    """Per-process work per operation when every acquisition finds the lock free."""
    return p + c + m.r_modified + 4.0 * m.w


def transition_window(m: MachineConstants, n: int, c: float) -> tuple[float, float]:
    """Bounds of the parallel-section sizes between the two pure regimes.

    Returns ``(p_low, p_high)``: the operation is contended for p <= p_low and
    free for p >= p_high.  Both bounds are clamped below at zero; for n == 1
    the window collapses (a single process never contends).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    base = (n - 1) * handoff_period(m, c)
    p_low = max(0.0, base - 4.0 * m.w)
    p_high = max(0.0, base + m.r_invalid - m.r_modified - 2.0 * m.w)
    # r_invalid >= r_modified makes the raw upper bound exceed the raw lower
    # bound by r_invalid - r_modified + 2w > 0, so clamping preserves order.
    assert p_low <= p_high
    return p_low, p_high


def classify_regime(m: MachineConstants, wl: Workload) -> Regime:
    """Which steady state (if any) the workload falls in.

    Boundary points belong to the pure regimes.  The free check runs first so
    that a degenerate window (p_low == p_high) classifies its single point as
    free: with an empty window that point is p == 0 and n == 1-like, where the
    lock is never contended.
    """
    p_low, p_high = transition_window(m, wl.n, wl.c)
    if wl.p >= p_high:
        return Regime.FREE
    if wl.p <= p_low:
        return Regime.CONTENDED
    return Regime.TRANSITION


def throughput_contended(m: MachineConstants, c: float) -> float:
    """Operations per time unit when the lock queue never empties.

    Independent of the process count and the parallel-section size: the queue
    serializes everything, and each handoff costs c + 2*r_invalid + w.
    """
    if c < 0:
        raise ValueError(f"c must be >= 0, got {c}")
    return m.alpha / handoff_period(m, c)


def throughput_free(m: MachineConstants, wl: Workload) -> float:
    """Operations per time unit when every acquirer finds the lock free."""
    return m.alpha * wl.n / free_cycle(m, wl.c, wl.p)


def predict(m: MachineConstants, wl: Workload) -> Prediction:
    """Piecewise throughput prediction.

    Pure-regime points use the exact formulas; points inside the transition
    window interpolate linearly between the contended value at p_low and the
    free value at p_high, so the curve is continuous at both window edges.
    """
    p_low, p_high = transition_window(m, wl.n, wl.c)
    if wl.p >= p_high:
        return Prediction(Regime.FREE, throughput_free(m, wl), p_low, p_high)
    if wl.p <= p_low:
        return Prediction(Regime.CONTENDED, throughput_contended(m, wl.c), p_low, p_high)
    t_low = throughput_contended(m, wl.c)
    t_high = throughput_free(m, replace(wl, p=p_high))
    t = t_low + (wl.p - p_low) * (t_high - t_low) / (p_high - p_low)
    return Prediction(Regime.TRANSITION, t, p_low, p_high)


def estimate_alpha(p: float, f: float, t: float, n: int) -> float:
    """Work-rate estimate from a lock-free run: p*f / (t*n).

    ``f`` operations of ``p`` work units each were completed by ``n``
    processes in ``t`` time units.  Longer runs give tighter estimates.
    """
    if t <= 0:
        raise InvalidMeasurementError(f"elapsed time must be positive, got {t}")
    if n < 1:
        raise InvalidMeasurementError(f"process count must be >= 1, got {n}")
    if f < 0:
        raise InvalidMeasurementError(f"operation count must be >= 0, got {f}")
    return p * f / (t * n)


def sweep(
    m: MachineConstants, n: int, c: float, p_values: list[float]
) -> list[tuple[float, Prediction]]:
    """predict() over an ordered list of parallel-section sizes."""
    if not p_values:
        raise ValueError("p_values must be non-empty")
    return [(p, predict(m, Workload(n=n, c=c, p=p))) for p in p_values]
