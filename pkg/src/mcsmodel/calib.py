"""Hardware calibration and the native MCS benchmark.

Measures the model constants on the current machine and runs the real,
atomics-based MCS-locked loop for validation.  All measurement kernels live
in the compiled ``_native`` extension (pinned pthreads, GIL released); this
module handles staging, unit conversion and reporting.

Units: the work unit is one iteration of the native counted loop, and alpha
is reported in work units per second per stream.  Line costs are measured in
nanoseconds per access and converted to work units through alpha, so model
predictions (operations per time unit, with alpha per second) compare
directly against measured operations per second.

Measurement protocols:

* alpha: n pinned streams run the bare counted loop, no lock, for the given
  duration; alpha = p * F / (T * n).
* w: timed uncontended atomic exchanges on a line owned by the issuing core.
* r_modified: a timed dependent pointer chase over padded lines the chasing
  core itself wrote (every hop is a local hit).
* r_invalid: the same chase over lines another pinned core wrote since the
  last visit, alternating ownership every round (every hop is a coherence
  miss).

Operator notes: results are only meaningful on an otherwise idle machine,
with one stream per physical core (hyperthread siblings are excluded from
the default pinning map) and frequency scaling pinned down beforehand.
Cross-socket pinning maps violate the symmetric-cache assumption; override
the map only with same-socket cores (``MCSMODEL_PIN_CORES=0,2,4``).
"""

from __future__ import annotations

import os
import statistics
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, HardwareError
from .model import MachineConstants, Workload, predict

PIN_ENV_VAR = "MCSMODEL_PIN_CORES"

DEFAULT_ALPHA_WORK_PER_OP = 10_000
DEFAULT_LINE_COST_ROUNDS = 1_000_000
DEFAULT_REPEATS = 5
MIN_BENCH_DURATION = 0.05


def _native():
    try:
        from . import _native as native
    except ImportError as exc:  # pragma: no cover - build always ships it
        raise HardwareError(
            f"native measurement backend unavailable ({exc}); "
            "reinstall the package with a C compiler present"
        ) from exc
    return native


def physical_cores() -> list[int]:
    """Default pinning map: one hyperthread sibling per physical core, all on
    the same socket.

    The cost model assumes symmetric caches, which hyperthread pairs and
    cross-socket traffic both break, so siblings are deduplicated and only the
    first socket's cores are used.  Setting MCSMODEL_PIN_CORES overrides the
    map entirely (cross-socket maps are then the operator's responsibility).
    Falls back to every visible CPU when the sysfs topology is unreadable.
    """
    env = os.environ.get(PIN_ENV_VAR)
    if env:
        try:
            cores = [int(tok) for tok in env.split(",") if tok.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"bad {PIN_ENV_VAR}: {exc}") from None
        if not cores:
            raise ConfigError(f"{PIN_ENV_VAR} is set but empty")
        return cores

    try:
        visible = sorted(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        visible = list(range(os.cpu_count() or 1))
    chosen: list[int] = []
    seen_groups: set[tuple[int, ...]] = set()
    first_socket: str | None = None
    for cpu in visible:
        topo = Path(f"/sys/devices/system/cpu/cpu{cpu}/topology")
        try:
            socket = (topo / "physical_package_id").read_text().strip()
        except OSError:
            socket = None
        if socket is not None:
            if first_socket is None:
                first_socket = socket
            elif socket != first_socket:
                continue
        try:
            text = (topo / "thread_siblings_list").read_text()
        except OSError:
            chosen.append(cpu)
            continue
        group = tuple(sorted(_parse_cpu_list(text)))
        if group in seen_groups:
            continue
        seen_groups.add(group)
        chosen.append(cpu)
    return chosen


def _parse_cpu_list(text: str) -> list[int]:
    cpus = []
    for tok in text.strip().split(","):
        if "-" in tok:
            lo, hi = tok.split("-")
            cpus.extend(range(int(lo), int(hi) + 1))
        elif tok:
            cpus.append(int(tok))
    return cpus


def pin_map(n: int) -> list[int]:
    cores = physical_cores()
    if n > len(cores):
        raise HardwareError(
            f"workload wants {n} pinned streams but only {len(cores)} usable "
            f"cores are available ({cores})"
        )
    return cores[:n]


@dataclass(frozen=True)
class MeasurementRecord:
    """One benchmark row: workload, duration, completed ops and throughput."""

    n: int
    c: float
    p: float
    duration: float  # seconds
    ops: int  # F, summed over all streams
    throughput: float  # operations per second

    def __post_init__(self) -> None:
        if self.throughput < 0:
            raise ValueError("throughput must be non-negative")


@dataclass(frozen=True)
class ConstantStats:
    samples: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.samples)

    @property
    def std(self) -> float:
        return statistics.stdev(self.samples) if len(self.samples) > 1 else 0.0


@dataclass(frozen=True)
class CalibrationReport:
    """Calibrated constants plus the evidence they were derived from."""

    alpha: ConstantStats
    w: ConstantStats
    r_invalid: ConstantStats
    r_modified: ConstantStats
    cores: int
    pinning: tuple[int, ...]
    timer_resolution_ns: float

    def to_constants(self) -> MachineConstants:
        """The MachineConstants this calibration implies; fails loudly when
        the measured values break the model's assumptions."""
        alpha, w = self.alpha.mean, self.w.mean
        r_i, r_m = self.r_invalid.mean, self.r_modified.mean
        if r_i < w:
            raise HardwareError(
                f"calibration invalid: r_invalid ({r_i:.3g}) < w ({w:.3g}); "
                "remote reads must not be cheaper than writes"
            )
        if r_i < r_m:
            raise HardwareError(
                f"calibration invalid: r_invalid ({r_i:.3g}) < r_modified ({r_m:.3g})"
            )
        try:
            return MachineConstants(alpha=alpha, w=w, r_invalid=r_i, r_modified=r_m)
        except ValueError as exc:
            raise HardwareError(f"calibration invalid: {exc}") from None

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(format_report(self))


def format_report(rep: CalibrationReport) -> str:
    lines = []
    for name, stats in (
        ("alpha", rep.alpha), ("w", rep.w),
        ("r_invalid", rep.r_invalid), ("r_modified", rep.r_modified),
    ):
        lines.append(f"{name}={stats.mean!r}")
        lines.append(f"{name}_samples={stats.count}")
        lines.append(f"{name}_std={stats.std!r}")
    lines.append(f"cores={rep.cores}")
    lines.append(f"pinning={','.join(str(c) for c in rep.pinning)}")
    lines.append(f"timer_resolution_ns={rep.timer_resolution_ns!r}")
    return "\n".join(lines) + "\n"


def parse_report_constants(path: str | os.PathLike) -> MachineConstants:
    """Read a key=value calibration report back as MachineConstants."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read constants file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        if "=" not in raw:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = raw.partition("=")
        values[key.strip()] = val.strip()
    try:
        kwargs = {
            "alpha": float(values["alpha"]),
            "w": float(values["w"]),
            "r_invalid": float(values["r_invalid"]),
            "r_modified": float(values["r_modified"]),
        }
    except KeyError as exc:
        raise ConfigError(f"{path}: missing constant {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "x_contended" in values:
        kwargs["x_contended"] = float(values["x_contended"])
    try:
        return MachineConstants(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _check_timer(duration: float) -> float:
    res_ns = float(_native().timer_resolution_ns())
    if res_ns >= duration * 1e9 * 1e-3:
        raise HardwareError(
            f"timer resolution {res_ns} ns is too coarse for a {duration}s run"
        )
    return res_ns


def measure_alpha(
    p: int = DEFAULT_ALPHA_WORK_PER_OP, n: int = 1, duration: float = 2.0
) -> float:
    """One alpha sample: run n pinned lock-free streams, return p*F/(T*n)."""
    if duration <= 0:
        raise ConfigError(f"duration must be positive, got {duration}")
    if p < 1:
        raise ConfigError(f"work per operation must be >= 1, got {p}")
    cores = pin_map(n)
    _check_timer(duration)
    try:
        elapsed, ops = _native().work_streams(tuple(cores), p, duration)
    except OSError as exc:
        raise HardwareError(str(exc)) from None
    f = sum(ops)
    return p * f / (elapsed * n)


@dataclass(frozen=True)
class LineCostSamples:
    w: tuple[float, ...]
    r_invalid: tuple[float, ...]
    r_modified: tuple[float, ...]


def measure_line_costs(
    alpha: float,
    rounds: int = DEFAULT_LINE_COST_ROUNDS,
    repeats: int = DEFAULT_REPEATS,
) -> LineCostSamples:
    """Per-access costs in work units: (w, r_invalid, r_modified) samples.

    r_invalid needs a second core for the alternating-ownership chase; with a
    single usable core it fails with insufficient-cores.
    """
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")
    cores = physical_cores()
    if len(cores) < 2:
        raise HardwareError(
            "measuring r_invalid needs two distinct cores for the cross-core chase"
        )
    native = _native()
    unit_ns = 1e9 / alpha  # duration of one work unit
    chase = 64  # native chain length; remote rounds are handshakes, not loads
    w, r_i, r_m = [], [], []
    try:
        for _ in range(repeats):
            w.append(native.store_rmw_cost(cores[0], rounds) / unit_ns)
            r_m.append(native.load_hit_cost(cores[0], rounds) / unit_ns)
            r_i.append(
                native.load_remote_cost(cores[0], cores[1], max(1, rounds // chase))
                / unit_ns
            )
    except OSError as exc:
        raise HardwareError(str(exc)) from None
    return LineCostSamples(w=tuple(w), r_invalid=tuple(r_i), r_modified=tuple(r_m))


def calibrate_machine(
    duration: float = 2.0,
    rounds: int = DEFAULT_LINE_COST_ROUNDS,
    repeats: int = DEFAULT_REPEATS,
    alpha_streams: int | None = None,
) -> CalibrationReport:
    """Full calibration run producing a CalibrationReport.

    Alpha is sampled ``repeats`` times on ``alpha_streams`` streams (default:
    all usable cores); line costs are converted through the mean alpha.
    """
    cores = physical_cores()
    n = alpha_streams if alpha_streams is not None else len(cores)
    alpha_samples = tuple(
        measure_alpha(DEFAULT_ALPHA_WORK_PER_OP, n, duration) for _ in range(repeats)
    )
    alpha = statistics.fmean(alpha_samples)
    line = measure_line_costs(alpha, rounds=rounds, repeats=repeats)
    report = CalibrationReport(
        alpha=ConstantStats(alpha_samples),
        w=ConstantStats(line.w),
        r_invalid=ConstantStats(line.r_invalid),
        r_modified=ConstantStats(line.r_modified),
        cores=len(cores),
        pinning=tuple(cores),
        timer_resolution_ns=float(_native().timer_resolution_ns()),
    )
    report.to_constants()  # raises when the measurements are inconsistent
    return report


def run_mcs_benchmark(wl: Workload, duration: float = 2.0) -> MeasurementRecord:
    """Run the real MCS-locked operation loop and report ops per second.

    The first tenth of the run is treated as warm-up by construction: streams
    start together and the duration-based window dwarfs startup.  A built-in
    overlap detector (owner stamp checked at critical-section entry and exit)
    aborts the measurement if mutual exclusion is ever violated.
    """
    if duration < MIN_BENCH_DURATION:
        raise ConfigError(
            f"benchmark duration must be >= {MIN_BENCH_DURATION}s, got {duration}"
        )
    if float(wl.c) != int(wl.c) or float(wl.p) != int(wl.p):
        raise ConfigError("native benchmark needs integral c and p work amounts")
    cores = pin_map(wl.n)
    _check_timer(duration)
    try:
        elapsed, ops, violations = _native().mcs_bench(
            tuple(cores), int(wl.c), int(wl.p), duration
        )
    except OSError as exc:
        raise HardwareError(str(exc)) from None
    if violations:
        raise RuntimeError(
            f"lock self-check failed: {violations} critical-section overlaps observed"
        )
    f = sum(ops)
    return MeasurementRecord(
        n=wl.n, c=float(wl.c), p=float(wl.p),
        duration=elapsed, ops=f, throughput=f / elapsed,
    )


@dataclass(frozen=True)
class ValidationPoint:
    n: int
    c: float
    p: float
    measured: float
    predicted: float

    @property
    def rel_error(self) -> float:
        return abs(self.measured - self.predicted) / self.predicted


@dataclass(frozen=True)
class ValidationReport:
    points: tuple[ValidationPoint, ...]
    median_rel_error: float
    max_rel_error: float


def validate(m: MachineConstants, records: list[MeasurementRecord]) -> ValidationReport:
    """Relative error of each measured record against the model's prediction."""
    if not records:
        raise ValueError("validate needs at least one measurement record")
    points = tuple(
        ValidationPoint(
            n=r.n, c=r.c, p=r.p, measured=r.throughput,
            predicted=predict(m, Workload(n=r.n, c=r.c, p=r.p)).throughput,
        )
        for r in records
    )
    errs = [pt.rel_error for pt in points]
    return ValidationReport(
        points=points,
        median_rel_error=statistics.median(errs),
        max_rel_error=max(errs),
    )


def calibration_self_test(duration: float = 0.5) -> dict[str, float]:
    """Back-to-back reproducibility check; returns per-constant drift ratios.

    Two full calibrations on an idle machine are expected to agree within 10%
    per constant; a doubled-duration alpha run should stay inside the first
    run's sample spread.
    """
    first = calibrate_machine(duration=duration, repeats=3)
    second = calibrate_machine(duration=duration, repeats=3)
    drift = {}
    for name in ("alpha", "w", "r_invalid", "r_modified"):
        a = getattr(first, name).mean
        b = getattr(second, name).mean
        drift[name] = abs(a - b) / a
    n = len(physical_cores())
    long_alpha = measure_alpha(n=n, duration=2 * duration)
    band = max(first.alpha.std, 0.05 * first.alpha.mean)
    drift["alpha_duration_shift"] = abs(long_alpha - first.alpha.mean) / max(
        band, 1e-12
    )
    return drift
