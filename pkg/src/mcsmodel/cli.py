"""Command-line entry point wiring predictor, simulator and calibration.

Subcommands:

    predict    closed-form throughput over an (n, c, p) grid -> CSV
    simulate   abstract-machine throughput over the grid -> CSV (+ traces)
    bench      native MCS benchmark over the grid -> CSV
    calibrate  measure machine constants -> key=value report file
    validate   join two CSVs on (n, c, p) and report relative errors
    run        dispatch on the config file's mode (predict/simulate/bench/all)

Every experiment can be described by a flat key=value config file (lists are
comma-separated), and every key can be overridden by a flag, so sweeps stay
versionable.  All commands emit the same CSV schema (see records.py), which
makes predicted, simulated and measured rows joinable.

Exit codes: 0 success, 1 usage or configuration error, 2 hardware
prerequisite failure, 3 validation threshold exceeded.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import calib
from .errors import ConfigError, HardwareError, ValidationError
from .model import MACHINE_PRESETS, MachineConstants, Workload, predict
from .records import ResultRow, read_rows, write_rows
from .sim import format_trace, simulate

DEFAULT_N = [5, 10, 15]
DEFAULT_C = [500.0, 1000.0, 5000.0, 10000.0, 50000.0]


@dataclass
class ExperimentConfig:
    """One experiment: constants source, workload grid and mode options."""

    constants: MachineConstants
    n_values: list[int] = field(default_factory=lambda: list(DEFAULT_N))
    c_values: list[float] = field(default_factory=lambda: list(DEFAULT_C))
    p_min: float = 100.0
    p_max: float = 1e6
    p_steps: int = 25
    p_scale: str = "log"
    mode: str = "predict"
    output: str | None = None
    ops_target: int | None = None
    warmup: int | None = None
    trace_dir: str | None = None
    duration: float = 2.0
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.n_values:
            raise ConfigError("grid needs at least one n value")
        if not self.c_values:
            raise ConfigError("grid needs at least one c value")
        if any(n < 1 for n in self.n_values):
            raise ConfigError("n values must be >= 1")
        if any(c < 0 for c in self.c_values):
            raise ConfigError("c values must be >= 0")
        if self.p_min > self.p_max:
            raise ConfigError(f"p_min ({self.p_min}) > p_max ({self.p_max})")
        if self.p_steps < 1:
            raise ConfigError("p_steps must be >= 1")
        if self.p_scale not in ("log", "linear"):
            raise ConfigError(f"p_scale must be log or linear, not {self.p_scale!r}")
        if self.p_scale == "log" and self.p_min <= 0:
            raise ConfigError("log-scaled sweeps need p_min > 0")
        if self.mode not in ("predict", "simulate", "bench", "all"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def p_values(self) -> list[float]:
        if self.p_steps == 1:
            return [float(self.p_min)]
        if self.p_scale == "linear":
            step = (self.p_max - self.p_min) / (self.p_steps - 1)
            return [self.p_min + i * step for i in range(self.p_steps)]
        ratio = (self.p_max / self.p_min) ** (1.0 / (self.p_steps - 1))
        return [self.p_min * ratio**i for i in range(self.p_steps)]

    def grid(self) -> list[Workload]:
        return [
            Workload(n=n, c=c, p=p)
            for n in self.n_values
            for c in self.c_values
            for p in self.p_values()
        ]


# ----------------------------------------------------------------- commands


def cmd_predict(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for wl in config.grid():
        pred = predict(config.constants, wl)
        rows.append(
            ResultRow(
                n=wl.n, c=wl.c, p=wl.p, source="predicted",
                regime=str(pred.regime), throughput=pred.throughput,
            )
        )
    return rows


def _sim_options(config: ExperimentConfig, wl: Workload) -> tuple[int, int]:
    warmup = config.warmup if config.warmup is not None else 2 * wl.n
    # default window: 32 rounds of every process past warm-up, which keeps the
    # measurement an exact multiple of n completions in steady state
    target = config.ops_target if config.ops_target is not None else warmup + 32 * wl.n
    return target, warmup


def _simulate_point(
    args: tuple[MachineConstants, Workload, int, int, bool]
) -> tuple[ResultRow, str | None]:
    m, wl, target, warmup, want_trace = args
    result = simulate(m, wl, ops_target=target, warmup_ops=warmup, trace=want_trace)
    row = ResultRow(
        n=wl.n, c=wl.c, p=wl.p, source="simulated",
        throughput=result.throughput,
        tail_null_fraction=result.tail_null_fraction,
    )
    return row, format_trace(result) if want_trace else None


def cmd_simulate(config: ExperimentConfig) -> list[ResultRow]:
    want_trace = config.trace_dir is not None
    tasks = []
    for wl in config.grid():
        target, warmup = _sim_options(config, wl)
        tasks.append((config.constants, wl, target, warmup, want_trace))

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_simulate_point, tasks))
    else:
        outcomes = [_simulate_point(t) for t in tasks]

    rows = []
    for (row, trace_text), task in zip(outcomes, tasks):
        rows.append(row)
        if trace_text is not None:
            wl = task[1]
            out = Path(config.trace_dir)
            out.mkdir(parents=True, exist_ok=True)
            name = f"trace_n{wl.n}_c{wl.c:g}_p{wl.p:g}.txt"
            (out / name).write_text(trace_text)
    return rows


def cmd_bench(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for wl in config.grid():
        rec = calib.run_mcs_benchmark(wl, duration=config.duration)
        rows.append(
            ResultRow(
                n=rec.n, c=rec.c, p=rec.p, source="measured",
                throughput=rec.throughput,
            )
        )
    return rows


def cmd_validate(
    predicted_csv: str, measured_csv: str, threshold: float
) -> tuple[str, int]:
    """Join the two CSVs on (n, c, p); returns (report text, exit status)."""
    pred_rows = read_rows(Path(predicted_csv).read_text(), where=predicted_csv)
    meas_rows = read_rows(Path(measured_csv).read_text(), where=measured_csv)
    if not pred_rows or not meas_rows:
        raise ConfigError("validate needs non-empty CSV inputs")
    reference = {(r.n, r.c, r.p): r.throughput for r in pred_rows}
    lines = []
    errs = []
    for r in meas_rows:
        key = (r.n, r.c, r.p)
        if key not in reference:
            continue
        ref = reference[key]
        rel = abs(r.throughput - ref) / ref
        errs.append(rel)
        lines.append(
            f"n={r.n} c={r.c:g} p={r.p:g} reference={ref:.6g} "
            f"candidate={r.throughput:.6g} rel_error={rel:.4%}"
        )
    if not errs:
        raise ConfigError("no overlapping (n, c, p) keys between the two files")
    median = statistics.median(errs)
    worst = max(errs)
    lines.append(f"points={len(errs)} median_rel_error={median:.4%} max_rel_error={worst:.4%}")
    status = 0 if median <= threshold else 3
    if status:
        lines.append(f"FAIL: median exceeds threshold {threshold:.4%}")
    return "\n".join(lines) + "\n", status


# ------------------------------------------------------------ config files


def _parse_list(value: str, conv):
    return [conv(tok.strip()) for tok in value.split(",") if tok.strip()]


def load_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def _constants_from(values: dict[str, str], args: argparse.Namespace) -> MachineConstants:
    """Resolve the machine-constants source: flags beat config-file keys;
    inline values beat a report path, which beats a preset name."""
    inline_keys = ("alpha", "w", "r_invalid", "r_modified")
    flag_inline = {k: getattr(args, k, None) for k in inline_keys}
    if any(v is not None for v in flag_inline.values()):
        missing = [k for k, v in flag_inline.items() if v is None]
        if missing:
            raise ConfigError(f"inline constants need {', '.join(missing)} as well")
        x = getattr(args, "x_contended", None)
        return MachineConstants(
            alpha=flag_inline["alpha"], w=flag_inline["w"],
            r_invalid=flag_inline["r_invalid"], r_modified=flag_inline["r_modified"],
            x_contended=x,
        )
    if getattr(args, "constants", None):
        return calib.parse_report_constants(args.constants)
    if getattr(args, "machine", None):
        return MACHINE_PRESETS[args.machine]
    if all(k in values for k in inline_keys):
        return MachineConstants(
            alpha=float(values["alpha"]), w=float(values["w"]),
            r_invalid=float(values["r_invalid"]), r_modified=float(values["r_modified"]),
            x_contended=float(values["x_contended"]) if "x_contended" in values else None,
        )
    if "constants" in values:
        return calib.parse_report_constants(values["constants"])
    if "machine" in values:
        name = values["machine"]
        if name not in MACHINE_PRESETS:
            raise ConfigError(f"unknown machine preset {name!r}")
        return MACHINE_PRESETS[name]
    raise ConfigError(
        "no machine constants: pass --machine, --constants FILE, or inline "
        "--alpha/--w/--r-invalid/--r-modified"
    )


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    try:
        constants = _constants_from(values, args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def pick(flag_name: str, key: str, conv, default):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag
        if key in values:
            return conv(values[key])
        return default

    try:
        cfg = ExperimentConfig(
            constants=constants,
            n_values=pick("n", "n", lambda v: _parse_list(v, int), list(DEFAULT_N)),
            c_values=pick("c", "c", lambda v: _parse_list(v, float), list(DEFAULT_C)),
            p_min=pick("p_min", "p_min", float, 100.0),
            p_max=pick("p_max", "p_max", float, 1e6),
            p_steps=pick("p_steps", "p_steps", int, 25),
            p_scale=pick("p_scale", "p_scale", str, "log"),
            mode=pick("mode", "mode", str, "predict"),
            output=pick("output", "output", str, None),
            ops_target=pick("ops_target", "ops_target", int, None),
            warmup=pick("warmup", "warmup", int, None),
            trace_dir=pick("trace_dir", "trace_dir", str, None),
            duration=pick("duration", "duration", float, 2.0),
            jobs=pick("jobs", "jobs", int, 1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# -------------------------------------------------------------- arg parsing


def _add_grid_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("-c", "--config", help="key = value experiment file")
    sp.add_argument("--machine", choices=sorted(MACHINE_PRESETS),
                    help="built-in constants preset")
    sp.add_argument("--constants", help="calibration report file to read constants from")
    sp.add_argument("--alpha", type=float, help="inline constant: work units per second")
    sp.add_argument("--w", type=float, help="inline constant: write cost")
    sp.add_argument("--r-invalid", dest="r_invalid", type=float,
                    help="inline constant: invalid-line read cost")
    sp.add_argument("--r-modified", dest="r_modified", type=float,
                    help="inline constant: local read cost")
    sp.add_argument("--x", dest="x_contended", type=float,
                    help="inline constant: contended swap cost (default w)")
    sp.add_argument("--n", type=lambda v: _parse_list(v, int),
                    help="comma-separated process counts")
    sp.add_argument("--c-values", dest="c", type=lambda v: _parse_list(v, float),
                    help="comma-separated critical-section sizes")
    sp.add_argument("--p-min", dest="p_min", type=float)
    sp.add_argument("--p-max", dest="p_max", type=float)
    sp.add_argument("--p-steps", dest="p_steps", type=int)
    sp.add_argument("--p-scale", dest="p_scale", choices=["log", "linear"])
    sp.add_argument("-o", "--output", help="CSV output path (default stdout)")


def _emit(rows: list[ResultRow], output: str | None) -> None:
    text = write_rows(rows)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _run_predict(args: argparse.Namespace) -> int:
    config = build_config(args)
    _emit(cmd_predict(config), config.output)
    return 0


def _run_simulate(args: argparse.Namespace) -> int:
    config = build_config(args)
    _emit(cmd_simulate(config), config.output)
    return 0


def _run_bench(args: argparse.Namespace) -> int:
    config = build_config(args)
    _emit(cmd_bench(config), config.output)
    return 0


def _run_mode(args: argparse.Namespace) -> int:
    config = build_config(args)
    rows: list[ResultRow] = []
    if config.mode in ("predict", "all"):
        rows.extend(cmd_predict(config))
    if config.mode in ("simulate", "all"):
        rows.extend(cmd_simulate(config))
    if config.mode in ("bench", "all"):
        rows.extend(cmd_bench(config))
    _emit(rows, config.output)
    return 0


def _run_calibrate(args: argparse.Namespace) -> int:
    if args.self_test:
        drift = calib.calibration_self_test(duration=args.duration)
        for name, value in drift.items():
            print(f"{name}: {value:.4f}")
        bad = [k for k, v in drift.items() if not k.endswith("_shift") and v > 0.10]
        if bad:
            print(f"self-test FAILED: drift above 10% for {', '.join(bad)}")
            return 2
        print("self-test passed")
        return 0
    report = calib.calibrate_machine(
        duration=args.duration, rounds=args.rounds, repeats=args.repeats,
        alpha_streams=args.alpha_streams,
    )
    text = calib.format_report(report)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write report {args.output}: {exc}") from None
    sys.stdout.write(text)
    return 0


def _run_validate(args: argparse.Namespace) -> int:
    report, status = cmd_validate(args.predicted, args.measured, args.threshold)
    sys.stdout.write(report)
    return status


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcsmodel",
        description="Throughput prediction, simulation and calibration for "
                    "MCS-locked coarse-grained operations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("predict", help="closed-form predictions over a grid")
    _add_grid_flags(sp)
    sp.set_defaults(func=_run_predict)

    sp = sub.add_parser("simulate", help="abstract-machine simulation over a grid")
    _add_grid_flags(sp)
    sp.add_argument("--ops-target", dest="ops_target", type=int,
                    help="completed operations per point")
    sp.add_argument("--warmup", type=int, help="operations excluded as warm-up")
    sp.add_argument("--trace-dir", dest="trace_dir",
                    help="write one trace file per grid point here")
    sp.add_argument("--jobs", type=int, help="worker processes for the sweep")
    sp.set_defaults(func=_run_simulate)

    sp = sub.add_parser("bench", help="native MCS benchmark over a grid")
    _add_grid_flags(sp)
    sp.add_argument("--duration", type=float, help="seconds per grid point")
    sp.set_defaults(func=_run_bench)

    sp = sub.add_parser("run", help="run the mode(s) named in the config file")
    _add_grid_flags(sp)
    sp.add_argument("--mode", choices=["predict", "simulate", "bench", "all"])
    sp.add_argument("--ops-target", dest="ops_target", type=int)
    sp.add_argument("--warmup", type=int)
    sp.add_argument("--trace-dir", dest="trace_dir")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--duration", type=float)
    sp.set_defaults(func=_run_mode)

    sp = sub.add_parser("calibrate", help="measure machine constants")
    sp.add_argument("-o", "--output", help="report file to write")
    sp.add_argument("--duration", type=float, default=2.0,
                    help="seconds per alpha sample")
    sp.add_argument("--rounds", type=int, default=calib.DEFAULT_LINE_COST_ROUNDS,
                    help="timed accesses per line-cost sample")
    sp.add_argument("--repeats", type=int, default=calib.DEFAULT_REPEATS,
                    help="samples per constant")
    sp.add_argument("--alpha-streams", dest="alpha_streams", type=int,
                    help="streams for the alpha run (default: all usable cores)")
    sp.add_argument("--self-test", dest="self_test", action="store_true",
                    help="check back-to-back calibration reproducibility")
    sp.set_defaults(func=_run_calibrate)

    sp = sub.add_parser("validate", help="compare two result CSVs point by point")
    sp.add_argument("predicted", help="reference CSV (usually predictions)")
    sp.add_argument("measured", help="candidate CSV (measured or simulated)")
    sp.add_argument("--threshold", type=float, default=0.15,
                    help="largest acceptable median relative error")
    sp.set_defaults(func=_run_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HardwareError as exc:
        print(f"hardware error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
