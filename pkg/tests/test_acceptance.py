"""Acceptance suite: one test per shipping criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL/SKIP
line per criterion.  The hardware-validation criterion is environment
conditional (idle x86 box, >= 8 physical cores, MCSMODEL_HW_TESTS=1); all
other criteria run anywhere.
"""

import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import constants_strategy
from mcsmodel import calib
from mcsmodel.cli import ExperimentConfig, cmd_bench, cmd_predict
from mcsmodel.model import (
    INTEL_XEON_6230,
    Regime,
    Workload,
    estimate_alpha,
    predict,
    throughput_contended,
    throughput_free,
    transition_window,
)
from mcsmodel.sim import extract_schedule, format_trace, simulate

INTEL = INTEL_XEON_6230

GRID_N = (2, 4, 8, 15)
GRID_C = (100.0, 1000.0, 10000.0)


def announce(name: str, ok: bool = True, skip: str | None = None) -> None:
    if skip:
        print(f"[SKIP] {name}: {skip}")
    else:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")


# Independent re-derivations of the closed forms (kept separate from the
# package on purpose).
def derived_contended(alpha, w, r_i, c):
    return alpha / (c + 2 * r_i + w)


def derived_free(alpha, w, r_m, n, c, p):
    return alpha * n / (p + c + r_m + 4 * w)


def test_closed_form_correctness():
    """predict() reproduces both regime formulas exactly (1e-9 relative)."""
    contended = predict(INTEL, Workload(15, 1000, 1000))
    assert contended.regime is Regime.CONTENDED
    want = derived_contended(4.04e5, 15, 30, 1000)
    assert want == pytest.approx(4.04e5 / 1075, rel=1e-15)
    assert abs(contended.throughput - want) / want <= 1e-9

    free = predict(INTEL, Workload(15, 1000, 100000))
    assert free.regime is Regime.FREE
    want = derived_free(4.04e5, 15, 15, 15, 1000, 100000)
    assert want == pytest.approx(6.06e6 / 101075, rel=1e-15)
    assert abs(free.throughput - want) / want <= 1e-9
    announce("closed-form correctness (contended 4.04e5/1075, free 6.06e6/101075)")


def test_transition_window_and_continuity():
    """Window bounds for the reference workload, and continuity at both edges."""
    p_low, p_high = transition_window(INTEL, 15, 1000)
    assert (p_low, p_high) == (14990.0, 15035.0)

    t_cont = throughput_contended(INTEL, 1000)
    t_free_edge = throughput_free(INTEL, Workload(15, 1000, p_high))

    def interp(p):
        return t_cont + (p - p_low) * (t_free_edge - t_cont) / (p_high - p_low)

    assert abs(interp(p_low) - predict(INTEL, Workload(15, 1000, p_low)).throughput) \
        <= 1e-9 * t_cont
    assert abs(interp(p_high) - predict(INTEL, Workload(15, 1000, p_high)).throughput) \
        <= 1e-9 * t_free_edge
    # approaching the edges from inside the window converges to the edge values
    for edge, limit in ((p_low, t_cont), (p_high, t_free_edge)):
        inside = min(max(edge, p_low + 1e-6), p_high - 1e-6)
        step = predict(INTEL, Workload(15, 1000, inside)).throughput
        assert abs(step - limit) / limit < 1e-6
    announce("transition window (14990, 15035) and endpoint continuity")


def _oracle_grid():
    points = []
    for n in GRID_N:
        for c in GRID_C:
            p_low, p_high = transition_window(INTEL, n, c)
            points.append((Workload(n, c, 0.5 * p_low), "contended"))
            points.append((Workload(n, c, 3.0 * p_high), "free"))
    return points


def _run_grid():
    results = []
    for wl, regime in _oracle_grid():
        res = simulate(INTEL, wl, ops_target=34 * wl.n, warmup_ops=2 * wl.n,
                       trace=True)
        results.append((wl, regime, res))
    return results


GRID_RESULTS = None


def grid_results():
    global GRID_RESULTS
    if GRID_RESULTS is None:
        GRID_RESULTS = _run_grid()
    return GRID_RESULTS


def test_simulator_as_oracle():
    """>= 12 points per pure regime: simulated throughput within 3% of the
    closed form, and steady-state schedules equal the golden block sequences."""
    w, r_i, r_m = INTEL.w, INTEL.r_invalid, INTEL.r_modified
    checked = {"contended": 0, "free": 0}
    for wl, regime, res in grid_results():
        if regime == "contended":
            want = derived_contended(INTEL.alpha, w, r_i, wl.c)
            golden = [
                ("write", w), ("write", w), ("swap", w), ("write", w),
                ("spin_read", r_i), ("local_work", wl.c), ("read", r_i),
                ("write", w), ("local_work", wl.p),
            ]
        else:
            want = derived_free(INTEL.alpha, w, r_m, wl.n, wl.c, wl.p)
            golden = [
                ("write", w), ("write", w), ("swap", w),
                ("local_work", wl.c), ("read", r_m), ("cas", w),
                ("local_work", wl.p),
            ]
        rel = abs(res.throughput - want) / want
        assert rel <= 0.03, f"{wl}: simulated {res.throughput} vs {want} ({rel:.2%})"
        for pid in (0, wl.n - 1):
            late = res.ops_per_process[pid] - 2
            got = [
                (kind.split(".")[0], cost)
                for kind, cost in extract_schedule(res, pid, late)
            ]
            assert got == golden, f"{wl} p{pid} round {late}: {got}"
        checked[regime] += 1
    assert checked == {"contended": 12, "free": 12}
    announce("simulator-as-oracle: 12+12 grid points within 3%, golden schedules exact")


def test_regime_observability():
    """Tail-null fraction >= 0.99 at free points and <= 0.01 at contended ones."""
    for wl, regime, res in grid_results():
        if regime == "free":
            assert res.tail_null_fraction >= 0.99, f"{wl}: {res.tail_null_fraction}"
        else:
            assert res.tail_null_fraction <= 0.01, f"{wl}: {res.tail_null_fraction}"
    announce("regime observability: tail-null fraction 0.99/0.01 across the grid")


# ------------------------------------------------------------- invariant suite


workload_strategy = st.tuples(
    st.integers(1, 4), st.floats(0, 300), st.floats(0, 300)
)


@settings(max_examples=40, deadline=None)
@given(m=constants_strategy(), wlt=workload_strategy)
def _mutex_fifo_property(m, wlt):
    n, c, p = wlt
    res = simulate(m, Workload(n, c, p), ops_target=8 * n, warmup_ops=2 * n, trace=True)
    crit = sorted(
        (ev.tick, ev.tick + ev.cost, ev.pid)
        for ev in res.trace
        if ev.kind == "local_work.critical"
    )
    for (s1, e1, _), (s2, e2, _) in zip(crit, crit[1:]):
        assert s2 >= e1
    swap_order = [pid for _, pid in sorted(
        (ev.tick, ev.pid) for ev in res.trace if ev.kind == "swap.tail"
    )]
    entry_order = [pid for _, _, pid in crit]
    assert entry_order == swap_order[: len(entry_order)]


@settings(max_examples=25, deadline=None)
@given(m=constants_strategy(), wlt=workload_strategy)
def _determinism_property(m, wlt):
    n, c, p = wlt
    wl = Workload(n, c, p)
    a = simulate(m, wl, ops_target=6 * n, warmup_ops=2 * n, trace=True)
    b = simulate(m, wl, ops_target=6 * n, warmup_ops=2 * n, trace=True)
    assert a == b and format_trace(a) == format_trace(b)


@settings(max_examples=60, deadline=None)
@given(
    m=constants_strategy(),
    alpha=st.floats(1e-3, 1e6),
    p=st.floats(1, 1e6),
    n=st.integers(1, 64),
    k=st.integers(1, 10_000),
)
def _alpha_round_trip_property(m, alpha, p, n, k):
    f = n * k
    t = k * p / alpha
    assert estimate_alpha(p, f, t, n) == pytest.approx(alpha, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    m=constants_strategy(),
    c=st.floats(0, 1e5),
    n1=st.integers(1, 64),
    n2=st.integers(1, 64),
    p1=st.floats(0, 1e7),
    p2=st.floats(0, 1e7),
)
def _flatness_property(m, c, n1, n2, p1, p2):
    base = throughput_contended(m, c)
    for n, p in ((n1, p1), (n2, p2)):
        pred = predict(m, Workload(n, c, p))
        if pred.regime is Regime.CONTENDED:
            assert pred.throughput == base


@settings(max_examples=60, deadline=None)
@given(m=constants_strategy(), n=st.integers(1, 64), c=st.floats(0, 1e5),
       p=st.floats(0, 1e7))
def _monotonicity_property(m, n, c, p):
    base = throughput_free(m, Workload(n, c, p))
    dp = max(1.0, p * 1e-3)
    assert throughput_free(m, Workload(n, c, p + dp)) < base
    assert throughput_free(m, Workload(n, c + dp, p)) < base
    assert throughput_free(m, Workload(n + 1, c, p)) > base


@settings(max_examples=60, deadline=None)
@given(m=constants_strategy(), n=st.integers(1, 64), c=st.floats(0, 1e5),
       p=st.floats(0, 1e7), k=st.floats(1e-3, 1e3))
def _scale_covariance_property(m, n, c, p, k):
    wl = Workload(n, c, p)
    scaled = Workload(n, c * k, p * k)
    assert throughput_contended(m.scaled(k), c * k) == pytest.approx(
        throughput_contended(m, c), rel=1e-9
    )
    assert throughput_free(m.scaled(k), scaled) == pytest.approx(
        throughput_free(m, wl), rel=1e-9
    )
    from dataclasses import replace

    boosted = replace(m, alpha=m.alpha * k)
    assert throughput_free(boosted, wl) == pytest.approx(
        k * throughput_free(m, wl), rel=1e-9
    )


def test_invariant_suites():
    """Property tests over randomized valid constants (r_invalid >= w)."""
    _mutex_fifo_property()
    _determinism_property()
    _alpha_round_trip_property()
    _flatness_property()
    _monotonicity_property()
    _scale_covariance_property()
    announce(
        "invariant suites: mutual exclusion, FIFO, determinism, alpha round "
        "trip, flatness, monotonicity, scale covariance"
    )


# -------------------------------------------------- hardware (conditional)


def test_hardware_validation():
    """Environment-conditional: calibrate, sweep, median error <= 15%.

    Needs MCSMODEL_HW_TESTS=1, the native extension, and >= 8 physical cores
    on an otherwise idle x86 machine.  Never gates CI.
    """
    name = "hardware validation (conditional): calibrated sweep median error <= 15%"
    if os.environ.get("MCSMODEL_HW_TESTS") != "1":
        announce(name, skip="set MCSMODEL_HW_TESTS=1 on an idle multi-core box")
        pytest.skip("hardware validation is environment-conditional")
    try:
        from mcsmodel import _native  # noqa: F401
    except ImportError:
        announce(name, skip="native extension unavailable")
        pytest.skip("native extension unavailable")
    cores = calib.physical_cores()
    if len(cores) < 8:
        announce(name, skip=f"needs >= 8 physical cores, found {len(cores)}")
        pytest.skip("needs >= 8 physical cores")

    report = calib.calibrate_machine(duration=1.0, repeats=3)
    m = report.to_constants()
    n_values = [5, 10, min(15, len(cores))]
    duration = float(os.environ.get("MCSMODEL_HW_BENCH_DURATION", "1.0"))
    cfg = ExperimentConfig(
        constants=m, n_values=n_values,
        c_values=[500.0, 1000.0, 5000.0, 10000.0, 50000.0],
        p_min=100.0, p_max=1e6, p_steps=6, duration=duration,
    )
    predicted = {(r.n, r.c, r.p): r.throughput for r in cmd_predict(cfg)}
    errors = []
    for row in cmd_bench(cfg):
        ref = predicted[(row.n, row.c, row.p)]
        errors.append(abs(row.throughput - ref) / ref)
    errors.sort()
    median = errors[len(errors) // 2]
    assert median <= 0.15, f"median relative error {median:.1%}"

    # plateau-then-decay shape of the predicted curves
    for n in n_values:
        for c in cfg.c_values:
            series = [predicted[(n, c, p)] for p in cfg.p_values()]
            p_low, _ = transition_window(m, n, c)
            flat = [t for p, t in zip(cfg.p_values(), series) if p <= p_low]
            assert all(t == flat[0] for t in flat)
    announce(name)
