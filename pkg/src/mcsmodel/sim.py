"""Deterministic abstract-machine simulator of the MCS-locked operation.

The machine runs ``n`` processes under a uniform scheduler (every process
advances one work unit per tick; one tick == one work unit).  Each process
executes the lock-protected operation as a sequence of cost-annotated blocks:

    write.next_reset   W    my node's next pointer cleared
    write.lock_flag    W    my node's locked flag raised
    swap.tail          W/X  atomic swap onto the global tail
    write.link_pred    W    only when the swap returned a predecessor
    spin_read.lock_flag R_I only when queued: wait until unlocked
    local_work.critical C
    read.next_probe    R_I/R_M  does my node have a successor?
    cas.tail           W/X  only when no successor was seen
    spin_read.next     R_I  only when that CAS failed
    write.unlock_next  W    only when a successor must be released
    local_work.parallel P

Costs come from a MESI-style line model: every write (and uncontended atomic)
costs W, a contended atomic costs X, a read costs R_I when the reader's copy
of the line is invalid and R_M when it is valid (M, E or S).  Each process
node occupies its own cache line; the tail word has another.

Timing rules, chosen so the two steady-state schedules come out exact:

* a write's effects (new value, invalidation of other copies) land at the
  tick the write completes; a read observes the committed value at the tick
  it starts and pays for the line state at that tick;
* atomic swap/CAS on the tail serialize in block-start order, ties broken by
  process id; an atomic that overlaps another in-flight tail atomic costs X,
  otherwise W;
* a spinning process re-samples its flag; the successful sample starts no
  earlier than the tick the releasing write lands and is charged one R_I.
  Spin samples are monitor reads: they do not install the line in the
  spinner's cache, so the next plain read of a remotely-written line still
  pays R_I.  (Installing the line there would make the release-path read a
  local hit whenever the successor enqueued early, shortening the handoff
  below the closed form's C + 2*R_I + W.)

The simulation is single-threaded and fully deterministic: identical inputs
produce identical results, traces included.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError
from .model import MachineConstants, Workload

# Block kind tokens as they appear in traces.  The part before the dot is the
# access kind, the part after it the program site.
W_NEXT_RESET = "write.next_reset"
W_LOCK_FLAG = "write.lock_flag"
SWAP_TAIL = "swap.tail"
W_LINK_PRED = "write.link_pred"
SPIN_LOCK = "spin_read.lock_flag"
WORK_CRITICAL = "local_work.critical"
R_NEXT_PROBE = "read.next_probe"
CAS_TAIL = "cas.tail"
SPIN_NEXT = "spin_read.next"
W_UNLOCK = "write.unlock_next"
WORK_PARALLEL = "local_work.parallel"

TRACE_KINDS = (
    W_NEXT_RESET, W_LOCK_FLAG, SWAP_TAIL, W_LINK_PRED, SPIN_LOCK,
    WORK_CRITICAL, R_NEXT_PROBE, CAS_TAIL, SPIN_NEXT, W_UNLOCK, WORK_PARALLEL,
)


class TraceUnavailableError(RuntimeError):
    """A trace-dependent query was made on a result recorded without a trace."""


@dataclass(frozen=True)
class InstructionBlock:
    """One cost-annotated step of the operation.

    ``kind`` is one of write/read/swap/cas/spin_read/local_work; memory kinds
    carry the id of the cache line they touch, local_work carries the amount
    of work instead.
    """

    kind: str
    line: Optional[int] = None
    amount: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind == "local_work":
            if self.line is not None:
                raise ValueError("local_work has no target line")
        elif self.line is None:
            raise ValueError(f"{self.kind} needs a target line")


def access_cost(
    m: MachineConstants, kind: str, line_state: str = "I", contended: bool = False
) -> float:
    """Work units charged for one memory access.

    Writes cost W in every line state; so do uncontended swaps and CASes,
    while contended ones cost X.  Reads (spinning or not) cost R_I from an
    invalid line and R_M from any locally valid one (M, E or S alike).
    """
    if kind == "write":
        return m.w
    if kind in ("swap", "cas"):
        return m.x_contended if contended else m.w
    if kind in ("read", "spin_read"):
        return m.r_invalid if line_state == "I" else m.r_modified
    raise ValueError(f"not a memory access kind: {kind!r}")


class CacheLine:
    """MESI bookkeeping for one line across all processes."""

    __slots__ = ("line_id", "states", "last_writer")

    def __init__(self, line_id: int, n: int):
        self.line_id = line_id
        self.states = ["I"] * n
        self.last_writer: Optional[int] = None

    def write(self, pid: int) -> None:
        for q in range(len(self.states)):
            self.states[q] = "M" if q == pid else "I"
        self.last_writer = pid

    def read(self, pid: int) -> str:
        """Install the line for a plain read; returns the reader's prior state."""
        pre = self.states[pid]
        if pre == "I":
            others_valid = False
            for q, st in enumerate(self.states):
                if q != pid and st != "I":
                    others_valid = True
                    if st in ("M", "E"):
                        self.states[q] = "S"
            self.states[pid] = "S" if others_valid else "E"
        return pre

    def peek(self, pid: int) -> str:
        """Line state without installing it (spin samples monitor the line)."""
        return self.states[pid]

    def check(self) -> None:
        exclusive = [q for q, st in enumerate(self.states) if st in ("M", "E")]
        assert len(exclusive) <= 1, f"line {self.line_id}: two M/E holders"
        if exclusive and self.states[exclusive[0]] == "M":
            assert all(
                st == "I" for q, st in enumerate(self.states) if q != exclusive[0]
            ), f"line {self.line_id}: M coexists with a valid copy"


@dataclass(frozen=True)
class LockState:
    """Snapshot of the MCS queue: tail plus per-node next/locked words."""

    tail: Optional[int]
    next_ptr: tuple[Optional[int], ...]
    locked: tuple[bool, ...]

    def check(self, cs_owner: Optional[int], queued: int) -> None:
        # the next chain must be acyclic
        for start in range(len(self.next_ptr)):
            seen = set()
            node: Optional[int] = start
            while node is not None:
                assert node not in seen, f"next chain cycles through node {node}"
                seen.add(node)
                node = self.next_ptr[node]
        # a null tail means nobody holds or waits for the lock
        if self.tail is None:
            assert cs_owner is None, "tail is null while a process is in the CS"
            assert queued == 0, "tail is null while processes wait for the CS"


@dataclass(frozen=True)
class TraceEvent:
    """One completed block: start tick, process, operation round, kind, cost."""

    tick: float
    pid: int
    round: int
    kind: str
    cost: float


@dataclass(frozen=True)
class SimResult:
    """Steady-state measurement of one simulated workload."""

    constants: MachineConstants
    workload: Workload
    ops_target: int
    warmup_ops: int
    total_ticks: float
    ops_per_process: tuple[int, ...]
    window_start_tick: float
    window_ops: int
    throughput: float
    tail_null_fraction: float
    window_acquisitions: int
    trace: Optional[tuple[TraceEvent, ...]]


# Program-counter stages, in operation order.
(_SET_NEXT, _SET_LOCKED, _SWAP, _LINK, _WAIT_LOCK, _CRIT,
 _PROBE, _CAS, _WAIT_NEXT, _UNLOCK, _PAR) = range(11)

_PHASE_COMPLETE = 0
_PHASE_START = 1


class _Proc:
    __slots__ = (
        "pid", "stage", "round", "ops", "pred", "succ", "cas_ok",
        "parked_on", "block_kind", "block_start", "block_cost",
    )

    def __init__(self, pid: int):
        self.pid = pid
        self.stage = _SET_NEXT
        self.round = 0
        self.ops = 0
        self.pred: Optional[int] = None
        self.succ: Optional[int] = None
        self.cas_ok = False
        self.parked_on: Optional[str] = None
        self.block_kind: Optional[str] = None
        self.block_start = 0.0
        self.block_cost = 0.0


class McsSimulation:
    """Event loop over the n processes; see the module docstring for rules."""

    def __init__(self, m: MachineConstants, wl: Workload, ops_target: int,
                 warmup_ops: int, trace: bool):
        self.m = m
        self.wl = wl
        self.ops_target = ops_target
        self.warmup_ops = warmup_ops
        self.tracing = trace

        n = wl.n
        self.procs = [_Proc(pid) for pid in range(n)]
        # line 0 is the tail word, line 1 + pid is process pid's node.
        self.lines = [CacheLine(i, n) for i in range(n + 1)]
        self.locked = [False] * n
        self.next_ptr: list[Optional[int]] = [None] * n
        self.tail: Optional[int] = None
        self.tail_busy_until = 0.0

        self.cs_owner: Optional[int] = None
        self.entry_order: list[int] = []  # swap serialization order, pending CS entries

        self.ops_done = 0
        self.t0: Optional[float] = None
        self.t1: Optional[float] = None
        self.acquisitions: list[tuple[float, bool]] = []
        self.trace: list[TraceEvent] = []

        self.heap: list[tuple[float, int, int]] = []
        for pid in range(n):
            heapq.heappush(self.heap, (0.0, _PHASE_START, pid))

    def _node_line(self, pid: int) -> CacheLine:
        return self.lines[1 + pid]

    def lock_state(self) -> LockState:
        return LockState(
            tail=self.tail,
            next_ptr=tuple(self.next_ptr),
            locked=tuple(self.locked),
        )

    def _schedule(self, p: _Proc, tick: float, kind: str, cost: float) -> None:
        p.block_kind = kind
        p.block_start = tick
        p.block_cost = cost
        heapq.heappush(self.heap, (tick + cost, _PHASE_COMPLETE, p.pid))

    def _wake(self, pid: int, field: str, tick: float) -> None:
        p = self.procs[pid]
        if p.parked_on == field:
            p.parked_on = None
            heapq.heappush(self.heap, (tick, _PHASE_START, pid))

    # -- block starts ------------------------------------------------------

    def _start(self, pid: int, tick: float) -> None:
        p = self.procs[pid]
        m = self.m
        st = p.stage
        if st == _SET_NEXT:
            self._schedule(p, tick, W_NEXT_RESET, m.w)
        elif st == _SET_LOCKED:
            self._schedule(p, tick, W_LOCK_FLAG, m.w)
        elif st == _SWAP:
            self.lock_state().check(self.cs_owner, len(self.entry_order))
            contended = tick < self.tail_busy_until
            cost = access_cost(m, "swap", contended=contended)
            self.tail_busy_until = max(self.tail_busy_until, tick + cost)
            p.pred = self.tail
            self.tail = pid
            self.entry_order.append(pid)
            self.acquisitions.append((tick, p.pred is None))
            self._schedule(p, tick, SWAP_TAIL, cost)
        elif st == _LINK:
            self._schedule(p, tick, W_LINK_PRED, m.w)
        elif st == _WAIT_LOCK:
            if self.locked[pid]:
                p.parked_on = "locked"
            else:
                state = self._node_line(pid).peek(pid)
                self._schedule(p, tick, SPIN_LOCK, access_cost(m, "spin_read", state))
        elif st == _CRIT:
            assert self.cs_owner is None, (
                f"mutual exclusion violated: {pid} entering while {self.cs_owner} inside"
            )
            expected = self.entry_order.pop(0)
            assert expected == pid, (
                f"FIFO violated: {pid} entered before {expected}"
            )
            self.cs_owner = pid
            self._schedule(p, tick, WORK_CRITICAL, self.wl.c)
        elif st == _PROBE:
            state = self._node_line(pid).read(pid)
            p.succ = self.next_ptr[pid]
            self._schedule(p, tick, R_NEXT_PROBE, access_cost(m, "read", state))
        elif st == _CAS:
            contended = tick < self.tail_busy_until
            cost = access_cost(m, "cas", contended=contended)
            self.tail_busy_until = max(self.tail_busy_until, tick + cost)
            p.cas_ok = self.tail == pid
            if p.cas_ok:
                self.tail = None
            self.lock_state().check(self.cs_owner, len(self.entry_order))
            self._schedule(p, tick, CAS_TAIL, cost)
        elif st == _WAIT_NEXT:
            if self.next_ptr[pid] is None:
                p.parked_on = "next"
            else:
                p.succ = self.next_ptr[pid]
                state = self._node_line(pid).peek(pid)
                self._schedule(p, tick, SPIN_NEXT, access_cost(m, "spin_read", state))
        elif st == _UNLOCK:
            self._schedule(p, tick, W_UNLOCK, m.w)
        elif st == _PAR:
            self._schedule(p, tick, WORK_PARALLEL, self.wl.p)
        else:  # pragma: no cover
            raise AssertionError(f"bad stage {st}")

    # -- block completions -------------------------------------------------

    def _complete(self, pid: int, tick: float) -> bool:
        """Apply the pending block's effects; returns True when the run is done."""
        p = self.procs[pid]
        m = self.m
        kind = p.block_kind
        if self.tracing:
            self.trace.append(TraceEvent(p.block_start, pid, p.round, kind, p.block_cost))

        done = False
        if kind == W_NEXT_RESET:
            self.next_ptr[pid] = None
            self._node_line(pid).write(pid)
            p.stage = _SET_LOCKED
        elif kind == W_LOCK_FLAG:
            self.locked[pid] = True
            self._node_line(pid).write(pid)
            p.stage = _SWAP
        elif kind == SWAP_TAIL:
            self.lines[0].write(pid)
            p.stage = _LINK if p.pred is not None else _CRIT
        elif kind == W_LINK_PRED:
            pred = p.pred
            self.next_ptr[pred] = pid
            self._node_line(pred).write(pid)
            p.stage = _WAIT_LOCK
            self._wake(pred, "next", tick)
        elif kind == SPIN_LOCK:
            p.stage = _CRIT
        elif kind == WORK_CRITICAL:
            assert self.cs_owner == pid
            self.cs_owner = None
            p.stage = _PROBE
        elif kind == R_NEXT_PROBE:
            p.stage = _UNLOCK if p.succ is not None else _CAS
        elif kind == CAS_TAIL:
            self.lines[0].write(pid)
            p.stage = _PAR if p.cas_ok else _WAIT_NEXT
        elif kind == SPIN_NEXT:
            p.stage = _UNLOCK
        elif kind == W_UNLOCK:
            succ = p.succ
            self.locked[succ] = False
            self._node_line(succ).write(pid)
            p.stage = _PAR
            self._wake(succ, "locked", tick)
        elif kind == WORK_PARALLEL:
            p.ops += 1
            self.ops_done += 1
            if self.ops_done == self.warmup_ops:
                self.t0 = tick
            if self.ops_done == self.ops_target:
                self.t1 = tick
                done = True
            p.round += 1
            p.stage = _SET_NEXT
        else:  # pragma: no cover
            raise AssertionError(f"bad block {kind}")
        p.block_kind = None
        if not done:
            heapq.heappush(self.heap, (tick, _PHASE_START, pid))
        return done

    def run(self) -> SimResult:
        heappop = heapq.heappop
        while self.heap:
            tick, phase, pid = heappop(self.heap)
            if phase == _PHASE_COMPLETE:
                if self._complete(pid, tick):
                    break
            else:
                self._start(pid, tick)
        else:
            raise RuntimeError(
                "simulation ran dry before reaching its target (lost wakeup?)"
            )

        for line in self.lines:
            line.check()
        assert self.t0 is not None and self.t1 is not None
        if not self.t1 > self.t0:
            raise ConfigError(
                "measurement window collapsed to zero ticks; raise ops_target"
            )
        window_ops = self.ops_target - self.warmup_ops
        throughput = window_ops * self.m.alpha / (self.t1 - self.t0)
        window_acq = [null for t, null in self.acquisitions if self.t0 <= t < self.t1]
        frac = (sum(window_acq) / len(window_acq)) if window_acq else 0.0
        return SimResult(
            constants=self.m,
            workload=self.wl,
            ops_target=self.ops_target,
            warmup_ops=self.warmup_ops,
            total_ticks=self.t1,
            ops_per_process=tuple(p.ops for p in self.procs),
            window_start_tick=self.t0,
            window_ops=window_ops,
            throughput=throughput,
            tail_null_fraction=frac,
            window_acquisitions=len(window_acq),
            trace=tuple(self.trace) if self.tracing else None,
        )


def simulate(
    m: MachineConstants,
    wl: Workload,
    ops_target: int,
    warmup_ops: Optional[int] = None,
    trace: bool = False,
) -> SimResult:
    """Run the abstract machine until ``ops_target`` operations complete.

    The first ``warmup_ops`` completed operations (default ``2 * n``) are
    excluded from the throughput window, discarding the startup segment where
    every process's first tail swap contends.  Throughput is reported in the
    same unit as the closed-form predictor: completed operations times alpha
    per elapsed tick.
    """
    if warmup_ops is None:
        warmup_ops = 2 * wl.n
    if warmup_ops < wl.n:
        raise ConfigError(
            f"warmup_ops ({warmup_ops}) must cover one round of all {wl.n} processes"
        )
    if ops_target <= warmup_ops:
        raise ConfigError(
            f"ops_target ({ops_target}) must exceed warmup_ops ({warmup_ops})"
        )
    return McsSimulation(m, wl, ops_target, warmup_ops, trace).run()


def extract_schedule(
    result: SimResult, process: int, round_index: int
) -> list[tuple[str, float]]:
    """The (kind, cost) block sequence of one process round, for golden tests."""
    if result.trace is None:
        raise TraceUnavailableError("simulation was run without trace=True")
    return [
        (ev.kind, ev.cost)
        for ev in result.trace
        if ev.pid == process and ev.round == round_index
    ]


def format_trace(result: SimResult) -> str:
    """Line-oriented trace export: ``tick <t> proc <id> block <kind> cost <units>``."""
    if result.trace is None:
        raise TraceUnavailableError("simulation was run without trace=True")
    rows = sorted(result.trace, key=lambda ev: (ev.tick, ev.pid))
    lines = [
        f"tick {ev.tick:.10g} proc {ev.pid} block {ev.kind} cost {ev.cost:.10g}"
        for ev in rows
    ]
    return "\n".join(lines) + "\n" if lines else ""


def parse_trace(text: str) -> list[TraceEvent]:
    """Inverse of format_trace, minus the per-round bookkeeping (round=-1)."""
    events = []
    for ln, raw in enumerate(text.splitlines(), start=1):
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
            raise ValueError(f"trace line {ln}: malformed: {raw!r}")
        events.append(
            TraceEvent(float(parts[1]), int(parts[3]), -1, parts[5], float(parts[7]))
        )
    return events
