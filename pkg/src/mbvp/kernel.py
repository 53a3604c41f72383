"""Deterministic discrete-event kernel with cooperative processes.

Processes are greenlets, so any function called from a process body may
suspend the caller (blocking waits happen in the initiator's process, no
callback inversion). Exactly one process executes at a time; a kernel
instance must never be shared across host threads.

Scheduling order is fully deterministic:

  * events dispatch in (time, phase, tiebreak) order;
  * normal waits and registrations use phase 0, tie-broken by the
    process registration index (FIFO fairness at equal timestamps);
  * ``wait(0)`` and ``wake()`` use phase 1, tie-broken by arrival, so a
    zero-delay wait re-queues behind everything already pending at the
    current time.
"""

from __future__ import annotations

import heapq
from enum import Enum
from typing import Callable

import greenlet

from .errors import ConfigError, KernelAbort, UsageError


class ProcState(Enum):
    RUNNABLE = "runnable"
    WAITING = "waiting"
    BLOCKED = "blocked"
    FINISHED = "finished"


class Process:
    """Handle for one registered process."""

    __slots__ = ("id", "index", "name", "state", "_glet", "_token",
                 "_started", "component_stack")

    def __init__(self, pid: int, index: int, name: str):
        self.id = pid
        self.index = index
        self.name = name
        self.state = ProcState.RUNNABLE
        self._glet: greenlet.greenlet | None = None
        self._token = 0          # bumped to invalidate a pending heap entry
        self._started = False
        self.component_stack = ["proc"]   # wall-time attribution label stack

    def __repr__(self):
        return f"Process({self.name!r}, index={self.index}, state={self.state.value})"


TraceSink = Callable[[int, str, str], None]


class Kernel:
    """Single-threaded discrete-event scheduler over integer nanoseconds."""

    def __init__(self, trace: TraceSink | None = None):
        self._now = 0
        self._heap: list[tuple[int, int, int, int, int, Process]] = []
        self._procs: list[Process] = []
        self._names: set[str] = set()
        self._seq = 0
        self._current: Process | None = None
        self._sched_glet = None
        self._finished = False
        self.blocked_remain = False
        self.dispatch_count = 0
        self.trace = trace
        self.dispatch_hook: Callable[[Process], None] | None = None

    # -- registration and queries ------------------------------------------

    def register(self, body: Callable[[], None], name: str) -> Process:
        """Register a process; it first runs at the current simulated time."""
        if self._finished:
            raise ConfigError("kernel finished; cannot register new processes")
        if name in self._names:
            raise ConfigError(f"duplicate process name {name!r}")
        proc = Process(pid=len(self._procs), index=len(self._procs), name=name)
        self._names.add(name)
        self._procs.append(proc)

        def runner():
            body()

        proc._glet = greenlet.greenlet(runner)
        self._push(proc, self._now, phase=0)
        proc.state = ProcState.RUNNABLE
        return proc

    def now(self) -> int:
        return self._now

    @property
    def current(self) -> Process | None:
        return self._current

    def state_counts(self) -> dict[str, int]:
        counts = {s.value: 0 for s in ProcState}
        for p in self._procs:
            counts[p.state.value] += 1
        return counts

    def processes(self) -> list[Process]:
        return list(self._procs)

    # -- process-side primitives -------------------------------------------

    def wait(self, delay_ns: int) -> None:
        """Suspend the calling process until now + delay_ns."""
        proc = self._current
        if proc is None:
            raise UsageError("wait() called outside a kernel process")
        if delay_ns < 0:
            raise UsageError(f"negative wait: {delay_ns}")
        proc._token += 1
        self._push(proc, self._now + delay_ns, phase=0 if delay_ns > 0 else 1)
        proc.state = ProcState.WAITING
        self._sched_glet.switch()

    def block(self) -> None:
        """Suspend the calling process until somebody calls wake() on it."""
        proc = self._current
        if proc is None:
            raise UsageError("block() called outside a kernel process")
        proc._token += 1        # invalidate any pending event
        proc.state = ProcState.BLOCKED
        self._sched_glet.switch()

    def wake(self, proc: Process) -> None:
        """Make a blocked or waiting process runnable at the current time.

        A pending timed wait is cancelled; the process re-runs behind
        everything already scheduled at the current instant.
        """
        if proc.state == ProcState.FINISHED:
            raise UsageError(f"wake() on finished process {proc.name!r}")
        if proc.state == ProcState.RUNNABLE or proc is self._current:
            return
        proc._token += 1
        self._push(proc, self._now, phase=1)
        proc.state = ProcState.RUNNABLE

    # -- event loop ----------------------------------------------------------

    def _push(self, proc: Process, t: int, phase: int) -> None:
        self._seq += 1
        tiebreak = proc.index if phase == 0 else self._seq
        heapq.heappush(self._heap, (t, phase, tiebreak, self._seq, proc._token, proc))

    def run(self) -> int:
        return self.run_until(None)

    def run_until(self, limit_ns: int | None = None) -> int:
        """Dispatch events in order until the queue drains or passes limit_ns.

        Returns the final simulated time (the time of the last dispatched
        event). A faulting process aborts the run with KernelAbort naming it.
        """
        if self._current is not None:
            raise UsageError("run_until() called from inside a process")
        self._sched_glet = greenlet.getcurrent()
        heap = self._heap
        while heap:
            t, phase, tiebreak, seq, token, proc = heap[0]
            if token != proc._token:      # cancelled entry
                heapq.heappop(heap)
                continue
            if limit_ns is not None and t > limit_ns:
                break
            heapq.heappop(heap)
            self._now = t
            self.dispatch_count += 1
            if self.trace is not None:
                self.trace(t, proc.name, "resume" if proc._started else "start")
            proc._started = True
            proc.state = ProcState.RUNNABLE
            if self.dispatch_hook is not None:
                self.dispatch_hook(proc)
            self._current = proc
            try:
                proc._glet.switch()
            except Exception as exc:
                proc.state = ProcState.FINISHED
                self._current = None
                raise KernelAbort(proc.name, f"process {proc.name!r} raised: {exc}") from exc
            self._current = None
            if proc._glet.dead:
                proc.state = ProcState.FINISHED
        self.blocked_remain = not self._heap and any(
            p.state != ProcState.FINISHED for p in self._procs)
        if not self._heap and not self.blocked_remain:
            self._finished = True
        return self._now

    @property
    def finished(self) -> bool:
        return self._finished


def file_trace_sink(fileobj) -> TraceSink:
    """Trace sink writing one dispatch per line: time, name, kind (TAB, LF)."""

    def sink(t: int, name: str, kind: str) -> None:
        fileobj.write(f"{t}\t{name}\t{kind}\n")

    return sink
