"""Shared OPB-style bus: address decode, fixed-priority arbitration, and
two transport bindings.

Both bindings run entirely in the initiating master's kernel process;
slaves have no processes of their own. The TLM binding blocks a
contending master until the holder releases and then charges one
transaction delay. The cycle binding re-arbitrates every bus cycle, is
never preemptive, and enforces the 16-cycle fixed timeout counted from
the first request cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, DeviceFault
from .kernel import Kernel


@dataclass(slots=True)
class Transaction:
    """One bus access."""

    master_id: int
    kind: str                 # "read" | "write"
    address: int
    width: int                # 1 | 2 | 4
    payload: bytes = b""
    status: str = "ok"        # "ok" | "bus_error" | "timeout"
    annotated_delay: int = 0  # ns charged by the interconnect

    def __post_init__(self):
        if self.address + self.width > 0x100000000:
            raise ConfigError(f"transaction wraps address space: "
                              f"0x{self.address:08X}+{self.width}")


@dataclass(frozen=True)
class MapEntry:
    name: str
    base: int
    size: int
    device: object = None     # None marks a region not served by this bus


class MemoryMap:
    """Non-overlapping address regions, each bound to a device."""

    def __init__(self, entries: list[MapEntry]):
        for e in entries:
            if e.size <= 0:
                raise ConfigError(f"region {e.name!r} has size {e.size}")
        ordered = sorted(entries, key=lambda e: e.base)
        for a, b in zip(ordered, ordered[1:]):
            if a.base + a.size > b.base:
                raise ConfigError(f"regions {a.name!r} and {b.name!r} overlap")
        self.entries = list(entries)
        self._ordered = ordered

    def decode(self, addr: int):
        """Return (entry, offset) for the region containing addr, else None."""
        for e in self._ordered:
            if e.base <= addr < e.base + e.size:
                return e, addr - e.base
        return None

    def entry(self, name: str) -> MapEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise ConfigError(f"no region named {name!r}")


@dataclass
class ArbiterConfig:
    priorities: dict[int, int] = field(default_factory=lambda: {0: 0, 1: 1})
    timeout_cycles: int = 16

    def __post_init__(self):
        ranks = list(self.priorities.values())
        if len(set(ranks)) != len(ranks):
            raise ConfigError(f"arbiter ranks must be unique: {self.priorities}")


def arbitrate_cycle(requests: set[int], cfg: ArbiterConfig) -> int | None:
    """Grant the requesting master with the lowest rank; None if no requests."""
    if not requests:
        return None
    return min(requests, key=lambda m: cfg.priorities[m])


def _device_access(entry: MapEntry, offset: int, txn: Transaction, stats) -> None:
    """Run the slave's read/write method in the caller's process."""
    if stats is not None:
        stats.push("dev")
    try:
        if txn.kind == "read":
            txn.payload = entry.device.read(offset, txn.width)
        else:
            entry.device.write(offset, txn.width, txn.payload)
    except DeviceFault:
        txn.status = "bus_error"
        if txn.kind == "read":
            txn.payload = bytes(txn.width)
    finally:
        if stats is not None:
            stats.pop()


class Bus:
    """Transaction-granular binding (TLM blocking transport).

    timed=False (ISS level): no arbitration, no delay.
    timed=True (PV+T and native): the caller holds the bus for one
    transaction delay; contenders block and are served best-rank-first
    on release, then by arrival.
    """

    def __init__(self, kernel: Kernel, memmap: MemoryMap, cfg: ArbiterConfig,
                 transaction_delay_ns: int = 0, timed: bool = False, stats=None):
        self.kernel = kernel
        self.map = memmap
        self.cfg = cfg
        self.delay_ns = transaction_delay_ns
        self.timed = timed
        self.stats = stats
        self._holder = None            # Process currently owning the bus
        self._waiters = []             # [(rank, arrival_seq, process)]
        self._seq = 0
        self.transactions = 0
        self.stall_ns = 0

    def transport(self, txn: Transaction) -> Transaction:
        if self.stats is not None:
            self.stats.push("bus")
        try:
            self.transactions += 1
            hit = self.map.decode(txn.address)
            if hit is None or hit[0].device is None:
                txn.status = "bus_error"
                if txn.kind == "read":
                    txn.payload = bytes(txn.width)
                return txn
            if self.timed:
                self._acquire(txn.master_id)
                txn.annotated_delay = self.delay_ns
                self.kernel.wait(self.delay_ns)
            _device_access(hit[0], hit[1], txn, self.stats)
            if self.timed:
                self._release()
            return txn
        finally:
            if self.stats is not None:
                self.stats.pop()

    def _acquire(self, master_id: int) -> None:
        k = self.kernel
        me = k.current
        if self._holder is None:
            self._holder = me
            return
        self._seq += 1
        self._waiters.append((self.cfg.priorities[master_id], self._seq, me))
        t0 = k.now()
        k.block()
        self.stall_ns += k.now() - t0
        assert self._holder is me, "woken waiter must own the bus"

    def _release(self) -> None:
        if self._waiters:
            self._waiters.sort(key=lambda w: (w[0], w[1]))
            _, _, proc = self._waiters.pop(0)
            self._holder = proc
            self.kernel.wake(proc)
        else:
            self._holder = None


class CycleBus:
    """Cycle-stepped binding with per-cycle fixed-priority arbitration.

    Masters assert a request each cycle until granted; a granted
    transfer occupies 1 cycle plus the target's access time and is never
    preempted. No grant-plus-completion within timeout_cycles of the
    first request returns status timeout (unmapped targets never ack, so
    they always time out).
    """

    def __init__(self, kernel: Kernel, memmap: MemoryMap, cfg: ArbiterConfig,
                 clock_period_ns: int = 10, stats=None):
        self.kernel = kernel
        self.map = memmap
        self.cfg = cfg
        self.period = clock_period_ns
        self.stats = stats
        self._requests: dict[int, list] = {}   # master -> [granted, first_cycle]
        self._busy_until = 0                   # cycle number the bus frees at
        self._decided_cycle = -1
        self.transactions = 0
        self.stall_cycles = 0

    def _cycle(self) -> int:
        return self.kernel.now() // self.period

    def _evaluate(self, cyc: int) -> None:
        # one grant decision per cycle, after every same-cycle request
        # has been asserted (callers pass through a zero wait first)
        if self._decided_cycle == cyc:
            return
        self._decided_cycle = cyc
        if self._busy_until > cyc or not self._requests:
            return
        winner = arbitrate_cycle(set(self._requests), self.cfg)
        slot = self._requests[winner]
        if slot[1] < self._busy_until and cyc == self._busy_until:
            # registered handoff: a master that was waiting during the
            # previous transfer samples its grant on the next edge; an
            # idle bus keeps granting combinationally
            return
        del self._requests[winner]
        slot[0] = True

    def cycle_transport(self, txn: Transaction) -> Transaction:
        k = self.kernel
        period = self.period
        if self.stats is not None:
            self.stats.push("bus")
        try:
            self.transactions += 1
            first = self._cycle()
            deadline = first + self.cfg.timeout_cycles
            slot = [False, first]
            self._requests[txn.master_id] = slot
            while True:
                k.wait(0)              # let all same-cycle requesters assert
                cyc = self._cycle()
                self._evaluate(cyc)
                if slot[0]:
                    break
                if cyc >= deadline:    # starved past the fixed timeout
                    del self._requests[txn.master_id]
                    self.stall_cycles += cyc - first
                    return self._timed_out(txn)
                k.wait(period)
            grant_cycle = self._cycle()
            self.stall_cycles += grant_cycle - first
            hit = self.map.decode(txn.address)
            if hit is None or hit[0].device is None:
                # no slave acks: hold the bus until the timeout expires
                self._busy_until = deadline
                for _ in range(deadline - grant_cycle):
                    k.wait(period)
                return self._timed_out(txn)
            entry, offset = hit
            transfer = 1 + getattr(entry.device, "access_time_cycles", 1)
            if grant_cycle + transfer > deadline:
                self._busy_until = deadline
                for _ in range(deadline - grant_cycle):
                    k.wait(period)
                return self._timed_out(txn)
            self._busy_until = grant_cycle + transfer
            for _ in range(transfer):
                k.wait(period)
            _device_access(entry, offset, txn, self.stats)
            return txn
        finally:
            if self.stats is not None:
                self.stats.pop()

    @staticmethod
    def _timed_out(txn: Transaction) -> Transaction:
        txn.status = "timeout"
        if txn.kind == "read":
            txn.payload = bytes(txn.width)
        return txn
