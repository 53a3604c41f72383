"""The four simulation levels over one platform.

  caba    cycle-stepped reference: one clock per kernel step, per-cycle
          bus arbitration. Its simulated time is the accuracy baseline.
  iss     timed instruction-sequential execution; data transactions are
          functional only (zero delay, no contention).
  pvt     like iss plus a per-transaction bus delay and transaction-
          granular fixed-priority contention.
  native  host-code tasks with guest-address I/O redirected into the
          platform; only I/O advances simulated time.

All four share the functional instruction core, so architectural
results agree; they differ only in how time is charged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter

from . import asm, isa
from .bus import Transaction
from .devices import vga_dump
from .errors import DataBusError, DeviceFault, GuestFault, KernelAbort, UnmappedFetch
from .platform import BRAM_CPUID_OFFSET, Platform, PlatformConfig

MODES = ("caba", "iss", "pvt", "native")


@dataclass
class RunReport:
    mode: str
    wall_seconds: float
    sim_cycles: int
    sim_ns: int
    instr_count: list[int]
    bus_transactions: int
    contention_stall_cycles: int
    component_wall_share: dict[str, float] = field(default_factory=dict)
    # the platform after the run, for architectural-state inspection
    final_platform: object = field(default=None, repr=False, compare=False)


class FetchPort:
    """A CPU's contention-free instruction path to its private BRAM."""

    __slots__ = ("bram", "base", "size", "cpu_id")

    def __init__(self, bram, base: int, cpu_id: int):
        self.bram = bram
        self.base = base
        self.size = bram.size
        self.cpu_id = cpu_id

    def fetch(self, pc: int) -> int:
        off = pc - self.base
        if off < 0 or off + 4 > self.size:
            raise UnmappedFetch("fetch outside private BRAM",
                                cpu_id=self.cpu_id, pc=pc)
        return int.from_bytes(self.bram.data[off:off + 4], "big")


class DataPort:
    """Data access routing: private BRAM locally, everything else via the
    shared bus using the engine's transport binding."""

    __slots__ = ("cpu_id", "bram", "base", "size", "transport", "txn_log")

    def __init__(self, cpu_id: int, bram, base: int, transport):
        self.cpu_id = cpu_id
        self.bram = bram
        self.base = base
        self.size = bram.size
        self.transport = transport
        self.txn_log: list[Transaction] = []

    def read(self, addr: int, width: int) -> bytes:
        off = addr - self.base
        if 0 <= off < self.size:
            try:
                data = self.bram.read(off, width)
            except DeviceFault as exc:
                raise DataBusError(str(exc), cpu_id=self.cpu_id) from exc
            self.txn_log.append(Transaction(self.cpu_id, "read", addr, width,
                                            payload=data))
            return data
        txn = self.transport(Transaction(self.cpu_id, "read", addr, width))
        self.txn_log.append(txn)
        if txn.status != "ok":
            raise DataBusError(f"read at 0x{addr:08X} failed: {txn.status}",
                               transaction=txn, cpu_id=self.cpu_id)
        return txn.payload

    def write(self, addr: int, width: int, data: bytes) -> None:
        off = addr - self.base
        if 0 <= off < self.size:
            try:
                self.bram.write(off, width, data)
            except DeviceFault as exc:
                raise DataBusError(str(exc), cpu_id=self.cpu_id) from exc
            self.txn_log.append(Transaction(self.cpu_id, "write", addr, width,
                                            payload=data))
            return
        txn = self.transport(Transaction(self.cpu_id, "write", addr, width,
                                         payload=data))
        self.txn_log.append(txn)
        if txn.status != "ok":
            raise DataBusError(f"write at 0x{addr:08X} failed: {txn.status}",
                               transaction=txn, cpu_id=self.cpu_id)


class NativeIo:
    """Guest-address I/O interface handed to native tasks."""

    __slots__ = ("bus", "cpu_id")

    def __init__(self, bus, cpu_id: int):
        self.bus = bus
        self.cpu_id = cpu_id

    def read(self, addr: int, width: int) -> bytes:
        txn = self.bus.transport(Transaction(self.cpu_id, "read", addr, width))
        if txn.status != "ok":
            raise DataBusError(f"native read at 0x{addr:08X} failed: "
                               f"{txn.status}", transaction=txn,
                               cpu_id=self.cpu_id)
        return txn.payload

    def write(self, addr: int, width: int, data: bytes) -> None:
        txn = self.bus.transport(Transaction(self.cpu_id, "write", addr, width,
                                             payload=data))
        if txn.status != "ok":
            raise DataBusError(f"native write at 0x{addr:08X} failed: "
                               f"{txn.status}", transaction=txn,
                               cpu_id=self.cpu_id)

    def read_u32(self, addr: int) -> int:
        return int.from_bytes(self.read(addr, 4), "big")

    def write_u32(self, addr: int, value: int) -> None:
        self.write(addr, 4, (value & 0xFFFFFFFF).to_bytes(4, "big"))

    def read_u8(self, addr: int) -> int:
        return self.read(addr, 1)[0]

    def write_u8(self, addr: int, value: int) -> None:
        self.write(addr, 1, bytes((value & 0xFF,)))


def _cpu_body(k, cpu, iport, dport, timing, intc, per_cycle, counts,
              instr_hook, mode):
    period = timing.clock_period_ns
    step = isa.step
    wait = k.wait

    def body():
        while not cpu.halted:
            if cpu.msr_ie and cpu.imm_latch is None and intc.cpu_line(cpu.cpu_id):
                isa.take_interrupt(cpu)
            pc0 = cpu.pc
            try:
                res = step(cpu, iport, dport, timing)
            except GuestFault as exc:
                raise GuestFault(f"{mode}: {exc}", cpu_id=cpu.cpu_id,
                                 pc=pc0) from exc
            counts[cpu.cpu_id] += 1
            if instr_hook is not None:
                instr_hook(cpu.cpu_id, cpu, res)
            if per_cycle:
                for _ in range(res.cycles):
                    wait(period)
            else:
                wait(res.cycles * period)

    return body


def _dir_frame_sink(plat: Platform, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    def sink(sim_ns: int) -> None:
        vga_dump(plat.vga, plat.sram, directory / f"frame_{sim_ns}.pgm")

    plat.enable_frame_dumps(sink)


def _run_kernel(plat: Platform, limit_ns):
    t0 = perf_counter()
    try:
        plat.kernel.run_until(limit_ns)
    except KernelAbort as abort:
        if isinstance(abort.__cause__, GuestFault):
            raise abort.__cause__
        raise
    finally:
        plat.stats.close()
    return perf_counter() - t0


def _report(mode, plat: Platform, wall, counts) -> RunReport:
    period = plat.cfg.timing.clock_period_ns
    sim_ns = plat.kernel.now()
    bus = plat.bus
    stalls = getattr(bus, "stall_cycles", None)
    if stalls is None:
        stalls = bus.stall_ns // period
    return RunReport(
        mode=mode,
        wall_seconds=wall,
        sim_cycles=sim_ns // period,
        sim_ns=sim_ns,
        instr_count=list(counts),
        bus_transactions=bus.transactions,
        contention_stall_cycles=stalls,
        component_wall_share=plat.stats.shares(),
    )


def _run_guest(mode: str, cfg: PlatformConfig, images, *, cycle_binding,
               timed, max_cycles=None, trace=None, frame_dir=None,
               dump_vga_path=None, pokes=None, instr_hook=None) -> RunReport:
    if len(images) > cfg.cpu_count:
        raise GuestFault(f"{len(images)} images for {cfg.cpu_count} CPUs")
    plat = Platform(cfg, cycle_binding=cycle_binding, timed=timed, trace=trace)
    period = cfg.timing.clock_period_ns
    cpus = [isa.CpuState(cpu_id=i) for i in range(cfg.cpu_count)]
    counts = [0] * cfg.cpu_count
    bram_base = cfg.regions["bram"][0]
    for i, cpu in enumerate(cpus):
        img = images[i] if i < len(images) else None
        if img is not None:
            asm.load_image(plat.brams[i].data, img)
            cpu.pc = img.entry_point
        else:
            cpu.halted = True          # CPU without an image stays parked
        plat.brams[i].poke_u32(BRAM_CPUID_OFFSET, i)
    if pokes is not None:
        pokes(plat)
    if frame_dir is not None:
        _dir_frame_sink(plat, frame_dir)
    for i, cpu in enumerate(cpus):
        if cpu.halted:
            continue
        iport = FetchPort(plat.brams[i], bram_base, i)
        transport = (plat.bus.cycle_transport if cycle_binding
                     else plat.bus.transport)
        dport = DataPort(i, plat.brams[i], bram_base, transport)
        proc = plat.kernel.register(
            _cpu_body(plat.kernel, cpu, iport, dport, cfg.timing, plat.intc,
                      cycle_binding, counts, instr_hook, mode), f"cpu{i}")
        proc.component_stack[0] = "cpu"
    limit = max_cycles * period if max_cycles is not None else None
    wall = _run_kernel(plat, limit)
    if not all(c.halted for c in cpus):
        busy = [i for i, c in enumerate(cpus) if not c.halted]
        raise GuestFault(f"{mode}: cpus {busy} did not halt within the cycle "
                         f"limit (sim time {plat.kernel.now()} ns)")
    if dump_vga_path is not None:
        vga_dump(plat.vga, plat.sram, dump_vga_path)
    report = _report(mode, plat, wall, counts)
    report.final_platform = plat       # kept for result extraction by callers
    return report


def run_caba(cfg: PlatformConfig, images, **kw) -> RunReport:
    """Cycle-stepped reference engine (the accuracy baseline)."""
    return _run_guest("caba", cfg, images, cycle_binding=True, timed=True, **kw)


def run_iss(cfg: PlatformConfig, images, **kw) -> RunReport:
    """Timed ISS: instruction costs only, communication time unmodeled."""
    return _run_guest("iss", cfg, images, cycle_binding=False, timed=False, **kw)


def run_pvt(cfg: PlatformConfig, images, **kw) -> RunReport:
    """Timed ISS plus per-transaction bus delay and contention."""
    return _run_guest("pvt", cfg, images, cycle_binding=False, timed=True, **kw)


def run_native(cfg: PlatformConfig, tasks, *, max_cycles=None, trace=None,
               frame_dir=None, dump_vga_path=None, pokes=None) -> RunReport:
    """Host-code tasks; only redirected I/O advances simulated time."""
    if len(tasks) > cfg.cpu_count:
        raise GuestFault(f"{len(tasks)} tasks for {cfg.cpu_count} CPUs")
    plat = Platform(cfg, cycle_binding=False, timed=True, trace=trace)
    period = cfg.timing.clock_period_ns
    for i in range(cfg.cpu_count):
        plat.brams[i].poke_u32(BRAM_CPUID_OFFSET, i)
    if pokes is not None:
        pokes(plat)
    if frame_dir is not None:
        _dir_frame_sink(plat, frame_dir)
    done = [task is None for task in tasks] + [True] * (cfg.cpu_count - len(tasks))

    def make_body(i, task):
        def body():
            task(NativeIo(plat.bus, i))
            done[i] = True
        return body

    for i, task in enumerate(tasks):
        if task is None:
            continue
        proc = plat.kernel.register(make_body(i, task), f"cpu{i}")
        proc.component_stack[0] = "cpu"
    limit = max_cycles * period if max_cycles is not None else None
    wall = _run_kernel(plat, limit)
    if not all(done):
        busy = [i for i, d in enumerate(done) if not d]
        raise GuestFault(f"native: tasks {busy} did not finish within the "
                         f"cycle limit")
    if dump_vga_path is not None:
        vga_dump(plat.vga, plat.sram, dump_vga_path)
    report = _report("native", plat, wall, [0] * cfg.cpu_count)
    report.final_platform = plat
    return report
