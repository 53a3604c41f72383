"""Platform construction: memory map, devices, bus binding, device processes.

The default address map is the six-region layout of the modeled board;
each CPU owns a private BRAM reachable without bus traffic, everything
else sits behind the shared bus. The word at BRAM_CPUID_OFFSET of each
BRAM is overwritten with the CPU's index before a run starts so one
program image can drive both cores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .bus import ArbiterConfig, Bus, CycleBus, MapEntry, MemoryMap
from .devices import (GpioDevice, IntcDevice, RamDevice, TimerDevice,
                      VgaDevice, refresh_interval_ns, timer_tick)
from .errors import ConfigError
from .kernel import Kernel
from .stats import WallStats
from .timing import TimingTable

BRAM_BASE = 0x00000000
BRAM_SIZE = 0x00002000
SRAM_BASE = 0x20100000
SRAM_SIZE = 0x00100000
GPIO_BASE = 0x40000000
INTC_BASE = 0x41200000
TIMER_BASE = 0x41C00000
VGA_BASE = 0x73A00000
IO_REGION_SIZE = 0x00010000

DEFAULT_REGIONS = (
    ("bram", BRAM_BASE, BRAM_SIZE),
    ("sram", SRAM_BASE, SRAM_SIZE),
    ("gpio", GPIO_BASE, IO_REGION_SIZE),
    ("intc", INTC_BASE, IO_REGION_SIZE),
    ("timer", TIMER_BASE, IO_REGION_SIZE),
    ("vga", VGA_BASE, IO_REGION_SIZE),
)

BRAM_CPUID_OFFSET = 0x1FFC
VGA_FB_DEFAULT = SRAM_BASE + 0x10000


@dataclass
class PlatformConfig:
    cpu_count: int = 2
    priorities: dict[int, int] = field(default_factory=lambda: {0: 0, 1: 1})
    timeout_cycles: int = 16
    regions: dict[str, tuple[int, int]] = field(
        default_factory=lambda: {n: (b, s) for n, b, s in DEFAULT_REGIONS})
    timing: TimingTable = field(default_factory=TimingTable)
    sram_access_cycles: int = 1
    vga_fb_base: int = VGA_FB_DEFAULT
    workloads: dict[str, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.cpu_count < 1:
            raise ConfigError(f"cpu_count must be >= 1, got {self.cpu_count}")
        missing = [i for i in range(self.cpu_count) if i not in self.priorities]
        if missing:
            raise ConfigError(f"no arbiter priority for CPUs {missing}")
        for name in ("bram", "sram", "gpio", "intc", "timer", "vga"):
            if name not in self.regions:
                raise ConfigError(f"memory map is missing region {name!r}")

    @classmethod
    def from_file(cls, path) -> "PlatformConfig":
        """Parse the key = value platform config format."""
        path = Path(path)
        kw: dict = {}
        priorities: dict[int, int] = {}
        regions = {n: (b, s) for n, b, s in DEFAULT_REGIONS}
        workload_names: list[str] = []
        workload_params: dict[str, dict[str, int]] = {}
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = (p.strip() for p in line.partition("="))
            try:
                if key == "cpu_count":
                    kw["cpu_count"] = int(val, 0)
                elif key == "timeout_cycles":
                    kw["timeout_cycles"] = int(val, 0)
                elif key == "sram_access_cycles":
                    kw["sram_access_cycles"] = int(val, 0)
                elif key == "vga_fb_base":
                    kw["vga_fb_base"] = int(val, 0)
                elif key == "timing":
                    kw["timing"] = TimingTable.load(path.parent / val)
                elif key.startswith("priority."):
                    priorities[int(key.split(".", 1)[1])] = int(val, 0)
                elif key.startswith("map."):
                    name = key.split(".", 1)[1]
                    base_s, size_s = val.split()
                    regions[name] = (int(base_s, 0), int(size_s, 0))
                elif key == "workloads":
                    workload_names = val.split()
                elif key.startswith("workload."):
                    _, wname, param = key.split(".", 2)
                    workload_params.setdefault(wname, {})[param] = int(val, 0)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        if priorities:
            kw["priorities"] = priorities
        kw["regions"] = regions
        workloads = {name: workload_params.get(name, {}) for name in workload_names}
        for name, params in workload_params.items():
            workloads.setdefault(name, params)
        kw["workloads"] = workloads
        return cls(**kw)


class Platform:
    """One instantiated system: kernel, devices, map, and a bus binding."""

    def __init__(self, cfg: PlatformConfig, *, cycle_binding: bool,
                 timed: bool, trace=None):
        self.cfg = cfg
        self.kernel = Kernel(trace=trace)
        self.stats = WallStats(self.kernel)
        t = cfg.timing

        bram_base, bram_size = cfg.regions["bram"]
        sram_base, sram_size = cfg.regions["sram"]
        self.brams = [RamDevice(bram_size, base=bram_base)
                      for _ in range(cfg.cpu_count)]
        self.sram = RamDevice(sram_size, access_time_cycles=cfg.sram_access_cycles,
                              base=sram_base)
        self.gpio = GpioDevice()
        self.intc = IntcDevice(cfg.cpu_count)
        self.timer = TimerDevice()
        self.vga = VgaDevice(fb_base=cfg.vga_fb_base)

        devices = {"bram": None, "sram": self.sram, "gpio": self.gpio,
                   "intc": self.intc, "timer": self.timer, "vga": self.vga}
        entries = [MapEntry(name, cfg.regions[name][0], cfg.regions[name][1],
                            devices[name]) for name in devices]
        self.memmap = MemoryMap(entries)   # validates the regions are disjoint
        self.bram_entry = self.memmap.entry("bram")

        arb = ArbiterConfig(priorities=dict(cfg.priorities),
                            timeout_cycles=cfg.timeout_cycles)
        if cycle_binding:
            self.bus = CycleBus(self.kernel, self.memmap, arb,
                                clock_period_ns=t.clock_period_ns,
                                stats=self.stats)
        else:
            self.bus = Bus(self.kernel, self.memmap, arb,
                           transaction_delay_ns=t.transaction_delay_ns,
                           timed=timed, stats=self.stats)

        self.frame_sink = None
        self._wire_timer()
        self._wire_vga()

    # -- device tick processes ---------------------------------------------

    def _wire_timer(self):
        k = self.kernel
        timer = self.timer
        period = self.cfg.timing.clock_period_ns
        timer.on_expire = lambda: self.intc.post(0)
        armed = [0]          # cycle number of the last settle

        def now_cycles():
            return k.now() // period

        def settle():
            c = now_cycles()
            d = c - armed[0]
            armed[0] = c
            if d > 0:
                timer_tick(timer, d)

        def body():
            while True:
                if not timer.enable or timer.counter <= 0:
                    k.block()
                    continue
                epoch = timer.epoch
                target = timer.counter
                k.wait(target * period)
                if timer.epoch != epoch:
                    continue          # reconfigured mid-sleep
                settle()

        proc = k.register(body, "timer")
        proc.component_stack[0] = "dev"
        timer.settle_hook = settle

        def on_change():
            if k.current is not proc:
                k.wake(proc)

        timer.on_change = on_change

    def _wire_vga(self):
        k = self.kernel
        vga = self.vga
        interval = refresh_interval_ns(self.cfg.timing.clock_period_ns)

        def body():
            while True:
                if not vga.enable or self.frame_sink is None:
                    k.block()
                    continue
                k.wait(interval)
                if vga.enable and self.frame_sink is not None:
                    self.frame_sink(k.now())

        proc = k.register(body, "vga")
        proc.component_stack[0] = "dev"
        self._vga_proc = proc

    def enable_frame_dumps(self, sink) -> None:
        """Install a frame callback (sim_ns -> None) and start the 60 Hz tick."""
        self.frame_sink = sink
        self.vga.enable = True
        self.kernel.wake(self._vga_proc)
