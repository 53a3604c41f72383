"""Passive bus slaves: RAM, GPIO, timer, interrupt controller, VGA.

Register accesses run in the initiating master's process. Only the
timer and the VGA refresh own kernel processes (their tick sources);
those are registered by the platform builder.

Register maps (repo-defined):
  timer  0x0 load (rw)   0x4 ctrl (rw: bit0 enable, bit1 irq_enable,
         bit2 auto_reload)   0x8 status (r: bit0 expired; w1c)
  intc   0x0 status (r)  0x4 mask (rw)  0x8 ack (w1c)
  vga    0x0 fb_base (rw)  0x4 ctrl (rw: bit0 enable)
  gpio   0x0 data (rw)
"""

from __future__ import annotations

from .errors import ConfigError, DeviceFault

VGA_WIDTH = 640
VGA_HEIGHT = 480
VGA_REFRESH_HZ = 60


def _reg_read(value: int, width: int) -> bytes:
    if width != 4:
        raise DeviceFault(f"register access width must be 4, got {width}")
    return value.to_bytes(4, "big")


def _reg_value(width: int, data: bytes) -> int:
    if width != 4:
        raise DeviceFault(f"register access width must be 4, got {width}")
    return int.from_bytes(data, "big")


class RamDevice:
    """Byte-addressable RAM, big-endian, zero-initialized."""

    def __init__(self, size: int, access_time_cycles: int = 1, base: int = 0):
        self.data = bytearray(size)
        self.size = size
        self.access_time_cycles = access_time_cycles
        self.base = base

    def _check(self, offset: int, width: int) -> None:
        if width not in (1, 2, 4):
            raise DeviceFault(f"bad access width {width}")
        if offset < 0 or offset + width > self.size:
            raise DeviceFault(f"RAM access out of range: offset=0x{offset:X} "
                              f"width={width} size=0x{self.size:X}")

    def read(self, offset: int, width: int) -> bytes:
        self._check(offset, width)
        return bytes(self.data[offset:offset + width])

    def write(self, offset: int, width: int, data: bytes) -> None:
        self._check(offset, width)
        self.data[offset:offset + width] = data

    # direct host-side access, used by loaders and test harnesses
    def poke_u32(self, offset: int, value: int) -> None:
        self.data[offset:offset + 4] = value.to_bytes(4, "big")

    def peek_u32(self, offset: int) -> int:
        return int.from_bytes(self.data[offset:offset + 4], "big")


class GpioDevice:
    """Single 32-bit data register; reads return the last written value."""

    access_time_cycles = 1

    def __init__(self):
        self.data = 0

    def read(self, offset: int, width: int) -> bytes:
        if offset != 0:
            raise DeviceFault(f"gpio has no register at offset 0x{offset:X}")
        return _reg_read(self.data, width)

    def write(self, offset: int, width: int, data: bytes) -> None:
        if offset != 0:
            raise DeviceFault(f"gpio has no register at offset 0x{offset:X}")
        self.data = _reg_value(width, data)


class TimerDevice:
    """Down-counter in bus cycles with optional auto-reload and irq.

    The countdown itself is driven by a platform-owned process that
    sleeps for the remaining cycles and calls timer_tick; writing load
    or ctrl re-arms it through on_change.
    """

    access_time_cycles = 1

    def __init__(self):
        self.load = 0
        self.enable = False
        self.irq_enable = False
        self.auto_reload = False
        self.expired = False
        self.counter = 0
        self.epoch = 0              # bumped on every reconfiguration
        self.settle_hook = None     # platform settles elapsed cycles first
        self.on_change = None       # platform wakes the tick process
        self.on_expire = None       # platform posts the intc bit

    def irq_line(self) -> bool:
        return self.expired and self.irq_enable

    def read(self, offset: int, width: int) -> bytes:
        if offset == 0x0:
            return _reg_read(self.load, width)
        if offset == 0x4:
            ctrl = (int(self.enable) | (int(self.irq_enable) << 1)
                    | (int(self.auto_reload) << 2))
            return _reg_read(ctrl, width)
        if offset == 0x8:
            return _reg_read(int(self.expired), width)
        raise DeviceFault(f"timer has no register at offset 0x{offset:X}")

    def write(self, offset: int, width: int, data: bytes) -> None:
        value = _reg_value(width, data)
        if self.settle_hook is not None:
            self.settle_hook()     # account cycles elapsed before the change
        if offset == 0x0:
            self.load = value
            self.counter = value
            self._changed()
        elif offset == 0x4:
            was_enabled = self.enable
            self.enable = bool(value & 1)
            self.irq_enable = bool(value & 2)
            self.auto_reload = bool(value & 4)
            if self.enable and not was_enabled:
                self.counter = self.load
            self._changed()
        elif offset == 0x8:
            if value & 1:
                self.expired = False
        else:
            raise DeviceFault(f"timer has no register at offset 0x{offset:X}")

    def _changed(self):
        self.epoch += 1
        if self.on_change is not None:
            self.on_change()


def timer_tick(dev: TimerDevice, cycles_elapsed: int) -> bool:
    """Advance the countdown by cycles_elapsed; returns the irq line state.

    Handles multiple expiries in one call when auto_reload is set; a
    one-shot expiry disables the timer.
    """
    if not dev.enable:
        return dev.irq_line()
    remaining = cycles_elapsed
    while remaining >= dev.counter:
        remaining -= dev.counter
        dev.expired = True
        if dev.on_expire is not None and dev.irq_enable:
            dev.on_expire()
        if dev.auto_reload and dev.load > 0:
            dev.counter = dev.load
        else:
            dev.enable = False
            dev.counter = 0
            return dev.irq_line()
    dev.counter -= remaining
    return dev.irq_line()


class IntcDevice:
    """Latching interrupt controller; one identical output line per CPU."""

    access_time_cycles = 1

    def __init__(self, cpu_count: int = 2):
        self.pending = 0
        self.mask = 0
        self.cpu_count = cpu_count

    def post(self, bit: int) -> None:
        """Latch a source interrupt (bit0 = timer, bit1 = gpio)."""
        self.pending |= (1 << bit)

    def cpu_line(self, cpu_id: int) -> bool:
        return (self.pending & self.mask) != 0

    def read(self, offset: int, width: int) -> bytes:
        if offset == 0x0:
            return _reg_read(self.pending, width)
        if offset == 0x4:
            return _reg_read(self.mask, width)
        raise DeviceFault(f"intc register at 0x{offset:X} is not readable")

    def write(self, offset: int, width: int, data: bytes) -> None:
        value = _reg_value(width, data)
        if offset == 0x4:
            self.mask = value
        elif offset == 0x8:
            self.pending &= ~value
        else:
            raise DeviceFault(f"intc register at 0x{offset:X} is not writable")


class VgaDevice:
    """Framebuffer controller: 640x480, 8-bit grayscale, fb in SRAM."""

    access_time_cycles = 1

    def __init__(self, fb_base: int = 0):
        self.fb_base = fb_base      # guest address inside SRAM
        self.enable = False

    def read(self, offset: int, width: int) -> bytes:
        if offset == 0x0:
            return _reg_read(self.fb_base, width)
        if offset == 0x4:
            return _reg_read(int(self.enable), width)
        raise DeviceFault(f"vga has no register at offset 0x{offset:X}")

    def write(self, offset: int, width: int, data: bytes) -> None:
        value = _reg_value(width, data)
        if offset == 0x0:
            self.fb_base = value
        elif offset == 0x4:
            self.enable = bool(value & 1)
        else:
            raise DeviceFault(f"vga has no register at offset 0x{offset:X}")

    def frame_bytes(self, sram: RamDevice) -> bytes:
        off = self.fb_base - sram.base
        size = VGA_WIDTH * VGA_HEIGHT
        if off < 0 or off + size > sram.size:
            raise ConfigError(
                f"framebuffer at 0x{self.fb_base:08X} (+{size}) exceeds SRAM")
        return bytes(sram.data[off:off + size])


def vga_dump(dev: VgaDevice, sram: RamDevice, path) -> None:
    """Write the current frame as a binary PGM (P5) file."""
    if not dev.enable:
        raise ConfigError("vga dump requested but controller is disabled")
    raster = dev.frame_bytes(sram)
    with open(path, "wb") as f:
        f.write(f"P5 {VGA_WIDTH} {VGA_HEIGHT} 255\n".encode("ascii"))
        f.write(raster)


def refresh_interval_ns(clock_period_ns: int) -> int:
    """The 60 Hz frame interval, quantized to the nearest clock edge."""
    exact = 1_000_000_000 / VGA_REFRESH_HZ
    return max(1, round(exact / clock_period_ns)) * clock_period_ns
