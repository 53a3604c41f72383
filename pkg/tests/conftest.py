import pytest

from mbvp.bus import Transaction
from mbvp.devices import RamDevice
from mbvp.engines import FetchPort
from mbvp.errors import DataBusError
from mbvp import asm, isa
from mbvp.platform import PlatformConfig


class SparsePort:
    """Data port over a sparse byte map, for ISA-level tests."""

    def __init__(self):
        self.mem: dict[int, int] = {}
        self.txn_log: list[Transaction] = []

    def read(self, addr, width):
        data = bytes(self.mem.get(addr + i, 0) for i in range(width))
        self.txn_log.append(Transaction(0, "read", addr, width, payload=data))
        return data

    def write(self, addr, width, data):
        for i, b in enumerate(data):
            self.mem[addr + i] = b
        self.txn_log.append(Transaction(0, "write", addr, width,
                                        payload=bytes(data)))

    def poke_u32(self, addr, value):
        self.write(addr, 4, value.to_bytes(4, "big"))
        self.txn_log.clear()

    def peek_u32(self, addr):
        return int.from_bytes(bytes(self.mem.get(addr + i, 0)
                                    for i in range(4)), "big")


def run_snippet(source, regs=None, max_steps=10_000, port=None, timing=None):
    """Assemble a snippet into a BRAM, run it on a bare CPU until HALT.

    Returns (cpu, data_port, list of StepResults).
    """
    image = asm.assemble(source)
    bram = RamDevice(0x2000)
    asm.load_image(bram.data, image)
    cpu = isa.CpuState()
    cpu.pc = image.entry_point
    iport = FetchPort(bram, 0, 0)
    dport = port if port is not None else SparsePort()
    results = []
    for _ in range(max_steps):
        results.append(isa.step(cpu, iport, dport, timing))
        if cpu.halted:
            return cpu, dport, results
    raise AssertionError("snippet did not halt")


@pytest.fixture
def default_cfg():
    return PlatformConfig()
