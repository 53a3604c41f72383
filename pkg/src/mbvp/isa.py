"""MicroBlaze-subset instruction set: decode, encode, execute, interrupts.

The numeric opcode assignments below are owned by this repo (see
docs/isa.md); binary compatibility with real MicroBlaze parts is a
non-goal. Memory order is big-endian. Register r0 reads as zero and
discards writes. Conditional branches test ra against zero; CMP
materializes a signed three-way comparison for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataBusError, IllegalInstruction, UnmappedFetch

M32 = 0xFFFFFFFF

# opcode tables: type A = register forms, type B = 16-bit-immediate forms.
# Word 0x00000000 deliberately decodes to nothing.
TYPE_A_OPCODES = {
    "ADD": 0x01, "RSUB": 0x02, "MUL": 0x03, "AND": 0x04, "OR": 0x05,
    "XOR": 0x06, "CMP": 0x07, "SRA": 0x08, "SRL": 0x09,
    "LW": 0x0A, "LBU": 0x0B, "SW": 0x0C, "SB": 0x0D,
    "BEQ": 0x0E, "BNE": 0x0F, "BLT": 0x10, "BLE": 0x11, "BGT": 0x12,
    "BGE": 0x13, "BR": 0x14, "HALT": 0x15,
}
TYPE_B_OPCODES = {
    "ADDI": 0x20, "RSUBI": 0x21, "ANDI": 0x22, "ORI": 0x23, "XORI": 0x24,
    "BSLLI": 0x25, "BSRLI": 0x26,
    "LWI": 0x27, "LBUI": 0x28, "SWI": 0x29, "SBI": 0x2A,
    "BEQI": 0x2B, "BNEI": 0x2C, "BLTI": 0x2D, "BLEI": 0x2E, "BGTI": 0x2F,
    "BGEI": 0x30, "BRI": 0x31, "BRLID": 0x32, "RTSD": 0x33, "RTID": 0x34,
    "IMM": 0x35,
}
MNEMONICS = tuple(TYPE_A_OPCODES) + tuple(TYPE_B_OPCODES)
_A_BY_OP = {v: k for k, v in TYPE_A_OPCODES.items()}
_B_BY_OP = {v: k for k, v in TYPE_B_OPCODES.items()}

BRANCHES_COND = {"BEQ", "BNE", "BLT", "BLE", "BGT", "BGE",
                 "BEQI", "BNEI", "BLTI", "BLEI", "BGTI", "BGEI"}
BRANCHES_UNCOND = {"BR", "BRI", "BRLID", "RTSD", "RTID"}
LOADS = {"LW", "LWI", "LBU", "LBUI"}
STORES = {"SW", "SWI", "SB", "SBI"}

INTERRUPT_VECTOR = 0x00000010
INTERRUPT_LINK_REG = 14


def s32(x: int) -> int:
    """Reinterpret a u32 as signed."""
    return x - 0x100000000 if x & 0x80000000 else x


@dataclass(frozen=True, slots=True)
class Instruction:
    mnemonic: str
    rd: int = 0
    ra: int = 0
    rb: int = 0
    imm16: int = 0
    form: str = "A"        # "A" | "B"


@dataclass(slots=True)
class CpuState:
    """Architectural state of one core."""

    regs: list[int] = field(default_factory=lambda: [0] * 32)
    pc: int = 0
    msr_ie: bool = True
    imm_latch: int | None = None
    cpu_id: int = 0
    halted: bool = False


@dataclass(slots=True)
class StepResult:
    executed: Instruction
    cycles: int
    transactions: tuple
    next_pc: int


def encode(ins: Instruction) -> int:
    """Pack an instruction into its 32-bit word."""
    for name, val in (("rd", ins.rd), ("ra", ins.ra), ("rb", ins.rb)):
        if not 0 <= val <= 31:
            raise ValueError(f"register index out of range: {name}={val}")
    if ins.form == "A":
        op = TYPE_A_OPCODES.get(ins.mnemonic)
        if op is None:
            raise ValueError(f"not a type-A mnemonic: {ins.mnemonic}")
        return (op << 26) | (ins.rd << 21) | (ins.ra << 16) | (ins.rb << 11)
    op = TYPE_B_OPCODES.get(ins.mnemonic)
    if op is None:
        raise ValueError(f"not a type-B mnemonic: {ins.mnemonic}")
    if not -0x8000 <= ins.imm16 <= 0xFFFF:
        raise ValueError(f"immediate out of range: {ins.imm16}")
    return (op << 26) | (ins.rd << 21) | (ins.ra << 16) | (ins.imm16 & 0xFFFF)


_decode_cache: dict[int, Instruction] = {}


def decode(word: int) -> Instruction:
    """Decode a 32-bit word; raises IllegalInstruction for unknown layouts."""
    ins = _decode_cache.get(word)
    if ins is not None:
        return ins
    op = (word >> 26) & 0x3F
    rd = (word >> 21) & 0x1F
    ra = (word >> 16) & 0x1F
    mn = _A_BY_OP.get(op)
    if mn is not None:
        if word & 0x7FF:       # type-A tail must be zero
            raise IllegalInstruction(word)
        ins = Instruction(mn, rd, ra, (word >> 11) & 0x1F, 0, "A")
    else:
        mn = _B_BY_OP.get(op)
        if mn is None:
            raise IllegalInstruction(word)
        imm = word & 0xFFFF
        if imm & 0x8000:
            imm -= 0x10000
        ins = Instruction(mn, rd, ra, 0, imm, "B")
    _decode_cache[word] = ins
    return ins


def fetch(cpu: CpuState, iport) -> int:
    """Fetch the word at pc over the CPU's private BRAM path."""
    if cpu.pc & 3:
        raise UnmappedFetch("misaligned fetch", cpu_id=cpu.cpu_id, pc=cpu.pc)
    return iport.fetch(cpu.pc)


def take_interrupt(cpu: CpuState) -> None:
    """Redirect to the interrupt vector.

    Caller guarantees: line asserted, msr_ie set, sampled between
    instructions, and no IMM prefix pending.
    """
    cpu.regs[INTERRUPT_LINK_REG] = cpu.pc
    cpu.msr_ie = False
    cpu.pc = INTERRUPT_VECTOR


def step(cpu: CpuState, iport, dport, timing=None) -> StepResult:
    """Fetch, decode and execute one instruction.

    Data accesses go through dport and may suspend the calling kernel
    process (the interconnect applies transaction delays). The returned
    cycle count is the timing-table cost for the caller to wait; it is 0
    when no table is supplied.
    """
    word = fetch(cpu, iport)
    ins = decode(word)
    regs = cpu.regs
    pc = cpu.pc
    next_pc = (pc + 4) & M32
    taken = False
    mn = ins.mnemonic

    if ins.form == "B":
        if cpu.imm_latch is not None and mn != "IMM":
            imm32 = (cpu.imm_latch << 16) | (ins.imm16 & 0xFFFF)
            cpu.imm_latch = None
        else:
            imm32 = ins.imm16 & M32
    else:
        imm32 = 0

    if dport is not None:
        dport.txn_log.clear()

    rd = ins.rd
    if mn == "ADD":
        if rd:
            regs[rd] = (regs[ins.ra] + regs[ins.rb]) & M32
    elif mn == "ADDI":
        if rd:
            regs[rd] = (regs[ins.ra] + imm32) & M32
    elif mn == "LWI" or mn == "LW":
        addr = (regs[ins.ra] + (imm32 if mn == "LWI" else regs[ins.rb])) & M32
        if addr & 3:
            raise DataBusError(f"unaligned word load at 0x{addr:08X}",
                               cpu_id=cpu.cpu_id, pc=pc)
        val = int.from_bytes(dport.read(addr, 4), "big")
        if rd:
            regs[rd] = val
    elif mn == "SWI" or mn == "SW":
        addr = (regs[ins.ra] + (imm32 if mn == "SWI" else regs[ins.rb])) & M32
        if addr & 3:
            raise DataBusError(f"unaligned word store at 0x{addr:08X}",
                               cpu_id=cpu.cpu_id, pc=pc)
        dport.write(addr, 4, regs[rd].to_bytes(4, "big"))
    elif mn == "LBUI" or mn == "LBU":
        addr = (regs[ins.ra] + (imm32 if mn == "LBUI" else regs[ins.rb])) & M32
        val = dport.read(addr, 1)[0]
        if rd:
            regs[rd] = val
    elif mn == "SBI" or mn == "SB":
        addr = (regs[ins.ra] + (imm32 if mn == "SBI" else regs[ins.rb])) & M32
        dport.write(addr, 1, bytes((regs[rd] & 0xFF,)))
    elif mn in ("BEQI", "BNEI", "BLTI", "BLEI", "BGTI", "BGEI",
                "BEQ", "BNE", "BLT", "BLE", "BGT", "BGE"):
        v = s32(regs[ins.ra])
        cond = mn[1:3]
        taken = ((cond == "EQ" and v == 0) or (cond == "NE" and v != 0)
                 or (cond == "LT" and v < 0) or (cond == "LE" and v <= 0)
                 or (cond == "GT" and v > 0) or (cond == "GE" and v >= 0))
        if taken:
            off = imm32 if ins.form == "B" else regs[ins.rb]
            next_pc = (pc + off) & M32
    elif mn == "RSUB":
        if rd:
            regs[rd] = (regs[ins.rb] - regs[ins.ra]) & M32
    elif mn == "RSUBI":
        if rd:
            regs[rd] = (imm32 - regs[ins.ra]) & M32
    elif mn == "MUL":
        if rd:
            regs[rd] = (regs[ins.ra] * regs[ins.rb]) & M32
    elif mn == "AND":
        if rd:
            regs[rd] = regs[ins.ra] & regs[ins.rb]
    elif mn == "ANDI":
        if rd:
            regs[rd] = regs[ins.ra] & imm32
    elif mn == "OR":
        if rd:
            regs[rd] = regs[ins.ra] | regs[ins.rb]
    elif mn == "ORI":
        if rd:
            regs[rd] = regs[ins.ra] | imm32
    elif mn == "XOR":
        if rd:
            regs[rd] = regs[ins.ra] ^ regs[ins.rb]
    elif mn == "XORI":
        if rd:
            regs[rd] = regs[ins.ra] ^ imm32
    elif mn == "CMP":
        a, b = s32(regs[ins.ra]), s32(regs[ins.rb])
        if rd:
            regs[rd] = (-1 if b < a else (1 if b > a else 0)) & M32
    elif mn == "SRA":
        if rd:
            regs[rd] = (s32(regs[ins.ra]) >> 1) & M32
    elif mn == "SRL":
        if rd:
            regs[rd] = regs[ins.ra] >> 1
    elif mn == "BSLLI":
        if rd:
            regs[rd] = (regs[ins.ra] << (imm32 & 31)) & M32
    elif mn == "BSRLI":
        if rd:
            regs[rd] = regs[ins.ra] >> (imm32 & 31)
    elif mn == "IMM":
        cpu.imm_latch = ins.imm16 & 0xFFFF
    elif mn == "BRI":
        next_pc = (pc + imm32) & M32
        taken = True
    elif mn == "BR":
        next_pc = (pc + regs[ins.rb]) & M32
        taken = True
    elif mn == "BRLID":
        if rd:
            regs[rd] = (pc + 4) & M32
        next_pc = (pc + imm32) & M32
        taken = True
    elif mn == "RTSD":
        next_pc = (regs[ins.ra] + imm32) & M32
        taken = True
    elif mn == "RTID":
        next_pc = (regs[ins.ra] + imm32) & M32
        cpu.msr_ie = True
        taken = True
    elif mn == "HALT":
        cpu.halted = True
    else:  # pragma: no cover - table and dispatch kept in sync
        raise IllegalInstruction(word, pc=pc, cpu_id=cpu.cpu_id)

    cpu.pc = next_pc
    cycles = timing.cycles_for(mn, taken) if timing is not None else 0
    txns = tuple(dport.txn_log) if dport is not None else ()
    return StepResult(ins, cycles, txns, next_pc)
