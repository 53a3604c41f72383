"""Two-pass assembler, disassembler, memory-image loader and image files.

Grammar: one statement per line; ``;`` starts a comment; ``label:``
prefixes may stack. Directives: ``.org addr``, ``.word v, ...``,
``.space n``, ``.byte v, ...``. Literals are decimal or 0x hex.
``LI rd, value`` is a pseudo-instruction that expands to an IMM prefix
plus ORI when the value (or a label address) needs more than a signed
16-bit immediate.

Conditional branches and BRI/BRLID accept a label and assemble the
pc-relative offset; it must fit in a signed 16-bit immediate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import isa
from .errors import AsmError, ImageFormatError, LoadError

_LABEL_RE = re.compile(r"^([A-Za-z_]\w*)\s*:\s*")
_REG_RE = re.compile(r"^[rR]([0-9]|[12][0-9]|3[01])$")

# operand shapes; "rel" positions accept labels and assemble pc-relative
_SHAPES = {
    **{mn: ("rd", "ra", "rb") for mn in
       ("ADD", "RSUB", "MUL", "AND", "OR", "XOR", "CMP", "LW", "LBU", "SW", "SB")},
    **{mn: ("rd", "ra") for mn in ("SRA", "SRL")},
    **{mn: ("ra", "rb") for mn in ("BEQ", "BNE", "BLT", "BLE", "BGT", "BGE")},
    "BR": ("rb",),
    "HALT": (),
    **{mn: ("rd", "ra", "imm") for mn in
       ("ADDI", "RSUBI", "ANDI", "ORI", "XORI", "BSLLI", "BSRLI",
        "LWI", "LBUI", "SWI", "SBI")},
    **{mn: ("ra", "rel") for mn in
       ("BEQI", "BNEI", "BLTI", "BLEI", "BGTI", "BGEI")},
    "BRI": ("rel",),
    "BRLID": ("rd", "rel"),
    "RTSD": ("ra", "imm"),
    "RTID": ("ra", "imm"),
    "IMM": ("imm",),
}


@dataclass
class Image:
    """Loadable program: disjoint byte sections plus symbols."""

    sections: list[tuple[int, bytes]] = field(default_factory=list)
    entry_point: int = 0
    symbols: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        spans = sorted((base, base + len(data)) for base, data in self.sections
                       if len(data))
        for (a0, a1), (b0, _) in zip(spans, spans[1:]):
            if a1 > b0:
                raise LoadError(f"image sections overlap at 0x{b0:08X}")
        if spans and not any(a0 <= self.entry_point < a1 for a0, a1 in spans):
            raise LoadError(f"entry point 0x{self.entry_point:08X} "
                            f"outside all sections")


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok, 0)
    except ValueError:
        raise AsmError(lineno, f"bad integer literal {tok!r}") from None


def _parse_reg(tok: str, lineno: int) -> int:
    m = _REG_RE.match(tok.strip())
    if not m:
        raise AsmError(lineno, f"expected register, got {tok!r}")
    return int(m.group(1))


class _Stmt:
    __slots__ = ("lineno", "addr", "kind", "mnemonic", "ops", "values", "size")

    def __init__(self, lineno, addr, kind, mnemonic=None, ops=None,
                 values=None, size=0):
        self.lineno = lineno
        self.addr = addr
        self.kind = kind          # "ins" | "li" | "word" | "space" | "byte"
        self.mnemonic = mnemonic
        self.ops = ops
        self.values = values
        self.size = size


class _Region:
    __slots__ = ("base", "lineno", "stmts", "size")

    def __init__(self, base: int, lineno: int):
        self.base = base
        self.lineno = lineno
        self.stmts: list[_Stmt] = []
        self.size = 0


def assemble(source: str) -> Image:
    labels: dict[str, tuple[int, int]] = {}   # name -> (addr, def line)
    regions: list[_Region] = []
    region: _Region | None = None

    def lc() -> int:
        return region.base + region.size if region is not None else 0

    # pass 1: addresses and sizes
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        while True:
            m = _LABEL_RE.match(line)
            if not m:
                break
            name = m.group(1)
            if name in labels:
                raise AsmError(lineno, f"duplicate label {name!r}; first "
                                       f"defined on line {labels[name][1]}")
            labels[name] = (lc(), lineno)
            line = line[m.end():]
        if not line:
            continue
        parts = line.split(None, 1)
        head = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        ops = [o.strip() for o in rest.split(",")] if rest.strip() else []

        if head == ".org":
            if len(ops) != 1:
                raise AsmError(lineno, ".org takes one address")
            region = _Region(_parse_int(ops[0], lineno), lineno)
            regions.append(region)
            continue
        if region is None:
            region = _Region(0, lineno)
            regions.append(region)

        addr = lc()
        if head == ".word":
            if not ops:
                raise AsmError(lineno, ".word needs at least one value")
            stmt = _Stmt(lineno, addr, "word", values=ops, size=4 * len(ops))
        elif head == ".space":
            if len(ops) != 1:
                raise AsmError(lineno, ".space takes one size")
            n = _parse_int(ops[0], lineno)
            if n < 0:
                raise AsmError(lineno, f".space size must be >= 0, got {n}")
            stmt = _Stmt(lineno, addr, "space", size=n)
        elif head == ".byte":
            if not ops:
                raise AsmError(lineno, ".byte needs at least one value")
            stmt = _Stmt(lineno, addr, "byte", values=ops, size=len(ops))
        elif head.startswith("."):
            raise AsmError(lineno, f"unknown directive {head!r}")
        else:
            mn = head.upper()
            if mn == "LI":
                if len(ops) != 2:
                    raise AsmError(lineno, "LI takes rd, value")
                if _looks_numeric(ops[1]):
                    size = 4 if _fits_s16(_parse_int(ops[1], lineno)) else 8
                else:
                    size = 8                    # labels always take the long form
                stmt = _Stmt(lineno, addr, "li", ops=ops, size=size)
            else:
                if mn not in _SHAPES:
                    raise AsmError(lineno, f"unknown mnemonic {head!r}")
                if addr % 4:
                    raise AsmError(lineno, f"instruction at misaligned "
                                           f"address 0x{addr:X}")
                stmt = _Stmt(lineno, addr, "ins", mnemonic=mn, ops=ops, size=4)
        region.stmts.append(stmt)
        region.size += stmt.size

    label_addrs = {name: addr for name, (addr, _) in labels.items()}

    # pass 2: emit
    sections: list[tuple[int, bytes]] = []
    for reg in regions:
        data = bytearray()
        for stmt in reg.stmts:
            data.extend(_emit(stmt, label_addrs))
        if data:
            sections.append((reg.base, bytes(data)))
    spans = sorted(((base, base + len(d)), reg.lineno)
                   for (base, d), reg in zip(sections,
                                             [r for r in regions if r.size])
                   ) if sections else []
    for ((_, a1), _), ((b0, _), bline) in zip(spans, spans[1:]):
        if a1 > b0:
            raise AsmError(bline, f".org region at 0x{b0:08X} overlaps "
                                  f"the previous one")
    entry = min((base for base, d in sections if d), default=0)
    return Image(sections=sections, entry_point=entry, symbols=label_addrs)


def _looks_numeric(tok: str) -> bool:
    try:
        int(tok, 0)
        return True
    except ValueError:
        return False


def _fits_s16(v: int) -> bool:
    v &= 0xFFFFFFFF
    return v < 0x8000 or v >= 0xFFFF8000


def _operand_value(tok: str, labels, lineno: int) -> int:
    if tok in labels:
        return labels[tok]
    return _parse_int(tok, lineno)


def _emit(stmt: _Stmt, labels: dict[str, int]) -> bytes:
    lineno = stmt.lineno
    if stmt.kind == "space":
        return bytes(stmt.size)
    if stmt.kind == "word":
        out = bytearray()
        for tok in stmt.values:
            v = _operand_value(tok, labels, lineno) & 0xFFFFFFFF
            out += v.to_bytes(4, "big")
        return bytes(out)
    if stmt.kind == "byte":
        out = bytearray()
        for tok in stmt.values:
            v = _parse_int(tok, lineno)
            if not 0 <= v <= 0xFF:
                raise AsmError(lineno, f".byte value out of range: {v}")
            out.append(v)
        return bytes(out)
    if stmt.kind == "li":
        rd = _parse_reg(stmt.ops[0], lineno)
        val = _operand_value(stmt.ops[1], labels, lineno) & 0xFFFFFFFF
        if stmt.size == 4:
            imm = val if val < 0x8000 else val - 0x100000000
            return isa.encode(isa.Instruction("ADDI", rd=rd, ra=0, imm16=imm,
                                              form="B")).to_bytes(4, "big")
        hi, lo = val >> 16, val & 0xFFFF
        w1 = isa.encode(isa.Instruction("IMM", imm16=hi, form="B"))
        w2 = isa.encode(isa.Instruction("ORI", rd=rd, ra=0, imm16=lo, form="B"))
        return w1.to_bytes(4, "big") + w2.to_bytes(4, "big")

    mn = stmt.mnemonic
    shape = _SHAPES[mn]
    if len(stmt.ops) != len(shape):
        raise AsmError(lineno, f"{mn} takes {len(shape)} operand(s), "
                               f"got {len(stmt.ops)}")
    fields = {"form": "A" if mn in isa.TYPE_A_OPCODES else "B"}
    for kind, tok in zip(shape, stmt.ops):
        if kind in ("rd", "ra", "rb"):
            fields[kind] = _parse_reg(tok, lineno)
        elif kind == "imm":
            v = _parse_int(tok, lineno)
            if not -0x8000 <= v <= 0xFFFF:
                raise AsmError(lineno, f"immediate out of range: {v}")
            fields["imm16"] = v
        else:  # rel
            if tok in labels:
                rel = labels[tok] - stmt.addr
            else:
                rel = _parse_int(tok, lineno)
            if not -0x8000 <= rel <= 0x7FFF:
                raise AsmError(lineno, f"branch target out of signed-16-bit "
                                       f"range: {rel}")
            fields["imm16"] = rel
    try:
        word = isa.encode(isa.Instruction(mn, **fields))
    except ValueError as exc:
        raise AsmError(lineno, str(exc)) from None
    return word.to_bytes(4, "big")


def disassemble(image: Image) -> str:
    """Address-annotated listing that reassembles to the identical image."""
    out = []
    for base, data in image.sections:
        out.append(f".org 0x{base:X}")
        pos = 0
        while pos + 4 <= len(data) and (base + pos) % 4 == 0:
            addr = base + pos
            word = int.from_bytes(data[pos:pos + 4], "big")
            try:
                text = _render(isa.decode(word))
            except Exception:
                text = f".word 0x{word:08X}"
            out.append(f"    {text:<28}; 0x{addr:08X}")
            pos += 4
        if pos < len(data):
            rest = ", ".join(f"0x{b:02X}" for b in data[pos:])
            out.append(f"    .byte {rest}")
    return "\n".join(out) + ("\n" if out else "")


def _render(ins: isa.Instruction) -> str:
    shape = _SHAPES[ins.mnemonic]
    vals = {"rd": f"r{ins.rd}", "ra": f"r{ins.ra}", "rb": f"r{ins.rb}",
            "imm": str(ins.imm16), "rel": str(ins.imm16)}
    ops = ", ".join(vals[k] for k in shape)
    return f"{ins.mnemonic} {ops}" if ops else ins.mnemonic


def load_image(mem: bytearray, image: Image) -> None:
    """Copy sections into a memory; fails before writing anything."""
    for base, data in image.sections:
        if base < 0 or base + len(data) > len(mem):
            raise LoadError(f"section at 0x{base:08X} (+0x{len(data):X}) "
                            f"exceeds memory of size 0x{len(mem):X}")
    for base, data in image.sections:
        mem[base:base + len(data)] = data


MAGIC = "MPIMG1"


def write_image_file(image: Image, path) -> None:
    lines = [MAGIC]
    for base, data in image.sections:
        lines.append(f"SECTION {base:08X} {len(data):08X}")
        for i in range(0, len(data), 32):
            lines.append(data[i:i + 32].hex().upper())
    for name in sorted(image.symbols):
        lines.append(f"SYM {name} {image.symbols[name]:08X}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_image_file(path) -> Image:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or lines[0] != MAGIC:
        raise ImageFormatError(f"{path}: missing {MAGIC} header")
    sections: list[tuple[int, bytes]] = []
    symbols: dict[str, int] = {}
    cur: bytearray | None = None
    declared = 0
    for ln in lines[1:]:
        if not ln.strip():
            continue
        if ln.startswith("SECTION "):
            _finish_section(sections, cur, declared, path)
            try:
                _, base_s, len_s = ln.split()
                base, declared = int(base_s, 16), int(len_s, 16)
            except ValueError:
                raise ImageFormatError(f"{path}: bad section line {ln!r}") from None
            cur = bytearray()
            sections.append((base, cur))   # placeholder, finalized below
        elif ln.startswith("SYM "):
            try:
                _, name, addr_s = ln.split()
                symbols[name] = int(addr_s, 16)
            except ValueError:
                raise ImageFormatError(f"{path}: bad symbol line {ln!r}") from None
        else:
            if cur is None:
                raise ImageFormatError(f"{path}: data before any SECTION")
            try:
                cur.extend(bytes.fromhex(ln.strip()))
            except ValueError:
                raise ImageFormatError(f"{path}: bad hex line {ln!r}") from None
    _finish_section(sections, cur, declared, path)
    final = [(base, bytes(data)) for base, data in sections]
    entry = min((base for base, d in final if d), default=0)
    return Image(sections=final, entry_point=entry, symbols=symbols)


def _finish_section(sections, cur, declared, path) -> None:
    if cur is not None and len(cur) != declared:
        raise ImageFormatError(f"{path}: section length mismatch: "
                               f"declared 0x{declared:X}, got 0x{len(cur):X}")
