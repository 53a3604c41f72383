"""Per-mnemonic cycle costs, clock period and bus transaction delay.

The default numbers are stand-ins chosen for plausibility, not vendor
data, and everything here is loadable from a key = value text file so
experiments can swap tables without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .errors import ConfigError

_ONE_CYCLE = ("ADD", "ADDI", "RSUB", "RSUBI", "AND", "ANDI", "OR", "ORI",
              "XOR", "XORI", "CMP", "SRA", "SRL", "BSLLI", "BSRLI", "IMM",
              "BEQ", "BNE", "BLT", "BLE", "BGT", "BGE",
              "BEQI", "BNEI", "BLTI", "BLEI", "BGTI", "BGEI",
              "BR", "BRI", "BRLID", "RTSD", "RTID", "HALT")
_DEFAULT_CYCLES = {mn: 1 for mn in _ONE_CYCLE}
_DEFAULT_CYCLES["MUL"] = 3
_DEFAULT_CYCLES.update({mn: 2 for mn in ("LW", "LWI", "LBU", "LBUI",
                                         "SW", "SWI", "SB", "SBI")})

_CONTROL = isa.BRANCHES_COND | isa.BRANCHES_UNCOND


@dataclass
class TimingTable:
    """Cycle costs for the timed engines. All mnemonics must cost >= 1."""

    clock_period_ns: int = 10
    cycles: dict[str, int] = field(default_factory=lambda: dict(_DEFAULT_CYCLES))
    transaction_delay_cycles: int = 2
    branch_taken_penalty: int = 2

    def __post_init__(self):
        if self.clock_period_ns < 1:
            raise ConfigError(f"clock_period_ns must be >= 1, got {self.clock_period_ns}")
        missing = [mn for mn in isa.MNEMONICS if mn not in self.cycles]
        if missing:
            raise ConfigError(f"timing table missing mnemonics: {missing}")
        bad = {mn: c for mn, c in self.cycles.items() if c < 1}
        if bad:
            raise ConfigError(f"timing entries must be >= 1 cycle: {bad}")

    def cycles_for(self, mnemonic: str, taken: bool = False) -> int:
        c = self.cycles[mnemonic]
        if taken and mnemonic in _CONTROL:
            c += self.branch_taken_penalty
        return c

    @property
    def transaction_delay_ns(self) -> int:
        return self.transaction_delay_cycles * self.clock_period_ns

    @classmethod
    def load(cls, path) -> "TimingTable":
        """Parse a key = value timing file; unknown keys are rejected."""
        kw = {"cycles": dict(_DEFAULT_CYCLES)}
        with open(path, "r", encoding="utf-8") as f:
            for lineno, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, _, val = (p.strip() for p in line.partition("="))
                try:
                    num = int(val, 0)
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad integer {val!r}") from None
                if key in ("clock_period_ns", "transaction_delay_cycles",
                           "branch_taken_penalty"):
                    kw[key] = num
                elif key in isa.MNEMONICS:
                    kw["cycles"][key] = num
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        return cls(**kw)

    def dump(self) -> str:
        lines = [f"clock_period_ns = {self.clock_period_ns}",
                 f"transaction_delay_cycles = {self.transaction_delay_cycles}",
                 f"branch_taken_penalty = {self.branch_taken_penalty}"]
        lines += [f"{mn} = {self.cycles[mn]}" for mn in sorted(self.cycles)]
        return "\n".join(lines) + "\n"
