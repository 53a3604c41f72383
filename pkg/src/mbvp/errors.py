"""Exception taxonomy shared across the platform."""


class MbvpError(Exception):
    """Base class for all platform errors."""


class ConfigError(MbvpError):
    """Bad configuration: files, flags, platform construction. CLI exit 2."""


class UsageError(MbvpError):
    """API misuse, e.g. wait() called outside a process."""


class KernelAbort(MbvpError):
    """A simulation process raised; carries the process name."""

    def __init__(self, process_name: str, message: str = ""):
        self.process_name = process_name
        super().__init__(message or f"process {process_name!r} aborted")


class AsmError(MbvpError):
    """Assembly source error; carries a source line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class LoadError(MbvpError):
    """Image does not fit the target memory."""


class ImageFormatError(ConfigError):
    """Malformed image file."""


class GuestFault(MbvpError):
    """Guest software fault: illegal instruction, unmapped access, no progress.

    CLI exit 1.
    """

    def __init__(self, message: str, cpu_id: int | None = None,
                 pc: int | None = None, word: int | None = None):
        self.cpu_id = cpu_id
        self.pc = pc
        self.word = word
        parts = [message]
        if cpu_id is not None:
            parts.append(f"cpu={cpu_id}")
        if pc is not None:
            parts.append(f"pc=0x{pc:08X}")
        if word is not None:
            parts.append(f"word=0x{word:08X}")
        super().__init__(" ".join(parts))


class IllegalInstruction(GuestFault):
    """Instruction word does not decode."""

    def __init__(self, word: int, pc: int | None = None, cpu_id: int | None = None):
        super().__init__("illegal instruction", cpu_id=cpu_id, pc=pc, word=word)
        self.args = (f"illegal instruction word=0x{word:08X}",)
        self.word = word


class UnmappedFetch(GuestFault):
    """Instruction fetch outside the CPU's private BRAM."""


class DataBusError(GuestFault):
    """A data access completed with bus_error or timeout status."""

    def __init__(self, message: str, transaction=None, **kw):
        super().__init__(message, **kw)
        self.transaction = transaction


class DeviceFault(MbvpError):
    """Register access a device rejects; surfaced on the bus as bus_error."""


class MeasurementError(MbvpError):
    """Metric cannot be computed (zero wall time, missing component, ...)."""
