"""Multi-level virtual platform for a dual-core MicroBlaze-style MPSoC."""

from .engines import RunReport, run_caba, run_iss, run_native, run_pvt
from .platform import Platform, PlatformConfig
from .timing import TimingTable

__all__ = ["Platform", "PlatformConfig", "RunReport", "TimingTable",
           "run_caba", "run_iss", "run_native", "run_pvt"]

__version__ = "0.1.0"
