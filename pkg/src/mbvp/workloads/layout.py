"""Guest-visible SRAM layout shared by all workload fixtures.

The assembly programs hardcode these addresses, so fixtures assume the
default memory map. Grids are double-buffered, one byte per cell,
row-major. The BRAM word at CPUID_OFF holds the CPU index (written by
the engine before the run starts).
"""

from ..platform import BRAM_CPUID_OFFSET, SRAM_BASE, VGA_BASE

GRID_W = 16
GRID_H = 16
CELL_PX = 8                    # rendered pixel block per cell

GRID_A_OFF = 0x0000
GRID_B_OFF = 0x4000
BARRIER_OFF = 0x8000           # one word per CPU
RESULT_OFF = 0x8100            # adder result word
PARAM_OFF = 0x8104             # n (adder), generations (life), iters (stress)
SPLIT_OFF = 0x8108             # first grid row owned by CPU1
RENDER_OFF = 0x810C            # nonzero: CPU0 renders the final grid
SCRATCH_OFF = 0x9000           # stress fixture scratch words
FB_OFF = 0x10000               # framebuffer (640*480 bytes)

GRID_A = SRAM_BASE + GRID_A_OFF
GRID_B = SRAM_BASE + GRID_B_OFF
BARRIER = SRAM_BASE + BARRIER_OFF
RESULT = SRAM_BASE + RESULT_OFF
PARAM = SRAM_BASE + PARAM_OFF
SPLIT = SRAM_BASE + SPLIT_OFF
RENDER = SRAM_BASE + RENDER_OFF
SCRATCH = SRAM_BASE + SCRATCH_OFF
FB = SRAM_BASE + FB_OFF

VGA_CTRL = VGA_BASE + 0x4
CPUID_OFF = BRAM_CPUID_OFFSET


def grid_cell_addr(base: int, row: int, col: int) -> int:
    return base + row * GRID_W + col
