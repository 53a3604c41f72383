"""Host-side reference implementations the guest results are checked against.

These are deliberately written as plain loops, independent of the
simulation path, so they can serve as oracles.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..errors import ConfigError
from .layout import CELL_PX, GRID_H, GRID_W

FRAME_W = 640
FRAME_H = 480


@dataclass
class LifeGrid:
    """Finite torus of live/dead cells, row-major, one byte per cell."""

    width: int = GRID_W
    height: int = GRID_H
    cells: bytearray = field(default_factory=bytearray)

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise ConfigError(f"grid must be at least 3x3, got "
                              f"{self.width}x{self.height}")
        if not self.cells:
            self.cells = bytearray(self.width * self.height)
        if len(self.cells) != self.width * self.height:
            raise ConfigError("cell count does not match dimensions")

    def get(self, row: int, col: int) -> int:
        return self.cells[row * self.width + col]

    def set(self, row: int, col: int, alive: bool) -> None:
        self.cells[row * self.width + col] = 1 if alive else 0

    def population(self) -> int:
        return sum(self.cells)

    @classmethod
    def from_text(cls, text: str) -> "LifeGrid":
        """Parse a seed file: '.' dead, '#' alive, one row per line."""
        rows = [line for line in text.splitlines() if line.strip()]
        if not rows:
            raise ConfigError("empty grid seed")
        width = len(rows[0])
        cells = bytearray()
        for line in rows:
            if len(line) != width:
                raise ConfigError("ragged grid seed rows")
            for ch in line:
                if ch == "#":
                    cells.append(1)
                elif ch == ".":
                    cells.append(0)
                else:
                    raise ConfigError(f"bad seed character {ch!r}")
        return cls(width=width, height=len(rows), cells=cells)

    def to_text(self) -> str:
        lines = []
        for r in range(self.height):
            row = self.cells[r * self.width:(r + 1) * self.width]
            lines.append("".join("#" if c else "." for c in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def random(cls, seed: int, width: int = GRID_W, height: int = GRID_H,
               density: float = 0.35) -> "LifeGrid":
        rng = random.Random(seed)
        cells = bytearray(1 if rng.random() < density else 0
                          for _ in range(width * height))
        return cls(width=width, height=height, cells=cells)


def life_oracle(grid: LifeGrid, generations: int) -> LifeGrid:
    """Conway's rules applied synchronously on the torus."""
    w, h = grid.width, grid.height
    cur = bytearray(grid.cells)
    for _ in range(generations):
        nxt = bytearray(w * h)
        for r in range(h):
            for c in range(w):
                n = 0
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        if dr == 0 and dc == 0:
                            continue
                        n += cur[((r + dr) % h) * w + ((c + dc) % w)]
                alive = cur[r * w + c]
                nxt[r * w + c] = 1 if (n == 3 or (alive and n == 2)) else 0
        cur = nxt
    return LifeGrid(width=w, height=h, cells=cur)


def adder_oracle(n: int) -> int:
    """Sum of 1..n; rejects results that do not fit in 32 bits."""
    if n < 0:
        raise ConfigError(f"n must be non-negative, got {n}")
    total = n * (n + 1) // 2
    if total > 0xFFFFFFFF:
        raise ConfigError(f"adder result for n={n} overflows 32 bits")
    return total


def render_frame(grid: LifeGrid) -> bytes:
    """Render the grid the way the guest program does: CELL_PX square
    blocks of 255/0 starting at the frame origin, rest black."""
    raster = bytearray(FRAME_W * FRAME_H)
    for r in range(grid.height):
        for c in range(grid.width):
            if not grid.get(r, c):
                continue
            for py in range(CELL_PX):
                row_off = (r * CELL_PX + py) * FRAME_W + c * CELL_PX
                raster[row_off:row_off + CELL_PX] = b"\xff" * CELL_PX
    return bytes(raster)


def render_pgm(grid: LifeGrid) -> bytes:
    header = f"P5 {FRAME_W} {FRAME_H} 255\n".encode("ascii")
    return header + render_frame(grid)
