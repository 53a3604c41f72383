"""Workloads as host code with guest-address I/O redirected into the
platform. Computation costs no simulated time; every read/write of a
platform address goes through the shared bus."""

from __future__ import annotations

from .layout import (BARRIER, CELL_PX, FB, GRID_A, GRID_B, GRID_H, GRID_W,
                     RESULT, SCRATCH, VGA_CTRL)

FRAME_W = 640


def make_adder_task(n: int):
    def task(io):
        total = sum(range(1, n + 1)) & 0xFFFFFFFF
        io.write_u32(RESULT, total)      # the single redirected store
    return task


def make_life_task(cpu_id: int, generations: int, split: int, render: int):
    def task(io):
        rows = range(0, split) if cpu_id == 0 else range(split, GRID_H)
        my_flag = BARRIER + 4 * cpu_id
        other_flag = BARRIER + 4 * (1 - cpu_id)
        src, dst = GRID_A, GRID_B
        round_no = 0
        for _ in range(generations):
            for r in rows:
                for c in range(GRID_W):
                    n = 0
                    for dr in (-1, 0, 1):
                        for dc in (-1, 0, 1):
                            if dr == 0 and dc == 0:
                                continue
                            n += io.read_u8(src + ((r + dr) % GRID_H) * GRID_W
                                            + ((c + dc) % GRID_W))
                    alive = io.read_u8(src + r * GRID_W + c)
                    io.write_u8(dst + r * GRID_W + c,
                                1 if (n == 3 or (alive and n == 2)) else 0)
            round_no += 1
            io.write_u32(my_flag, round_no)
            while io.read_u32(other_flag) < round_no:
                pass
            src, dst = dst, src
        if cpu_id == 0 and render:
            for r in range(GRID_H):
                for c in range(GRID_W):
                    v = 255 if io.read_u8(src + r * GRID_W + c) else 0
                    base = FB + r * CELL_PX * FRAME_W + c * CELL_PX
                    for py in range(CELL_PX):
                        for px in range(CELL_PX):
                            io.write_u8(base + py * FRAME_W + px, v)
            io.write_u32(VGA_CTRL, 1)
    return task


def make_stress_task(cpu_id: int, iterations: int):
    def task(io):
        addr = SCRATCH + 4 * cpu_id
        for _ in range(iterations):
            io.write_u32(addr, (io.read_u32(addr) + 1) & 0xFFFFFFFF)
    return task
