"""Built-in workload fixtures: guest images, native tasks, SRAM pokes.

A fixture knows how to run under any engine: assembled program images
per CPU for the three guest engines, task factories for the native one,
and the parameter/seed pokes that make all four start from the same
architectural state.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .. import asm
from ..errors import ConfigError
from . import native
from .layout import (GRID_A_OFF, GRID_B_OFF, GRID_H, GRID_W, PARAM_OFF,
                     RENDER_OFF, RESULT_OFF, SPLIT_OFF)
from .oracle import LifeGrid


@lru_cache(maxsize=None)
def _program_image(name: str) -> asm.Image:
    source = (resources.files("mbvp.workloads") / "programs" / name)\
        .read_text(encoding="utf-8")
    return asm.assemble(source)


@lru_cache(maxsize=None)
def default_seed() -> bytes:
    text = (resources.files("mbvp.workloads") / "seeds" / "default.txt")\
        .read_text(encoding="utf-8")
    grid = LifeGrid.from_text(text)
    if (grid.width, grid.height) != (GRID_W, GRID_H):
        raise ConfigError("packaged seed has wrong dimensions")
    return bytes(grid.cells)


def seed_grid(seed: int) -> LifeGrid:
    """seed 0 selects the packaged pattern file; anything else is a PRNG
    seed for a reproducible random soup."""
    if seed == 0:
        return LifeGrid(width=GRID_W, height=GRID_H,
                        cells=bytearray(default_seed()))
    return LifeGrid.random(seed)


class Workload:
    name = ""
    defaults: dict[str, int] = {}

    def params(self, overrides: dict[str, int] | None) -> dict[str, int]:
        p = dict(self.defaults)
        for key, val in (overrides or {}).items():
            if key not in self.defaults:
                raise ConfigError(f"workload {self.name!r} has no parameter "
                                  f"{key!r} (known: {sorted(self.defaults)})")
            p[key] = val
        return p

    def images(self, params: dict[str, int], cpu_count: int) -> list[asm.Image]:
        raise NotImplementedError

    def native_tasks(self, params: dict[str, int], cpu_count: int) -> list:
        raise NotImplementedError

    def pokes(self, params: dict[str, int]):
        raise NotImplementedError


class AdderWorkload(Workload):
    name = "adder"
    defaults = {"n": 100}

    def images(self, params, cpu_count):
        return [_program_image("adder.asm")] + \
               [_program_image("halt.asm")] * (cpu_count - 1)

    def native_tasks(self, params, cpu_count):
        return [native.make_adder_task(params["n"])] + [None] * (cpu_count - 1)

    def pokes(self, params):
        def poke(plat):
            plat.sram.poke_u32(PARAM_OFF, params["n"])
        return poke

    @staticmethod
    def result_word(plat) -> int:
        return plat.sram.peek_u32(RESULT_OFF)


class LifeWorkload(Workload):
    name = "life"
    # the 10/6 row split is deliberately uneven: the early-finishing core
    # spends each generation's tail spinning on the barrier, which keeps
    # the shared bus contended and lets the engines' timing models differ
    defaults = {"generations": 10, "split": 10, "render": 0, "seed": 0}

    def images(self, params, cpu_count):
        if cpu_count < 2:
            raise ConfigError("the life fixture needs 2 CPUs for its barrier")
        return [_program_image("life.asm")] * 2 + \
               [_program_image("halt.asm")] * (cpu_count - 2)

    def native_tasks(self, params, cpu_count):
        if cpu_count < 2:
            raise ConfigError("the life fixture needs 2 CPUs for its barrier")
        g, s, rnd = params["generations"], params["split"], params["render"]
        return [native.make_life_task(0, g, s, rnd),
                native.make_life_task(1, g, s, rnd)] + \
               [None] * (cpu_count - 2)

    def pokes(self, params):
        cells = bytes(seed_grid(params["seed"]).cells)

        def poke(plat):
            plat.sram.data[GRID_A_OFF:GRID_A_OFF + len(cells)] = cells
            plat.sram.poke_u32(PARAM_OFF, params["generations"])
            plat.sram.poke_u32(SPLIT_OFF, params["split"])
            plat.sram.poke_u32(RENDER_OFF, params["render"])
        return poke

    @staticmethod
    def final_grid(plat, generations: int) -> LifeGrid:
        off = GRID_A_OFF if generations % 2 == 0 else GRID_B_OFF
        cells = bytearray(plat.sram.data[off:off + GRID_W * GRID_H])
        return LifeGrid(width=GRID_W, height=GRID_H, cells=cells)


class StressWorkload(Workload):
    name = "stress"
    defaults = {"iterations": 2000}

    def images(self, params, cpu_count):
        return [_program_image("stress.asm")] * min(cpu_count, 2) + \
               [_program_image("halt.asm")] * max(0, cpu_count - 2)

    def native_tasks(self, params, cpu_count):
        n = params["iterations"]
        return [native.make_stress_task(i, n) for i in range(min(cpu_count, 2))] \
            + [None] * max(0, cpu_count - 2)

    def pokes(self, params):
        def poke(plat):
            plat.sram.poke_u32(PARAM_OFF, params["iterations"])
        return poke


WORKLOADS: dict[str, Workload] = {
    w.name: w for w in (AdderWorkload(), LifeWorkload(), StressWorkload())
}


def get_workload(name: str) -> Workload:
    try:
        return WORKLOADS[name]
    except KeyError:
        raise ConfigError(f"unknown workload {name!r} "
                          f"(known: {sorted(WORKLOADS)})") from None
