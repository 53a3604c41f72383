"""Experiment driver: runs workloads across engines and reports the
speed/accuracy trade-off per level.

Speed-up is wall_ref / wall_x with the cycle-stepped engine as the
reference (bigger means faster). Precision error is the relative
deviation of a level's simulated time from the reference engine's, in
percent. All simulation-derived numbers are deterministic; only the
wall-clock column varies between repetitions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .engines import MODES, RunReport, run_caba, run_iss, run_native, run_pvt
from .errors import ConfigError, GuestFault, MeasurementError
from .platform import PlatformConfig
from .workloads import get_workload

CSV_HEADER = "workload,mode,speedup,precision_pct,wall_s,sim_ns"

DEFAULT_MAX_CYCLES = 50_000_000


def speedup(wall_ref: float, wall_x: float) -> float:
    """Reference wall time over this level's wall time."""
    if wall_ref <= 0 or wall_x <= 0:
        raise MeasurementError(f"wall times must be positive: "
                               f"ref={wall_ref}, x={wall_x}")
    return wall_ref / wall_x


def precision_error(sim_x: int, sim_ref: int) -> float:
    """Relative deviation from the reference simulated time, in percent."""
    if sim_ref <= 0:
        raise MeasurementError(f"reference simulated time must be positive, "
                               f"got {sim_ref}")
    return abs(sim_x - sim_ref) / sim_ref * 100.0


def bus_wall_share(report: RunReport) -> float:
    """Fraction of host wall time spent executing the bus model."""
    share = report.component_wall_share.get("bus")
    if share is None:
        raise MeasurementError(
            f"report for {report.mode!r} carries no bus wall share")
    return share


@dataclass
class ExperimentRow:
    workload: str
    mode: str
    speedup: float | None
    precision_pct: float | None
    wall_s: float | None
    sim_ns: int | None
    failed: bool = False


@dataclass
class ExperimentResult:
    rows: list[ExperimentRow] = field(default_factory=list)


def run_workload(cfg: PlatformConfig, name: str, mode: str,
                 params: dict[str, int] | None = None,
                 max_cycles: int = DEFAULT_MAX_CYCLES, **engine_kw) -> RunReport:
    """Run one built-in workload under one engine."""
    if mode not in MODES:
        raise ConfigError(f"unknown engine {mode!r} (known: {', '.join(MODES)})")
    workload = get_workload(name)
    full = workload.params(params)
    pokes = workload.pokes(full)
    if mode == "native":
        tasks = workload.native_tasks(full, cfg.cpu_count)
        return run_native(cfg, tasks, max_cycles=max_cycles, pokes=pokes,
                          **engine_kw)
    images = workload.images(full, cfg.cpu_count)
    runner = {"caba": run_caba, "iss": run_iss, "pvt": run_pvt}[mode]
    return runner(cfg, images, max_cycles=max_cycles, pokes=pokes, **engine_kw)


def _best_of(cfg, name, mode, params, repeat, max_cycles) -> RunReport:
    best = None
    for _ in range(max(1, repeat)):
        rep = run_workload(cfg, name, mode, params, max_cycles=max_cycles)
        if best is None or rep.wall_seconds < best.wall_seconds:
            best = rep
    return best


def run_experiment(cfg: PlatformConfig, repeat: int = 1,
                   max_cycles: int = DEFAULT_MAX_CYCLES) -> ExperimentResult:
    """Run every configured workload under all four engines.

    The reference engine runs first; a failing engine marks its row
    failed without aborting the rest.
    """
    workloads = cfg.workloads or {"adder": {}, "life": {}}
    result = ExperimentResult()
    for name, params in workloads.items():
        try:
            ref = _best_of(cfg, name, "caba", params, repeat, max_cycles)
        except (GuestFault, ConfigError):
            result.rows.extend(
                ExperimentRow(name, mode, None, None, None, None, failed=True)
                for mode in MODES)
            continue
        result.rows.append(ExperimentRow(
            name, "caba", 1.0, 0.0, ref.wall_seconds, ref.sim_ns))
        for mode in ("iss", "pvt", "native"):
            try:
                rep = _best_of(cfg, name, mode, params, repeat, max_cycles)
            except (GuestFault, ConfigError):
                result.rows.append(
                    ExperimentRow(name, mode, None, None, None, None,
                                  failed=True))
                continue
            result.rows.append(ExperimentRow(
                name, mode,
                speedup(ref.wall_seconds, rep.wall_seconds),
                precision_error(rep.sim_ns, ref.sim_ns),
                rep.wall_seconds, rep.sim_ns))
    return result


def _fmt(value, spec="{:.6g}") -> str:
    return "" if value is None else spec.format(value)


def to_csv(result: ExperimentResult) -> str:
    """Stable text form: header plus one row per (workload, mode)."""
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in result.rows:
        sim = "" if r.sim_ns is None else str(r.sim_ns)
        out.write(f"{r.workload},{r.mode},{_fmt(r.speedup)},"
                  f"{_fmt(r.precision_pct)},{_fmt(r.wall_s)},{sim}\n")
    return out.getvalue()


def parse_csv(text: str) -> ExperimentResult:
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError("not an experiment CSV (bad header)")
    result = ExperimentResult()
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 6:
            raise ConfigError(f"bad CSV row: {ln!r}")
        name, mode, sp, prec, wall, sim = parts
        failed = sp == "" and sim == ""
        result.rows.append(ExperimentRow(
            name, mode,
            float(sp) if sp else None,
            float(prec) if prec else None,
            float(wall) if wall else None,
            int(sim) if sim else None,
            failed=failed))
    return result


def render_table(result: ExperimentResult) -> str:
    """Human-readable results table grouped by workload."""
    header = f"{'workload':<10} {'engine':<8} {'speed-up':>10} " \
             f"{'precision':>10} {'wall [s]':>10} {'sim [ns]':>14}"
    lines = [header, "-" * len(header)]
    for r in result.rows:
        if r.failed:
            lines.append(f"{r.workload:<10} {r.mode:<8} {'FAILED':>10}")
            continue
        lines.append(
            f"{r.workload:<10} {r.mode:<8} {r.speedup:>10.2f} "
            f"{r.precision_pct:>9.2f}% {r.wall_s:>10.4f} {r.sim_ns:>14}")
    return "\n".join(lines) + "\n"
