"""Command-line interface.

Exit codes: 0 success, 1 guest software fault, 2 configuration error
(including bad flags).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import asm, harness
from .engines import MODES, RunReport, run_caba, run_iss, run_native, run_pvt
from .errors import AsmError, ConfigError, GuestFault, KernelAbort, MbvpError
from .kernel import file_trace_sink
from .platform import PlatformConfig
from .timing import TimingTable
from .workloads import get_workload


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mbvp",
        description="Dual-core MicroBlaze-style virtual platform with four "
                    "simulation levels (caba, iss, pvt, native).")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one workload under one engine")
    run.add_argument("--engine", required=True, choices=MODES)
    run.add_argument("--workload", help="built-in workload name")
    run.add_argument("--image", action="append", default=[],
                     help="program image file, once per CPU (guest engines)")
    run.add_argument("--param", action="append", default=[], metavar="K=V",
                     help="workload parameter override")
    run.add_argument("--config", help="platform config file")
    run.add_argument("--timing", help="timing table file")
    run.add_argument("--max-cycles", type=int, default=harness.DEFAULT_MAX_CYCLES)
    run.add_argument("--trace", help="write an event trace to this file")
    run.add_argument("--dump-vga", help="write the final frame as PGM here")
    run.add_argument("--frame-dir", help="write 60 Hz frame dumps to this dir")

    bench = sub.add_parser("bench", help="full speed/accuracy experiment")
    bench.add_argument("--config", help="platform config file")
    bench.add_argument("--timing", help="timing table file")
    bench.add_argument("--out-csv", help="also write results as CSV")
    bench.add_argument("--repeat", type=int, default=1,
                       help="runs per row, keeping the fastest wall time")
    bench.add_argument("--max-cycles", type=int,
                       default=harness.DEFAULT_MAX_CYCLES)

    asmp = sub.add_parser("asm", help="assemble a source file to an image")
    asmp.add_argument("source")
    asmp.add_argument("-o", "--output", required=True)

    dis = sub.add_parser("disasm", help="disassemble an image file")
    dis.add_argument("image")
    return p


def _load_config(args) -> PlatformConfig:
    cfg = (PlatformConfig.from_file(args.config) if args.config
           else PlatformConfig())
    if getattr(args, "timing", None):
        cfg.timing = TimingTable.load(args.timing)
    return cfg


def _parse_params(pairs: list[str]) -> dict[str, int]:
    params = {}
    for pair in pairs:
        key, sep, val = pair.partition("=")
        if not sep:
            raise ConfigError(f"--param expects K=V, got {pair!r}")
        try:
            params[key.strip()] = int(val.strip(), 0)
        except ValueError:
            raise ConfigError(f"--param {key}: bad integer {val!r}") from None
    return params


def _print_report(rep: RunReport) -> None:
    print(f"engine        {rep.mode}")
    print(f"wall          {rep.wall_seconds:.4f} s")
    print(f"sim time      {rep.sim_ns} ns ({rep.sim_cycles} cycles)")
    instr = ", ".join(f"cpu{i}={n}" for i, n in enumerate(rep.instr_count))
    print(f"instructions  {instr}")
    print(f"bus           {rep.bus_transactions} transactions, "
          f"{rep.contention_stall_cycles} contention stall cycles")
    shares = ", ".join(f"{k} {v * 100:.1f}%"
                       for k, v in sorted(rep.component_wall_share.items(),
                                          key=lambda kv: -kv[1]))
    print(f"wall shares   {shares}")


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    trace_file = None
    engine_kw = {"max_cycles": args.max_cycles}
    if args.dump_vga:
        engine_kw["dump_vga_path"] = args.dump_vga
    if args.frame_dir:
        engine_kw["frame_dir"] = args.frame_dir
    try:
        if args.trace:
            trace_file = open(args.trace, "w", encoding="utf-8", newline="")
            engine_kw["trace"] = file_trace_sink(trace_file)
        if args.workload and args.image:
            raise ConfigError("--workload and --image are mutually exclusive")
        if args.workload:
            rep = harness.run_workload(cfg, args.workload, args.engine,
                                       _parse_params(args.param), **engine_kw)
        else:
            if not args.image:
                raise ConfigError("run needs --workload or --image")
            if args.engine == "native":
                raise ConfigError("the native engine runs workload task "
                                  "bodies; use --workload")
            images = [asm.read_image_file(Path(f)) for f in args.image]
            runner = {"caba": run_caba, "iss": run_iss, "pvt": run_pvt}
            rep = runner[args.engine](cfg, images, **engine_kw)
    finally:
        if trace_file is not None:
            trace_file.close()
    _print_report(rep)
    return 0


def _cmd_bench(args) -> int:
    cfg = _load_config(args)
    result = harness.run_experiment(cfg, repeat=args.repeat,
                                    max_cycles=args.max_cycles)
    print(harness.render_table(result), end="")
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8", newline="") as f:
            f.write(harness.to_csv(result))
        print(f"csv written to {args.out_csv}")
    return 1 if any(r.failed for r in result.rows) else 0


def _cmd_asm(args) -> int:
    source = Path(args.source).read_text(encoding="utf-8")
    image = asm.assemble(source)
    asm.write_image_file(image, args.output)
    total = sum(len(d) for _, d in image.sections)
    print(f"{args.output}: {len(image.sections)} section(s), {total} bytes, "
          f"{len(image.symbols)} symbol(s)")
    return 0


def _cmd_disasm(args) -> int:
    image = asm.read_image_file(args.image)
    sys.stdout.write(asm.disassemble(image))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "bench": _cmd_bench,
                "asm": _cmd_asm, "disasm": _cmd_disasm}
    try:
        return handlers[args.command](args)
    except (ConfigError, AsmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GuestFault, KernelAbort) as exc:
        print(f"guest fault: {exc}", file=sys.stderr)
        return 1
    except MbvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
