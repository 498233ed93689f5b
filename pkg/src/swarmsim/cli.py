"""Command-line entry point: ``swarmsim run | sweep | trace | validate | default-config``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .experiment import PRESETS, SweepSpec, aggregate, figure_configs, run_simulation, run_sweep, simulate, write_outputs
from .model import ConfigError, SimConfig, validate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

TRACE_COLUMNS = ["step", "agent", "class", "x", "y", "a_R", "target_x", "target_y"]

log = logging.getLogger("swarmsim")


def _default_out() -> str:
    return os.environ.get("SWARMSIM_OUT", "results")


def _load_config(args) -> SimConfig:
    config = SimConfig.load(args.config) if args.config else SimConfig()
    if args.fast is not None:
        config = config.with_fast_count(args.fast)
    changes = {}
    if args.k is not None:
        changes["k"] = args.k
    if args.target_speed is not None:
        changes["target_speed"] = args.target_speed
    if args.steps is not None:
        changes["T_f"] = args.steps
    if args.seed is not None:
        changes["seed"] = args.seed
    return validate(config.replace(**changes))


def cmd_run(args) -> int:
    config = _load_config(args)
    summary = run_simulation(config)
    path = write_outputs([summary], args.out, "run")
    print(f"time_on_target={summary.time_on_target:.6f} xi={summary.xi:.6f} -> {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    target = args.preset
    if target in PRESETS:
        spec = figure_configs(target, full=args.full)
    elif Path(target).suffix == ".json" or Path(target).exists():
        spec = SweepSpec.load(target)
    else:
        print(f"error: unknown preset {target!r}; valid presets: {', '.join(PRESETS)}", file=sys.stderr)
        return EXIT_INVALID
    if args.steps is not None:
        spec = dataclasses.replace(spec, steps=args.steps)
    if args.seeds is not None:
        spec = dataclasses.replace(spec, seeds=tuple(range(args.seeds)))
    spec.validate()
    jobs = max(1, min(args.jobs, os.cpu_count() or 1))

    def progress(s):
        log.info("%s k=%d N_f=%d v=%g tot=%.4f xi=%.4f (%.1fs)", s.run_id, s.cell.k, s.cell.n_fast,
                 s.cell.target_speed, s.time_on_target, s.xi, s.wall_clock)

    results = run_sweep(spec, jobs=jobs, progress=progress)
    path = write_outputs(results, args.out, spec.name)
    print(f"{'k':>4} {'N_f':>4} {'v':>5} {'time_on_target':>15} {'xi':>8}")
    for row in aggregate(results):
        c = row["cell"]
        print(f"{c.k:>4} {c.n_fast:>4} {c.target_speed:>5g} {row['time_on_target']:>15.4f} {row['xi']:>8.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_trace(args) -> int:
    if args.stride < 1:
        raise ConfigError([f"stride must be >= 1, got {args.stride}"])
    config = _load_config(args)
    names = [cls.name for cls, _ in config.composition]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)

        def observer(t, swarm, target, outcome, phi):
            if t % args.stride:
                return
            tx, ty = (repr(float(a)) for a in target.position)
            for i in range(swarm.n):
                writer.writerow([t, i, names[swarm.class_idx[i]], repr(float(swarm.positions[i, 0])),
                                 repr(float(swarm.positions[i, 1])), repr(float(swarm.a_R[i])), tx, ty])

        simulate(config, observer=observer)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load_config(args)
    print(f"ok: N={config.N} k={config.k} composition="
          + ", ".join(f"{cls.name}:{n}" for cls, n in config.composition))
    return EXIT_OK


def cmd_default_config(args) -> int:
    text = json.dumps(SimConfig().to_dict(), indent=2) + "\n"
    if args.path:
        Path(args.path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (defaults to the built-in configuration)")
    p.add_argument("--k", type=int, help="neighbour degree")
    p.add_argument("--fast", type=int, help="number of fast agents; the slow class takes the rest")
    p.add_argument("--target-speed", type=float)
    p.add_argument("--steps", type=int, help="horizon T_f")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation and write summary CSV + histogram JSON")
    _add_overrides(p)
    p.add_argument("--out", default=None, help="output directory (default $SWARMSIM_OUT or ./results)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a figure preset or a sweep spec file")
    p.add_argument("preset", help=f"one of {', '.join(PRESETS)}, or a sweep JSON file")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (capped at the core count)")
    p.add_argument("--full", action="store_true", help="100,000 steps and 5 seeds per cell")
    p.add_argument("--steps", type=int, help="override steps per run")
    p.add_argument("--seeds", type=int, help="override number of seeds per cell")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trace", help="dump every stride-th step's positions for plotting")
    _add_overrides(p)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--stride", type=int, default=100)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("validate", help="check a config and its overrides")
    _add_overrides(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("default-config", help="print (or write) the default config JSON")
    p.add_argument("path", nargs="?")
    p.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "out", 1) is None:
        args.out = _default_out()
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
