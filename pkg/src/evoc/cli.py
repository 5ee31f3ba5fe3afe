"""Command-line entry point.

Subcommands: ``run`` (one simulation), ``batch`` (seeded ensembles per
condition), ``oracle`` (exhaustive landscape), ``validate`` (template set
against constraints) and ``plot`` (redraw charts from aggregate CSVs).

Flags override config-file values, which override ``EVOC_SEED`` for the seed,
which overrides the built-in defaults. Exit codes: 0 success, 1 validation or
input failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .domain import DATA_DIR, ParseError, TemplateSetError, load_template_set
from .experiment import (
    Condition,
    ExperimentConfig,
    load_config,
    load_template_sets,
    parse_grid,
    replot,
    run_batch,
    write_outputs,
)
from .fitness import (
    ConstraintError,
    enumerate_landscape,
    landscape_csv,
    parse_constraints,
    validate_template_set,
)
from .rng import RandomStreams
from .society import ConfigError, SocietyConfig, action_dump, init_society, metrics_csv, run, step, trace_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _resolve_templates(arg: str) -> Path:
    """``ff1``/``ff2`` name the shipped sets; anything else is a path."""
    if arg in ("ff1", "ff2"):
        return DATA_DIR / f"{arg}.txt"
    return Path(arg)


def _env_seed() -> int:
    raw = os.environ.get("EVOC_SEED")
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"EVOC_SEED must be an integer, got {raw!r}") from None


def _grid(text: str) -> tuple[int, int]:
    try:
        return parse_grid(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _base_config(args: argparse.Namespace) -> ExperimentConfig:
    env = _env_seed()
    defaults = ExperimentConfig(base=SocietyConfig(seed=env), base_seed=env)
    if args.config:
        return load_config(args.config, defaults)
    return defaults


def _apply_society_flags(base: SocietyConfig, args: argparse.Namespace) -> SocietyConfig:
    kw: dict = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "chaining", False):
        kw["chaining_enabled"] = True
    if getattr(args, "cf", False):
        kw["cf_enabled"] = True
    if args.iterations is not None:
        kw["iterations"] = args.iterations
    if args.no_switch:
        kw["switch_iteration"] = None
    elif args.switch_at is not None:
        kw["switch_iteration"] = args.switch_at
    if args.grid is not None:
        kw["grid_width"], kw["grid_height"] = args.grid
    return replace(base, **kw)


def _check_merged(before: SocietyConfig, after: SocietyConfig) -> None:
    """A valid file made invalid by flags is a usage error; a bad file is not."""
    problems = after.violations()
    if not problems:
        return
    if before.violations():
        raise ConfigError("invalid configuration: " + "; ".join(problems))
    raise UsageError("; ".join(problems))


def _template_paths(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    p1, p2 = cfg.template_set_paths
    if args.ff1:
        p1 = _resolve_templates(args.ff1)
    if args.ff2:
        p2 = _resolve_templates(args.ff2)
    return replace(cfg, template_set_paths=(p1, p2))


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8", newline="\n")


# -- subcommands ---------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _template_paths(_base_config(args), args)
    scfg = _apply_society_flags(cfg.base, args)
    _check_merged(cfg.base, scfg)
    ff1 = load_template_set(cfg.template_set_paths[0])
    ff2 = load_template_set(cfg.template_set_paths[1]) if scfg.switch_iteration is not None else None
    m = run(scfg, ff1, ff2, backend=args.backend)
    _write(metrics_csv(m), args.out)
    if args.trace:
        _write(trace_csv(m), args.trace)
    if args.actions:
        streams = RandomStreams(scfg.seed)
        soc = init_society(scfg, ff1, ff2)
        for _ in range(scfg.iterations):
            soc = step(soc, streams, backend=args.backend)
        _write(action_dump(soc), args.actions)
    return EXIT_OK


def cmd_batch(args: argparse.Namespace) -> int:
    cfg = _template_paths(_base_config(args), args)
    base = _apply_society_flags(cfg.base, args)
    _check_merged(cfg.base, base)
    kw: dict = {"base": base}
    if args.runs is not None:
        kw["runs"] = args.runs
    if args.workers is not None:
        kw["workers"] = args.workers
    if args.out is not None:
        kw["output_directory"] = Path(args.out)
    if args.base_seed is not None:
        kw["base_seed"] = args.base_seed
    if args.conditions:
        try:
            kw["conditions"] = tuple(Condition.parse(c) for c in args.conditions.split(","))
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    cfg = replace(cfg, **kw)
    problems = cfg.violations()
    if problems:
        raise UsageError("; ".join(problems))
    sets = load_template_sets(cfg)
    agg = run_batch(cfg, sets)
    for p in write_outputs(agg, cfg, raw=args.raw):
        print(p)
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    ts = load_template_set(_resolve_templates(args.templates))
    table = enumerate_landscape(ts)
    if args.out:
        _write(landscape_csv(table), args.out)
    print(f"template set: {ts.id}")
    print(f"max fitness: {table.max_fitness}")
    print("argmax:")
    for s in sorted(str(d) for d in table.argmax):
        print(f"  {s}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    ts = load_template_set(_resolve_templates(args.templates))
    path = Path(args.constraints)
    text = path.read_text(encoding="utf-8")  # unreadable file: exit 1
    try:
        constraints = parse_constraints(text, source=str(path))
    except ConstraintError as exc:
        raise UsageError(str(exc)) from None
    report = validate_template_set(ts, constraints)
    sys.stdout.write(report.format())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_plot(args: argparse.Namespace) -> int:
    for p in replot(args.input, args.out, switch=args.switch_at):
        print(p)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_society_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--iterations", type=int, help="iterations per run")
    sw = p.add_mutually_exclusive_group()
    sw.add_argument("--switch-at", type=int, help="iteration at which ff2 replaces ff1")
    sw.add_argument("--no-switch", action="store_true", help="keep ff1 for the whole run")
    p.add_argument("--grid", type=_grid, help="grid size as WxH")
    p.add_argument("--ff1", help="template set before the switch (path, or ff1/ff2)")
    p.add_argument("--ff2", help="template set after the switch (path, or ff1/ff2)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evoc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="run one simulation and write its metrics CSV")
    _add_society_flags(p)
    p.add_argument("--seed", type=int, help="run seed (default: config, then EVOC_SEED, then 0)")
    p.add_argument("--chaining", action="store_true", help="enable chaining")
    p.add_argument("--cf", action="store_true", help="enable contextual focus")
    p.add_argument("--out", help="metrics CSV path (default: stdout)")
    p.add_argument("--trace", help="also write the per-agent trace CSV here")
    p.add_argument("--actions", help="also write each agent's final action here")
    p.add_argument("--backend", choices=("numba", "numpy"), help="kernel implementation")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run seeded ensembles for each condition")
    _add_society_flags(p)
    p.add_argument("--runs", type=int, help="runs per condition")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--base-seed", type=int, help="seed all run seeds derive from")
    p.add_argument("--conditions", help="comma-separated, e.g. neither,chaining_only")
    p.add_argument("--raw", action="store_true", help="also write per-run CSVs under runs/")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("oracle", help="enumerate all 729 sub-actions of a template set")
    p.add_argument("--templates", default="ff1", help="template set path, or ff1/ff2")
    p.add_argument("--out", help="write the landscape CSV here")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate", help="check a template set against a constraint file")
    p.add_argument("--templates", default="ff1", help="template set path, or ff1/ff2")
    p.add_argument("--constraints", required=True, help="constraint file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="redraw SVG charts from aggregate CSVs")
    p.add_argument("--input", required=True, help="directory holding <condition>.csv files")
    p.add_argument("--out", help="output directory (default: input)")
    p.add_argument("--switch-at", type=int, help="draw a marker at this iteration")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"evoc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, TemplateSetError, ParseError, OSError) as exc:
        print(f"evoc {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
