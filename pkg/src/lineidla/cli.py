"""Command-line front end: grow, forest, diff, experiment, render.

Exit codes are a stable contract: 0 success, 2 usage or parse failure,
3 step-budget or numerical-budget abort.  Output files carry no timestamps
or timing, so rerunning a command with the same arguments reproduces them
byte for byte; wall-clock goes to stderr only.
"""

from __future__ import annotations

import argparse
import ast
import csv
import os
import sys
import time
from pathlib import Path
from typing import Mapping, Optional

from .analysis import EXPERIMENTS, ExperimentReport, seed_list
from .forest import build_forest, diff_forests
from .formats import (
    AGGREGATE_TAG,
    FOREST_TAG,
    FormatError,
    aggregate_text,
    forest_text,
    parse_aggregate,
    parse_forest,
    svg_document,
)
from .growth import DEFAULT_STEP_BUDGET, GrowthSpec, build_aggregate
from .lattice import Region, strip
from .oracle import NumericalBudgetError
from .walk import StepBudgetExceeded

VARIANT_ALIASES = {
    "det": "deterministic",
    "deterministic": "deterministic",
    "usual": "poisson-usual",
    "poisson-usual": "poisson-usual",
    "clock": "poisson-clock",
    "poisson-clock": "poisson-clock",
    "classical": "classical-origin",
    "classical-origin": "classical-origin",
}

# sugar flags of the experiment subcommand -> parameter keys
FLAG_PARAMS = {
    "variant": "variant",
    "n": "n",
    "M": "half_height",
    "K": "strip_half_height",
    "r": "inner_half_width",
    "rp": "outer_half_width",
    "tau": "marked",
    "particles": "n",
    "orders": "orders",
}


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _growth_flags(p: argparse.ArgumentParser, default_variant: str):
    p.add_argument("--variant", default=default_variant)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--M", type=int, default=0, help="source half-height")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", choices=("usual", "clock"), default=None)
    p.add_argument("--sequential", action="store_true")
    p.add_argument("--budget", type=int, default=DEFAULT_STEP_BUDGET)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--strip", type=int, default=None, help="SVG strip guide")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lineidla",
        description="Axis-source internal DLA: growth, forests, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _growth_flags(sub.add_parser("grow", help="grow one aggregate"), "det")
    _growth_flags(sub.add_parser("forest", help="grow and build its forest"), "clock")

    d = sub.add_parser("diff", help="compare two forest files")
    d.add_argument("first")
    d.add_argument("second")
    d.add_argument("--K", type=int, default=None, help="restrict to strip |y|<=K")
    d.add_argument("-o", "--output", default=None, help="CSV of discrepancies")

    e = sub.add_parser("experiment", help="run a replicated experiment")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--seeds", type=int, default=100)
    e.add_argument("--seed0", type=int, default=0)
    e.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    e.add_argument("--config", default=None, help="key=value file, flags win")
    e.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="set any experiment parameter",
    )
    for flag in FLAG_PARAMS:
        e.add_argument(f"--{flag}", default=None)
    e.add_argument("-o", "--outdir", default=".")

    r = sub.add_parser("render", help="render an aggregate or forest file")
    r.add_argument("input")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--strip", type=int, default=None)
    return parser


def _spec_from_args(args) -> GrowthSpec:
    variant = VARIANT_ALIASES.get(args.variant)
    if variant is None:
        raise ValueError(f"unknown variant {args.variant!r}")
    return GrowthSpec(
        variant,
        args.n,
        args.M,
        args.seed,
        level_order=args.order if args.order else "default",
        sequential=args.sequential,
        step_budget=args.budget,
    )


def _echo_params(spec: GrowthSpec) -> dict:
    return {
        "variant": spec.variant,
        "n": spec.n,
        "half_height": spec.half_height,
        "seed": spec.master_seed,
        "order": spec.level_order,
        "sequential": int(spec.sequential),
    }


def _cmd_grow(args) -> int:
    spec = _spec_from_args(args)
    agg = build_aggregate(spec)
    Path(args.output).write_text(aggregate_text(agg, _echo_params(spec)))
    if args.svg:
        Path(args.svg).write_text(
            svg_document(agg.sites, strip_half_height=args.strip)
        )
    return 0


def _cmd_forest(args) -> int:
    spec = _spec_from_args(args)
    if spec.variant not in ("poisson-clock", "classical-origin"):
        raise ValueError("forests need the clock or classical variant")
    forest = build_forest(build_aggregate(spec))
    Path(args.output).write_text(forest_text(forest, _echo_params(spec)))
    if args.svg:
        Path(args.svg).write_text(
            svg_document(
                forest.sites, forest.edges(), strip_half_height=args.strip
            )
        )
    return 0


def _cmd_diff(args) -> int:
    first = parse_forest(Path(args.first).read_text())
    second = parse_forest(Path(args.second).read_text())
    if args.K is not None:
        region = strip(args.K)
    else:
        region = Region("everywhere", lambda x, y: True)
    d = diff_forests(first, second, region)
    a, b, c = d.counts()
    print(
        f"{a + b + c} discrepancies"
        f" ({a} only-first, {b} only-second, {c} edge-mismatch)"
        f" in {d.region_name}"
    )
    if args.output:
        with open(args.output, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "x", "y"])
            for kind, group in (
                ("only-first", d.vertices_only_first),
                ("only-second", d.vertices_only_second),
                ("edge-mismatch", d.edge_mismatches),
            ):
                for s in sorted(group):
                    w.writerow([kind, s.x, s.y])
    return 0


def _config_entries(path: str) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {line!r}")
        k, _, v = line.partition("=")
        out[k.strip()] = _literal(v.strip())
    return out


def _experiment_params(args) -> dict:
    params: dict = {}
    if args.config:
        params.update(_config_entries(args.config))
    for flag, key in FLAG_PARAMS.items():
        raw = getattr(args, flag)
        if raw is not None:
            value = _literal(raw)
            if key == "marked" and isinstance(value, tuple) and value:
                if all(isinstance(v, int) for v in value):
                    value = (value,)
            params[key] = value
    if "variant" in params:
        canonical = VARIANT_ALIASES.get(params["variant"])
        if canonical is None:
            raise ValueError(f"unknown variant {params['variant']!r}")
        params["variant"] = canonical
    for item in args.assignments:
        if "=" not in item:
            raise ValueError(f"--set needs KEY=VALUE, got {item!r}")
        k, _, v = item.partition("=")
        params[k.strip()] = _literal(v.strip())
    params.pop("orders", None)  # every order is always checked
    return params


def _cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, tuple):
        return ";".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_files(report: ExperimentReport, outdir: Path) -> str:
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "records.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        if report.records:
            cols = list(report.records[0])
            w.writerow(["seed"] + cols)
            for seed, rec in zip(report.seeds, report.records):
                w.writerow([seed] + [_cell(rec[c]) for c in cols])
        else:
            w.writerow(["seed"])
    lines = [f"experiment: {report.experiment}"]
    echo = " ".join(f"{k}={v!r}" for k, v in sorted(report.params.items()))
    lines.append(f"parameters: {echo}")
    if report.seeds:
        lines.append(
            f"seeds: {report.seeds[0]}..{report.seeds[-1]}"
            f" count={len(report.seeds)}"
        )
    else:
        lines.append("seeds: none")
    for name, est in report.estimates.items():
        lines.append(
            f"estimate {name} = {est.value!r} stderr={est.stderr!r} n={est.count}"
        )
    for name, ok in report.verdicts.items():
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}")
    lines.append(f"overall: {'PASS' if report.all_pass() else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (outdir / "summary.txt").write_text(text)
    return text


def _cmd_experiment(args) -> int:
    params = _experiment_params(args)
    seeds = seed_list(args.seeds, args.seed0)
    began = time.monotonic()
    report = EXPERIMENTS[args.name](params, seeds, args.jobs)
    report.wall_seconds = time.monotonic() - began
    text = _report_files(report, Path(args.outdir))
    sys.stdout.write(text)
    print(f"wall {report.wall_seconds:.1f}s", file=sys.stderr)
    return 0


def _cmd_render(args) -> int:
    text = Path(args.input).read_text()
    if text.startswith(f"# {AGGREGATE_TAG} "):
        parsed = parse_aggregate(text)
        doc = svg_document(parsed.sites, strip_half_height=args.strip)
    elif text.startswith(f"# {FOREST_TAG} "):
        forest = parse_forest(text)
        doc = svg_document(
            forest.sites, forest.edges(), strip_half_height=args.strip
        )
    else:
        raise FormatError("unrecognized input file")
    Path(args.output).write_text(doc)
    return 0


_COMMANDS = {
    "grow": _cmd_grow,
    "forest": _cmd_forest,
    "diff": _cmd_diff,
    "experiment": _cmd_experiment,
    "render": _cmd_render,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (StepBudgetExceeded, NumericalBudgetError) as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
