"""Command-line entry point.

Exit codes: 0 success, 1 configuration or I/O error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import OUTPUTS, ConfigError, SweepSpec, load_config, scenario_from_dict
from .figures import FIGURE_IDS, emit_figure
from .sweep import rows_to_csv, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2

ANALYTIC_OUTPUTS = frozenset({"closed", "quadrature", "bounds", "floor", "asymptotic", "oma"})
MC_OUTPUTS = frozenset({"mc_exact", "mc_upper"})


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; keep exit 2 for validation
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_snr_db(text: str) -> tuple:
    """``start:step:stop`` (inclusive) or a comma-separated list, in dB."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--snr-db: expected start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError("--snr-db: need step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 12) for k in range(n))
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"--snr-db: cannot parse {text!r}") from None


def parse_user(text: str):
    if text == "all":
        return ()
    try:
        return (int(text),)
    except ValueError:
        raise ConfigError(f"--user: expected an integer or 'all', got {text!r}") from None


def _load(args):
    if args.config:
        return load_config(args.config)
    sc = scenario_from_dict({})
    return sc, SweepSpec(axis="snr_db", points=tuple(float(v) for v in range(0, 41, 5)), scenario=sc)


def _build_spec(args, outputs=None, default_trials=0) -> SweepSpec:
    _, spec = _load(args)
    kw = {}
    if args.snr_db is not None:
        kw.update(axis="snr_db", points=parse_snr_db(args.snr_db))
    if args.trials is not None:
        kw["trials"] = args.trials
    elif outputs is not None and outputs & MC_OUTPUTS and spec.trials == 0:
        kw["trials"] = default_trials
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.lanes is not None:
        kw["lanes"] = args.lanes
    if outputs is not None:
        kw["outputs"] = outputs
    kw["users"] = parse_user(args.user)
    try:
        return spec.with_(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _emit(rows, out_dir, name: str) -> None:
    text = rows_to_csv(rows)
    if out_dir is None:
        sys.stdout.write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.csv").write_text(text, encoding="utf-8")


def _cmd_analytic(args):
    spec = _build_spec(args, outputs=ANALYTIC_OUTPUTS)
    _emit(run_sweep(spec.with_(trials=0)), args.out, "analytic")
    return EXIT_OK


def _cmd_simulate(args):
    spec = _build_spec(args, outputs=MC_OUTPUTS | {"closed"}, default_trials=100_000)
    if spec.trials < 1:
        raise ConfigError("--trials: simulate needs at least one trial")
    _emit(run_sweep(spec), args.out, "simulate")
    return EXIT_OK


def _cmd_sweep(args):
    spec = _build_spec(args)
    _emit(run_sweep(spec), args.out, "sweep")
    return EXIT_OK


def _cmd_validate(args):
    from .validation import validate

    trials = 1_000_000 if args.trials is None else args.trials
    return validate(trials=trials, seed=args.seed or 0, lanes=args.lanes or 1)


def _cmd_figure(args):
    emit_figure(args.id, args.out or ".", trials=args.trials or 0, seed=args.seed or 0, lanes=args.lanes or 1)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coopnoma", description="Outage analysis of dual-hop AF NOMA with MRT/RAS over Nakagami-m fading.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--snr-db", help="start:step:stop (inclusive) or comma list, in dB")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per point (0 disables)")
    common.add_argument("--seed", type=int, help="64-bit RNG seed")
    common.add_argument("--lanes", type=int, help="independent RNG streams the trials are split over")
    common.add_argument("--out", help="output directory (CSV to stdout if omitted)")
    common.add_argument("--user", default="all", help="user index l or 'all'")

    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analytic", parents=[common], help="closed form, quadrature, bounds, floors").set_defaults(fn=_cmd_analytic)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo outage estimates").set_defaults(fn=_cmd_simulate)
    sub.add_parser("sweep", parents=[common], help="all outputs along the configured axis").set_defaults(fn=_cmd_sweep)
    sub.add_parser("validate", parents=[common], help="closed form vs quadrature vs Monte Carlo").set_defaults(
        fn=_cmd_validate
    )
    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure preset as CSV + SVG")
    fig.add_argument("id", choices=FIGURE_IDS)
    fig.set_defaults(fn=_cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("trials", "lanes", "seed"):
        v = getattr(args, name)
        if v is not None and (v < 0 or (name == "lanes" and v < 1) or (name == "seed" and v > 2**64 - 1)):
            print(f"coopnoma: error: --{name}: out of range ({v})", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"coopnoma: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"coopnoma: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


__all__ = ["main", "build_parser", "parse_snr_db", "OUTPUTS"]
