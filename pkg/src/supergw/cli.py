"""Command-line entry point.

    supergw SUBCOMMAND [--config PATH] [--seed N] [--out DIR] [--threads N] [--json]

Exit codes: 0 all acceptance blocks pass, 1 some block failed or the
experiment raised, 2 usage error, 3 configuration error. The output
directory defaults to ``runs/SUBCOMMAND`` and may be overridden by the
``SUPERGW_OUT`` environment variable or ``--out``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import harness
from .config import EXPERIMENTS, ConfigError, load_config, load_config_file, parse_law
from .laws import InvalidWindow


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items() if not str(k).startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def report_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="supergw", description="Supercritical forest and critical-window experiments.")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="run configuration file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, help="worker threads for replicas")
        sp.add_argument("--json", action="store_true", help="print the report as JSON")
        if name == "xi":
            sp.add_argument("--law", action="append", help="law spec, e.g. binary:0.25")
    return p


def _config(args) -> "RunConfig":
    if args.config:
        cfg = load_config_file(args.config, args.command)
    else:
        cfg = load_config(f"[run]\nexperiment = {args.command}\n")
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg.threads = args.threads
    if getattr(args, "law", None):
        for spec in args.law:
            parse_law(spec)  # fail early on a bad spec
        cfg.set("law", "laws", args.law)
    return cfg


def _write_outputs(out_dir, report):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report_json(report))
    for name, text in sorted(report.get("_files", {}).items()):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _config(args)
    except (ConfigError, InvalidWindow) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    out_dir = args.out or os.environ.get("SUPERGW_OUT") or os.path.join("runs", args.command)
    t0 = time.perf_counter()
    try:
        report = harness.EXPERIMENTS[args.command](cfg)
    except (ConfigError, InvalidWindow) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # surfaced as an experiment failure
        print(f"{args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0
    _write_outputs(out_dir, report)
    if args.json:
        sys.stdout.write(report_json(report))
    else:
        if args.command == "xi":
            for b in report["blocks"]:
                print(f"{b['law']}: xi = {b['xi']:.10f}  extinction = {b['extinction_probability']:.10f}")
        for b in report["blocks"]:
            print(f"{'PASS' if b['pass'] else 'FAIL'}  {b['name']}")
        print(f"{'PASS' if report['pass'] else 'FAIL'}  {args.command} ({elapsed:.1f}s) -> {out_dir}")
    return 0 if report["pass"] else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
