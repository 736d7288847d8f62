"""Run every experiment config through the CLI and print a one-line summary each.

    python3 scripts/run_all.py [--out runs] [--only k-tilde,xi]
"""
import argparse
import os
import sys
import time

from supergw import cli
from supergw.config import load_config_file

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, os.pardir, "configs")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs")
    ap.add_argument("--only", default="", help="comma-separated experiment names")
    args = ap.parse_args()
    only = {x for x in args.only.split(",") if x}
    status = 0
    for name in sorted(os.listdir(CONFIGS)):
        if not name.endswith(".cfg"):
            continue
        path = os.path.join(CONFIGS, name)
        exp = load_config_file(path).experiment
        if only and exp not in only:
            continue
        t0 = time.perf_counter()
        code = cli.run([exp, "--config", path, "--out", os.path.join(args.out, name[:-4])])
        print(f"== {name}: exit {code} in {time.perf_counter() - t0:.1f}s", flush=True)
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
