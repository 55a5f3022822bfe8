"""Command line entry point: ``python -m hbolab {run,validate,list-scenarios}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiments import (OUTPUT_ROOT_ENV, SCENARIOS, ConfigError, output_dir_for,
                          parse_config, run_scenario)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3


def _load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hbolab",
        description=f"Run HBO experiments. Output root can be overridden with ${OUTPUT_ROOT_ENV}.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run the scenario described by a config file")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="parse and validate a config file")
    p_val.add_argument("config")
    sub.add_parser("list-scenarios", help="print the registered scenario names")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.cmd == "list-scenarios":
        for name in SCENARIOS:
            print(name)
        return EXIT_OK
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.cmd == "validate":
        print(f"ok: scenario {cfg.scenario}, grid {cfg.grid}")
        return EXIT_OK
    try:
        status, res = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in res.criteria:
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark} {c.name}: {c.value:.3e} {c.relation} {c.threshold:g}")
    if res.blowup:
        print(f"BLOW-UP {res.blowup}", file=sys.stderr)
    print(f"artifacts: {output_dir_for(cfg)}  ({res.runtime:.1f} s)")
    return status


if __name__ == "__main__":
    sys.exit(main())
