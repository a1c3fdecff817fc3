"""Command-line entry point: run a scenario from a config file or a preset."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import BstirapError, ConfigError
from .scenario import load_preset, parse_config, preset_names, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Simulate bright-state adiabatic population transfer in a "
        "lambda medium and cross-check it against the characteristics solution.",
    )
    parser.add_argument("config", nargs="?", help="path to an INI-style scenario config")
    parser.add_argument(
        "--preset",
        metavar="NAME",
        help="use a shipped scenario preset instead of a config file "
        "(fig2..fig7 regenerate the reference figures)",
    )
    parser.add_argument("--out", metavar="DIR", default=None, help="output directory")
    parser.add_argument(
        "--jobs", type=int, default=None, metavar="K", help="parallel runs for sweep mode"
    )
    parser.add_argument(
        "--mode",
        choices=("propagate", "analytic", "compare", "sweep"),
        default=None,
        help="override the mode from the config",
    )
    parser.add_argument(
        "--check-convergence",
        action="store_true",
        help="repeat propagation with half the depth step and report the change",
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if (args.config is None) == (args.preset is None):
        parser.print_usage(sys.stderr)
        print("simulate: provide exactly one of a config path or --preset", file=sys.stderr)
        return 2

    try:
        if args.preset is not None:
            cfg = load_preset(args.preset)
        else:
            path = Path(args.config)
            if not path.is_file():
                print(f"simulate: config file not found: {path}", file=sys.stderr)
                return 2
            cfg = parse_config(path.read_text(encoding="utf-8"))
        if args.mode is not None:
            from dataclasses import replace

            cfg = replace(cfg, mode=args.mode)
        result = run_scenario(
            cfg, args.out, jobs=args.jobs, check_convergence=args.check_convergence
        )
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        if "--preset" not in (argv or sys.argv):
            print(f"simulate: available presets: {', '.join(preset_names())}", file=sys.stderr)
        return 2
    except BstirapError as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 1

    for line in result.summary_lines:
        print(line)
    print("files: " + ", ".join(result.files))
    return 0 if result.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
