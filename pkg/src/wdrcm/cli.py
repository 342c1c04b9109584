"""Command-line entry point.

Subcommands sweep, theta, paths-selftest, verify, construct, and aba each run
one experiment from a JSON config (``--config``) into an output directory
(``--out``); ``--seed`` overrides the config's master seed.  ``trace`` prints
the step-by-step skeleton reduction and tree construction for a mark sequence.

Exit codes: 0 success, 2 invalid config, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import KINDS, ConfigError, ExperimentConfig, run
from .paths import MarkedPath, trace_local_maxima, trace_tree_construction


def _add_experiment_parser(subparsers, kind: str) -> None:
    sub = subparsers.add_parser(kind, help=f"run a '{kind}' experiment")
    sub.add_argument("--config", required=True, help="path to the JSON config")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config master seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wdrcm",
        description="Weight-dependent random connection model toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_experiment_parser(subparsers, kind)
    trace = subparsers.add_parser(
        "trace", help="print skeleton reduction and tree construction steps")
    trace.add_argument("--marks", required=True,
                       help="comma-separated marks in (0, 1], e.g. 0.5,0.3,0.7")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "trace":
        try:
            marks = [float(tok) for tok in args.marks.split(",") if tok.strip()]
            path = MarkedPath(list(enumerate(marks)))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for line in trace_local_maxima(path):
            print(line)
        print()
        for line in trace_tree_construction(path):
            print(line)
        return 0
    try:
        config = ExperimentConfig.from_json(args.config)
        if config.kind != args.command:
            raise ConfigError("kind", f"config kind {config.kind!r} does not "
                                      f"match subcommand {args.command!r}")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run(config, args.out, seed_override=args.seed)
    print(f"wrote {', '.join(result.outputs)} and {result.manifest}")
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
