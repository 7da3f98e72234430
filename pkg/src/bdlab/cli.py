"""Command line entry point.

Usage::

    bdlab solve    --config <path|name> --out <dir>
    bdlab verify   --config <path|name> --out <dir>
    bdlab converge --config <path|name> --out <dir> [--depth N]

``--config`` accepts a file or the name of a shipped configuration
(``default``, ``linear-disk``, ...). ``verify`` runs the verification suite
of the configuration whatever its ``kind``. Exit status: 0 on success, 1 when
a solve or check failed (the report records the failure), 2 when the
configuration is invalid (nothing is written).
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, load_config

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdlab", description="Dynamic boundary diffusion experiments.")
    parser.add_argument("--version", action="version", version=f"bdlab {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("solve", "run the configured solver and write its tables"),
        ("verify", "run the inequality verification suite"),
        ("converge", "run a refinement study and fit convergence orders"),
    ):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config", required=True, help="configuration file or shipped name")
        p.add_argument("--out", required=True, help="output directory")
        if verb == "converge":
            p.add_argument("--depth", type=int, default=None, help="ladder depth (default: experiment.depth)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    from .experiment import convergence_study, run_experiment

    try:
        cfg = load_config(args.config)
        if args.verb == "verify":
            cfg = cfg.replace("experiment", kind="verification-suite")
        if args.verb == "converge":
            depth = cfg["experiment"]["depth"] if args.depth is None else args.depth
            if depth < 2:
                raise ConfigError("experiment.depth", f"insufficient depth {depth}: a convergence study needs depth >= 2")
            if cfg.kind == "verification-suite":
                raise ConfigError("experiment.kind", "convergence studies need a solver kind")
    except ConfigError as exc:
        print(f"bdlab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.verb == "converge":
        report = convergence_study(cfg, depth, out_dir=args.out)
    else:
        report = run_experiment(cfg, args.out, command=args.verb)
    for err in report.errors:
        print(f"bdlab: {err['check_id']}: {err['message']}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
