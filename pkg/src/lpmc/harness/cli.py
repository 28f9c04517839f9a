"""Command line entry point: ``lpmc {sample,figure,quantcheck,presets}``.

Exit status is 0 on success, 1 for usage or validation errors and 2 when a
run fails at runtime.
"""

import argparse
import logging
import sys
from typing import List, Optional

from ..errors import ConfigError, LpmcError, MissingMetricError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; report them as usage errors instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    from .plots import FIGURES

    p = _Parser(prog="lpmc", description="Low-precision SG-MCMC experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("sample", help="run an experiment and write CSVs")
    s.add_argument("--config", required=True, help="TOML config file or preset name")
    s.add_argument("--seed", type=int, help="run only this seed")
    s.add_argument("--out", help="output directory (overrides $LPMC_OUT and the config)")
    s.add_argument("--backend", choices=("numba", "numpy"), help="chain backend (default: numba if available)")

    f = sub.add_parser("figure", help="emit a standalone plotting script for a run")
    f.add_argument("name", choices=FIGURES)
    f.add_argument("--run", required=True, help="manifest.json of a finished run, or its directory")
    f.add_argument("--out", help="script path (default: next to the manifest)")

    q = sub.add_parser("quantcheck", help="run the quantizer property suite")
    q.add_argument("--spec", required=True, help="fixed-point format as W,F, e.g. 8,4")
    q.add_argument("--draws", type=int, default=200_000, help="Monte-Carlo draws per moment check")

    sub.add_parser("presets", help="list built-in presets")
    return p


def _sample(args) -> int:
    from .config import parse_config
    from .runner import run_experiment

    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seeds": [args.seed]})
    rec = run_experiment(cfg, out_dir=args.out, backend=args.backend)
    print(f"wrote {len(rec.files)} chain CSVs, summary.csv and {rec.manifest_path.name} to {rec.out_dir}")
    return EXIT_OK


def _figure(args) -> int:
    from .plots import emit_plot_script

    print(emit_plot_script(args.run, args.name, out=args.out))
    return EXIT_OK


def _quantcheck(args) -> int:
    from .quantcheck import format_table, parse_spec, run_quantcheck

    try:
        spec = parse_spec(args.spec)
    except ValueError as exc:
        raise UsageError(f"--spec: {exc}") from None
    checks = run_quantcheck(spec, draws=args.draws)
    print(format_table(spec, checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_RUNTIME


def _presets(args) -> int:
    from .presets import DESCRIPTIONS, PRESETS

    width = max(map(len, PRESETS))
    for name in PRESETS:
        print(f"{name:<{width}}  {DESCRIPTIONS.get(name, '')}")
    return EXIT_OK


COMMANDS = {"sample": _sample, "figure": _figure, "quantcheck": _quantcheck, "presets": _presets}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"lpmc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingMetricError as exc:
        print(f"lpmc: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"lpmc: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (LpmcError, OSError, ValueError) as exc:
        print(f"lpmc: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
