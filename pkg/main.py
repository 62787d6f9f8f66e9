"""
Command-line harness for ssl_forge: generate data, run and benchmark
semi-supervised algorithms, and score prediction files.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from ssl_forge.cli.commands import cmd_bench, cmd_eval, cmd_gen, cmd_gen_config, cmd_run
from ssl_forge.core.exceptions import EXIT_CONFIG, EXIT_OK, ConfigError, SSLForgeError, exit_code_for
from ssl_forge.settings import configure_logging, load_environment


logger = logging.getLogger("ssl_forge")


def parse_param(text: str) -> Dict[str, Any]:
    """`key=value` with the value read as JSON when possible."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return {key: value}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssl_forge", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Output path (stdout when omitted)")
    common.add_argument("--seed", type=int, help="Seed override")
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Write a synthetic dataset as CSV")
    gen.add_argument("kind", nargs="?", help="Generator: two_moons, blobs or linear")
    gen.add_argument("--param", action="append", default=[], help="Generator parameter key=value")
    gen.add_argument("--config", help="JSON file with kind, params, seed and out")

    for name, text in (("run", "Run one experiment config"), ("bench", "Run a suite over seeds")):
        command = sub.add_parser(name, parents=[common], help=text)
        command.add_argument("--config", required=True, help="JSON config path")
        command.add_argument("--format", choices=["json", "csv", "table"], help="Result format")

    evaluate = sub.add_parser("eval", parents=[common], help="Score a y_true,y_pred[,score_*] CSV")
    evaluate.add_argument("predictions", help="Predictions CSV path")
    evaluate.add_argument("--task", default="classification",
                          choices=["classification", "regression", "clustering"], help="Task kind")
    evaluate.add_argument("--format", choices=["json", "csv", "table"], default="json", help="Result format")
    return parser


def dispatch(args: argparse.Namespace) -> None:
    if args.command == "gen":
        if args.config:
            cmd_gen_config(args.config, args.out, args.seed)
            return
        if not args.kind:
            raise ConfigError("gen needs a generator kind or --config")
        if not args.out:
            raise ConfigError("gen needs --out")
        params: Dict[str, Any] = {}
        for text in args.param:
            params.update(parse_param(text))
        cmd_gen(args.kind, params, args.seed or 0, args.out)
    elif args.command == "run":
        cmd_run(args.config, args.out, args.format, args.seed)
    elif args.command == "bench":
        cmd_bench(args.config, args.out, args.format, args.seed)
    else:
        cmd_eval(args.predictions, args.task, args.out, args.format)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and return its exit code."""
    load_environment()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    configure_logging(args.quiet)
    try:
        dispatch(args)
    except (SSLForgeError, OSError) as e:
        logger.error(f"{args.command} failed ({type(e).__name__}): {e}")
        return exit_code_for(e)
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return exit_code_for(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
