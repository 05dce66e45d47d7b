import argparse
import logging
import os
import sys
from typing import NoReturn, Sequence

from hcc import __version__
from hcc.config import load_config, resolve_environment
from hcc.errors import EXIT_DATA, EXIT_INTERNAL, EXIT_OK, HccError, UsageError
from hcc.pipeline import Pipeline
from hcc.schemas.command import CommandRequest


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message, self)


def build_arg_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help="Overrides CC_SEED and the config seed")
    common.add_argument("--log-level", default="INFO", choices=LOG_LEVELS, help="Logging level (stderr)")

    parser = ArgumentParser(prog="hcc", description="Hybrid encoder/generator code completion")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    commands.add_parser("train", parents=[common], help="Run phases P0-P3 and write the checkpoint")

    complete = commands.add_parser("complete", parents=[common], help="Complete a code prompt")
    complete.add_argument("--prompt", required=True, help="Code prefix to complete")
    complete.add_argument("--max-new", type=int, default=None, help="Maximum number of tokens to generate")
    complete.add_argument("--backend", choices=["local", "remote"], default="local")

    commands.add_parser("eval", parents=[common], help="Accuracy and generation quality on the test split")
    commands.add_parser("robust", parents=[common], help="Robustness under input perturbations")
    commands.add_parser("bench", parents=[common], help="Response time, memory and throughput")
    commands.add_parser("report", parents=[common], help="Re-emit tables and figures from metrics.json")
    return parser


def _params(args: argparse.Namespace) -> dict:
    if args.command != "complete":
        return {}
    params = {"prompt": args.prompt, "backend": args.backend}
    if args.max_new is not None:
        params["max_new"] = args.max_new
    return params


def run_command(argv: Sequence[str] | None = None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
        logging.getLogger().setLevel(args.log_level)

        config = load_config(args.config)
        settings = resolve_environment(config, os.environ, seed=args.seed)
        result = Pipeline(config, settings).process(CommandRequest(command=args.command, params=_params(args)))

    except UsageError as e:
        source = e.args[1] if len(e.args) > 1 and isinstance(e.args[1], argparse.ArgumentParser) else parser
        source.print_usage(sys.stderr)
        print(f"hcc: error: {e.args[0]}", file=sys.stderr)
        return e.exit_code

    except HccError as e:
        print(f"hcc: error: {e}", file=sys.stderr)
        return e.exit_code

    except OSError as e:
        print(f"hcc: error: {e}", file=sys.stderr)
        return EXIT_DATA

    except Exception as e:
        logger.debug("unexpected failure", exc_info=True)
        print(f"hcc: error: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL

    if result.output is not None:
        print(result.output)
    for path in result.files:
        logger.info("wrote %s", path)
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())
