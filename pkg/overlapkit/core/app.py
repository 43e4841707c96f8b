"""Command line application: builds the parser from the command modules and runs the chosen subcommand."""
import argparse
import importlib
import typing as t

from loguru import logger

import overlapkit
from overlapkit.config import EXIT_OK
from overlapkit.core import autoload
from overlapkit.core.error_handler import handle_error


class OverlapKit:
    """Command line front end, every module of `overlapkit.commands` contributes one subcommand."""

    def __init__(self) -> None:
        self.parser = argparse.ArgumentParser(
            prog="overlapkit",
            description="Nonparametric inference for multivariate niche overlap",
        )
        self.subparsers = self.parser.add_subparsers(dest="command", metavar="command")
        self.subparsers.required = True
        self.load_commands()

    def load_commands(self) -> None:
        """Register all command modules."""
        for command in autoload.COMMANDS:
            try:
                importlib.import_module(command).setup(self.subparsers)
                logger.trace(f"Command {autoload.readable_name(command)} loaded.")
            except Exception as e:
                logger.error(f"Command {autoload.readable_name(command)} failed to load with {type(e)}: {e}")

    def run(self, argv: t.Optional[t.Sequence[str]] = None) -> int:
        """Parse `argv`, run the subcommand and return the process exit code."""
        args = self.parser.parse_args(argv)
        try:
            code = args.handler(args)
        except Exception as exception:
            return handle_error(args.command, exception)
        return EXIT_OK if code is None else code


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    logger.debug(f"overlapkit {overlapkit.__version__}")
    return OverlapKit().run(argv)
