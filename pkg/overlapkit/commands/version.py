import argparse
import sys

import overlapkit


def version(args: argparse.Namespace) -> int:
    sys.stdout.write(f"overlapkit {overlapkit.__version__}\n")
    return 0


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("version", help="print the version and exit")
    parser.set_defaults(handler=version)
