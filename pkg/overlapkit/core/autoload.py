import importlib
import inspect
import pkgutil
import typing as t
from types import ModuleType

import overlapkit.commands


def bare_name(name: str) -> str:
    """Return a bare (unqualified) name given a qualified module/package `name`."""
    return name.rsplit(".", maxsplit=1)[-1]


def readable_name(name: str) -> str:
    """Return the name without the `overlapkit.commands.` prefix every command module shares."""
    return name.split(".", maxsplit=2)[-1]


def walk_modules(package: ModuleType, check: t.Optional[t.Callable[[pkgutil.ModuleInfo], bool]] = None) -> t.Iterator[str]:
    """Yield module names from `package`, sorted so the subcommand order is stable."""

    def on_error(name: str) -> t.NoReturn:
        raise ImportError(name=name)

    modules = sorted(pkgutil.walk_packages(package.__path__, f"{package.__name__}.", onerror=on_error), key=lambda module: module.name)
    for module in modules:
        if bare_name(module.name).startswith("_"):
            # Ignore module/package names starting with an underscore.
            continue

        if check and not check(module):
            continue

        yield module.name


def command_check(module: pkgutil.ModuleInfo) -> bool:
    """Only modules exposing a `setup(subparsers)` function register a subcommand."""
    imported = importlib.import_module(module.name)
    return inspect.isfunction(getattr(imported, "setup", None))


COMMANDS = tuple(walk_modules(overlapkit.commands, command_check))
