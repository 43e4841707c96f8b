import argparse
import json
import sys
import typing as t
from pathlib import Path

from loguru import logger

from overlapkit.config import IntervalMethod, LognormalScale, SimulationMode, TestMethod, default_workers
from overlapkit.core.errors import InputError
from overlapkit.simulation.harness import SimulationReport, run_plan, write_report
from overlapkit.simulation.scenarios import PRESETS, ScenarioPlan, build_preset, load_scenario_file
from overlapkit.utils import converters


def _preset_plan(args: argparse.Namespace) -> ScenarioPlan:
    shape: t.Dict[str, t.Any] = {}
    for key in ("n", "d", "sigma2", "lognormal_scale"):
        value = getattr(args, key)
        if value is not None:
            shape[key] = value
    for key, attribute in (("B", "bootstrap"), ("reps", "reps"), ("seed", "seed"), ("alpha", "alpha"), ("mc_samples", "mc_samples")):
        value = getattr(args, attribute)
        if value is not None:
            shape[key] = value

    base = build_preset(args.preset, **shape)
    method_enum = IntervalMethod if args.mode is SimulationMode.coverage else TestMethod
    if args.methods is None:
        methods = tuple(method_enum) if args.mode is SimulationMode.coverage else (
            TestMethod.wald, TestMethod.anova_type, TestMethod.percentile
        )
    else:
        methods = tuple(converters.enum_list(method_enum)(args.methods))

    if args.sweep is None:
        return ScenarioPlan(base, args.mode, methods)
    key, values = args.sweep
    base.with_setting(key, values[0])
    return ScenarioPlan(base, args.mode, methods, key, tuple(values))


def simulate(args: argparse.Namespace) -> int:
    """Size, power or coverage of the procedures on a scenario file or a built-in preset."""
    if (args.scenario is None) == (args.preset is None):
        raise InputError("Give exactly one of a scenario file or `--preset`")

    plan = load_scenario_file(args.scenario) if args.scenario is not None else _preset_plan(args)
    logger.info(f"Simulating {plan.base.name} ({plan.mode.value}) with {len(plan.settings())} setting(s)")
    report = run_plan(plan, default_workers() if args.workers is None else args.workers)
    _emit(report, args.out)
    return 0


def _emit(report: SimulationReport, out: t.Optional[Path]) -> None:
    if out is not None:
        write_report(report, out)
        return
    sys.stdout.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Monte Carlo size, power and coverage studies")
    parser.add_argument("scenario", nargs="?", type=Path, help="scenario file (INI) describing groups, sizes and budget")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario instead of a file")
    parser.add_argument(
        "--mode", type=converters.enum_member(SimulationMode), default=SimulationMode.size_power,
        help="size_power or coverage, preset runs only (default: size_power)",
    )
    parser.add_argument("--methods", help="comma separated tests or interval constructions, preset runs only")
    parser.add_argument("--n", type=converters.positive_int, help="size of every group")
    parser.add_argument("--d", type=converters.positive_int, help="number of components")
    parser.add_argument("--sigma2", type=converters.real, help="standard deviation of the second group")
    parser.add_argument("--lognormal-scale", type=converters.enum_member(LognormalScale), help="log or natural")
    parser.add_argument("--sweep", type=converters.sweep_spec, help="one swept parameter, e.g. n:50,100,150")
    parser.add_argument("--alpha", type=converters.probability)
    parser.add_argument("--bootstrap", "-B", type=converters.positive_int, help="bootstrap replicates per replication")
    parser.add_argument("--reps", type=converters.positive_int, help="Monte Carlo replications")
    parser.add_argument("--seed", type=converters.seed)
    parser.add_argument("--mc-samples", type=converters.positive_int)
    parser.add_argument("--workers", type=converters.positive_int, help="worker processes, results don't depend on it (default: OVERLAPKIT_WORKERS or 1)")
    parser.add_argument("--out", "-o", type=Path, help="`.csv` for one row per method and setting, JSON otherwise")
    parser.set_defaults(handler=simulate)
