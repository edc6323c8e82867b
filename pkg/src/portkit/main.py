"""The main runner for portkit.

This module contains the entry point of the portkit command line interface
and the functions behind each subcommand. Every subcommand returns an exit
status:

    0  success
    1  runtime error (including unreadable files)
    2  manifest, monitor or expression parse error
    3  strict-mode consistency failure
    4  ActionLog mismatch

Example:
    $ portkit run search_and_track --duration 6 --seed 7
    $ portkit check scenarios/full.manifest
    $ portkit eval "not e_taken and e_arm_idle" e_arm_idle
    $ portkit diff golden.log actual.log
"""

import os
import sys

from portkit.logger import Logger
from portkit.parser import Parser

# The exit statuses
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_CONSISTENCY = 3
EXIT_MISMATCH = 4

# The environment variable overriding the scenario directory
SCENARIO_DIR_ENV = "PORTKIT_SCENARIO_DIR"

# The defaults for scenarios missing from the index
DEFAULT_DURATION = 10.0
DEFAULT_SEED = 0


def scenario_dir():
    """Return the directory holding the shipped scenarios."""
    override = os.environ.get(SCENARIO_DIR_ENV)
    if override:
        return override
    here = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(here, "scenarios")


def resolve_manifest(name):
    """
    Find the manifest file for a path or scenario name.

    The name is tried as given, with ".manifest" appended, and finally as
    the name of a scenario in the scenario directory.

    Args:
        name (str):
            The manifest path or scenario name.

    Returns:
        str:
            The path to the manifest.

    Raises:
        FileNotFoundError:
            If no manifest matches.
    """
    from portkit.manifest import MANIFEST_SUFFIX

    base = os.path.basename(name)
    if base.endswith(MANIFEST_SUFFIX):
        base = base[: -len(MANIFEST_SUFFIX)]
    candidates = [
        name,
        name + MANIFEST_SUFFIX,
        os.path.join(scenario_dir(), base + MANIFEST_SUFFIX),
    ]
    for candidate in candidates:
        if os.path.isfile(candidate):
            return candidate
    raise FileNotFoundError(f"no manifest or scenario named {name!r}")


def scenario_defaults(manifest):
    """
    Return the documented duration and seed of a scenario.

    Args:
        manifest (Manifest):
            The scenario.

    Returns:
        tuple:
            The duration and seed (defaults for unindexed scenarios).
    """
    from portkit.paramfile import parse_index

    index_path = os.path.join(scenario_dir(), "index.yaml")
    if os.path.isfile(index_path):
        entry = parse_index(index_path).get(manifest.name)
        if entry is not None:
            return entry["duration"], entry["seed"]
    return DEFAULT_DURATION, DEFAULT_SEED


def golden_path(manifest):
    """Return where the golden log of a scenario lives."""
    return os.path.join(scenario_dir(), "golden", f"{manifest.name}.log")


def run_main(args):
    """
    Run a scenario and emit its ActionLog.

    Args:
        args (Namespace):
            The parsed command line arguments.

    Returns:
        int:
            The exit status.
    """
    # Delay import to ensure Logger is instantiated before we import
    # modules that use its decorators
    from portkit.actionlog import ActionLog, diff_logs
    from portkit.manifest import load_manifest
    from portkit.simulator import run_scenario

    manifest = load_manifest(resolve_manifest(args.manifest))
    duration, seed = scenario_defaults(manifest)
    if args.duration is not None:
        duration = args.duration
    if args.seed is not None:
        seed = args.seed

    print(f"running {manifest.name} for {duration} s with seed {seed}")
    log = run_scenario(
        manifest, duration, seed=seed, tick=args.tick, params=args.params
    )

    if args.out is not None:
        log.write(args.out)
        print(f"wrote {len(log)} lines to {args.out}")
    else:
        sys.stdout.write(log.text())

    if args.bless:
        path = golden_path(manifest)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        log.write(path)
        print(f"blessed {path}")

    if args.expect is not None:
        divergences = diff_logs(ActionLog.read(args.expect), log)
        if divergences:
            for divergence in divergences:
                sys.stderr.write(f"{divergence}\n")
            return EXIT_MISMATCH
        print(f"matches {args.expect}")

    Logger().report()
    return EXIT_OK


def check_main(args):
    """
    Validate a manifest, its monitors and its constraints.

    Args:
        args (Namespace):
            The parsed command line arguments.

    Returns:
        int:
            The exit status.
    """
    from portkit.manifest import load_manifest
    from portkit.simulator import Simulation

    manifest = load_manifest(resolve_manifest(args.manifest))

    # Audit without raising so every port gets reported
    simulation = Simulation(manifest, params=args.params, strict=False)
    for report in simulation.reports:
        print(report)

    clean = all(report.clean for report in simulation.reports)
    if manifest.strict and not clean:
        return EXIT_CONSISTENCY
    return EXIT_OK


def _evaluate_line(expression, symbols):
    """Evaluate one expression and return "true" or "false"."""
    from portkit.constraint import evaluate, parse_constraint, parse_symbols

    rule = parse_constraint(expression)
    active = parse_symbols(symbols)
    return "true" if evaluate(rule, active) else "false"


def eval_main(args):
    """
    Evaluate a constraint against a set of active events.

    Args:
        args (Namespace):
            The parsed command line arguments.

    Returns:
        int:
            The exit status.
    """
    from portkit.errors import ParseError

    if not args.repl:
        sys.stdout.write(
            _evaluate_line(args.expression, args.symbols) + "\n"
        )
        return EXIT_OK

    # One "<expression> [; symbols...]" per line until end of input
    for line in sys.stdin:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        expression, _, symbols = line.partition(";")
        try:
            result = _evaluate_line(expression, symbols.split())
        except ParseError as error:
            result = f"error: {error}"
        sys.stdout.write(result + "\n")
        sys.stdout.flush()
    return EXIT_OK


def diff_main(args):
    """
    Compare two ActionLogs.

    Args:
        args (Namespace):
            The parsed command line arguments.

    Returns:
        int:
            The exit status.
    """
    from portkit.actionlog import ActionLog, diff_logs

    expected = ActionLog.read(args.expected)
    actual = ActionLog.read(args.actual)
    divergences = diff_logs(expected, actual, context=args.context)
    if not divergences:
        sys.stdout.write("logs match\n")
        return EXIT_OK
    for divergence in divergences:
        sys.stdout.write(f"{divergence}\n")
    return EXIT_MISMATCH


COMMANDS = {
    "run": run_main,
    "check": check_main,
    "eval": eval_main,
    "diff": diff_main,
}


def dispatch(args):
    """
    Run a subcommand, mapping errors to exit statuses.

    Args:
        args (Namespace):
            The parsed command line arguments.

    Returns:
        int:
            The exit status.
    """
    from portkit.errors import (
        CompileError,
        ConsistencyError,
        ParseError,
        PortkitError,
        UnboundParameter,
    )

    try:
        return COMMANDS[args.command](args)
    except ConsistencyError as error:
        sys.stderr.write(f"error: {error}\n")
        for violation in error.violations:
            sys.stderr.write(f"  {violation}\n")
        return EXIT_CONSISTENCY
    except (ParseError, CompileError, UnboundParameter) as error:
        sys.stderr.write(f"error: {error}\n")
        return EXIT_PARSE
    except (PortkitError, OSError, ValueError) as error:
        sys.stderr.write(f"error: {error}\n")
        return EXIT_RUNTIME


def main(argv=None):
    """Parse the command line and run the requested subcommand."""
    parser = Parser(
        description="Run, check and compare port-arbitrated scenarios."
    )

    # Get the arguments
    args = parser.parse_args(argv)

    # Set up the logger. When the log itself goes to standard output the
    # chatter would corrupt it, so we stay silent
    silent = getattr(args, "silent", False)
    if args.command == "run" and args.out is None:
        silent = True
    if args.command in ("eval", "diff"):
        silent = True
    Logger(silent=silent)
    Logger().reset()

    sys.exit(dispatch(args))
