"""A module containing the command-line interface for portkit.

This module contains the Parser class for parsing command line arguments. The
Parser class is a wrapper around the argparse.ArgumentParser class that sets
up the run, check, eval and diff subcommands and their standardised
arguments.

Example:
    To use the Parser class, simply create an instance of the class and call
    the parse_args method. This will return a namespace containing the parsed
    command line arguments.

    >>> parser = Parser(description="A description of the program.")
    >>> args = parser.parse_args(["eval", "not e_taken", "e_arm_idle"])
"""

import argparse
import sys

from portkit.paramfile import parse_paramfile
from portkit.utils import PARAMETER_NAME


class StoreParam(argparse.Action):
    """A class for storing NAME=VALUE parameter overrides."""

    def __call__(self, parser, namespace, values, option_string=None):
        """
        Store the parameter in the namespace.

        Args:
            parser (argparse.ArgumentParser):
                The parser instance.
            namespace (argparse.Namespace):
                The namespace to store the parameter in.
            values (str):
                The NAME=VALUE pair to store.
            option_string (str):
                The option string.
        """
        key, eq, value = values.partition("=")
        if not eq or not PARAMETER_NAME.fullmatch(key):
            parser.error(f"{option_string} expects NAME=VALUE, got {values!r}")
        try:
            number = float(value)
        except ValueError:
            parser.error(f"{option_string} {key}: {value!r} is not a number")
        if getattr(namespace, self.dest, None) is None:
            setattr(namespace, self.dest, {})
        getattr(namespace, self.dest)[key] = number


class Parser(argparse.ArgumentParser):
    """
    A class for parsing command line arguments.

    NOTE: This class is a wrapper around the argparse.ArgumentParser class
    adding the subcommands and the arguments they share.

    Attributes:
        subparsers (argparse._SubParsersAction):
            The subcommand parsers.
    """

    def __init__(self, description):
        """
        Create the parser instance.

        Args:
            description (str):
                A description of the program.
        """
        # Create the parser
        super(Parser, self).__init__(description=description)

        self.subparsers = self.add_subparsers(
            dest="command", parser_class=argparse.ArgumentParser
        )

        self._add_run()
        self._add_check()
        self._add_eval()
        self._add_diff()

    @staticmethod
    def _add_silent(parser):
        """Add silent mode which will suppress all portkit prints."""
        parser.add_argument(
            "--silent",
            action="store_true",
            help="Suppress all portkit prints.",
            default=False,
        )

    @staticmethod
    def _add_params(parser):
        """Add the parameter override arguments."""
        parser.add_argument(
            "--params",
            type=str,
            help="A yaml file of parameter overrides (NAME: number).",
            default=None,
        )
        parser.add_argument(
            "--param",
            dest="param",
            action=StoreParam,
            metavar="NAME=VALUE",
            help="Override one parameter. May be given many times and wins "
            "over --params.",
            default=None,
        )

    def _add_run(self):
        """Add the run subcommand."""
        run = self.subparsers.add_parser(
            "run", help="Run a scenario and emit its ActionLog."
        )
        run.add_argument(
            "manifest",
            type=str,
            help="A manifest path or the name of a shipped scenario.",
        )
        run.add_argument(
            "--duration",
            type=float,
            help="Virtual seconds to simulate (defaults to the scenario "
            "index, or 10).",
            default=None,
        )
        run.add_argument(
            "--seed",
            type=int,
            help="The seed of the stub modules' random streams (defaults to "
            "the scenario index, or 0).",
            default=None,
        )
        run.add_argument(
            "--tick",
            type=float,
            help="The scheduler tick in seconds.",
            default=0.05,
        )
        run.add_argument(
            "--out",
            type=str,
            help="Where to write the ActionLog (standard output if omitted).",
            default=None,
        )
        run.add_argument(
            "--bless",
            action="store_true",
            help="Write the log as the scenario's golden log.",
            default=False,
        )
        run.add_argument(
            "--expect",
            type=str,
            help="A golden log to compare the run against.",
            default=None,
        )
        self._add_params(run)
        self._add_silent(run)

    def _add_check(self):
        """Add the check subcommand."""
        check = self.subparsers.add_parser(
            "check",
            help="Validate a manifest, its monitors and its constraints.",
        )
        check.add_argument(
            "manifest",
            type=str,
            help="A manifest path or the name of a shipped scenario.",
        )
        self._add_params(check)
        self._add_silent(check)

    def _add_eval(self):
        """Add the eval subcommand."""
        evaluate = self.subparsers.add_parser(
            "eval", help="Evaluate a constraint against active events."
        )
        evaluate.add_argument(
            "expression",
            type=str,
            nargs="?",
            help="The constraint expression.",
            default=None,
        )
        evaluate.add_argument(
            "symbols",
            type=str,
            nargs="*",
            help="The active event symbols.",
        )
        evaluate.add_argument(
            "--repl",
            action="store_true",
            help="Read '<expression> [; symbols...]' lines from standard "
            "input.",
            default=False,
        )

    def _add_diff(self):
        """Add the diff subcommand."""
        diff = self.subparsers.add_parser(
            "diff", help="Compare two ActionLogs."
        )
        diff.add_argument("expected", type=str, help="The expected log.")
        diff.add_argument("actual", type=str, help="The actual log.")
        diff.add_argument(
            "--context",
            type=int,
            help="Lines of context around the divergence.",
            default=3,
        )

    def __str__(self):
        """Summarise the command line arguments."""
        self.print_help()
        return ""

    def parse_args(self, args=None, namespace=None):
        """
        Parse the command line arguments.

        Parameter files are read here so the returned namespace carries a
        single "params" dictionary (file values overridden by --param).

        Args:
            args (list):
                The command line arguments to parse.
            namespace (argparse.Namespace):
                The namespace to store the parsed arguments in.

        Returns:
            argparse.Namespace:
                The parsed command line arguments.
        """
        if args is None:
            args = sys.argv[1:]

        # If no arguments are provided, display help
        if not args:
            self.print_help()
            self.exit()

        args = super(Parser, self).parse_args(args, namespace)

        if args.command is None:
            self.print_help()
            self.exit(2)

        missing = args.command == "eval" and args.expression is None
        if missing and not args.repl:
            self.error("eval needs an expression (or --repl)")

        if hasattr(args, "params"):
            overrides = getattr(args, "param", None) or {}
            try:
                args.params = parse_paramfile(args.params)
            except (OSError, ValueError) as error:
                self.error(str(error))
            args.params.update(overrides)

        return args
