"""A module defining the logger used to replace print statements in the code.

The logger is a simple class that can be used to replace print statements in
the code. On top of silencing chatter it keeps counts of the kernel's
operations (writes, deliveries, discards, event mutations, ...) so a run can
finish with a short summary report.

Note that the logger only handles chatter. The ActionLog produced by a
scenario is data and is written to its destination directly.

Example:
    The logger can be used to print messages to the console. For example:

        logger = Logger()
        logger.log("This is a message.")
"""

import builtins
import time
from functools import wraps


class Logger:
    """A class used to log messages to the console.

    The logger is a singleton so only needs to be instantiated once and can
    then be used throughout the code.

    Attributes:
        silent (bool): A boolean flag indicating whether the logger should
            suppress all output.
        counts (dict): The number of times each counted operation ran.
        warnings (list): The warnings issued so far.
    """

    _instance = None

    def __new__(cls, *args, **kwargs):
        """Create a new instance of the logger.

        This method is used to ensure that only one instance of the logger is
        created. Passing arguments to an existing instance updates its
        settings.

        Args:
            *args: Variable length argument list.
            **kwargs: Arbitrary keyword arguments.

        Returns:
            Logger: The logger instance.
        """
        if cls._instance is None:
            cls._instance = super(Logger, cls).__new__(cls)
            cls._instance._setup_instance(*args, **kwargs)
        elif args or kwargs:
            cls._instance._configure(*args, **kwargs)

        return cls._instance

    def _setup_instance(self, silent=False):
        """Set up the logger instance.

        Args:
            silent (bool): A boolean flag indicating whether the logger should
                suppress all output.
        """
        self._configure(silent)

        # We will log counts of the kernel's operations
        self.counts = {}
        self.warnings = []

        # We'll also keep track of the wall time taken
        self.start_time = None
        self.end_time = None

        # Start the timer
        self._start_timer()

    def _configure(self, silent=False):
        """Update the logger's settings."""
        self.silent = silent

    @property
    def elapsed_time(self):
        """Return the elapsed time."""
        end = self.end_time if self.end_time is not None else time.time()
        return end - self.start_time

    def _start_timer(self):
        """Initialise the timer."""
        self.start_time = time.time()
        self.end_time = None

    def _stop_timer(self):
        """Stop the timer."""
        self.end_time = time.time()

    def reset(self):
        """Forget all counts and warnings and restart the timer."""
        self.counts = {}
        self.warnings = []
        self._start_timer()

    def log(self, *args, **kwargs):
        """Log a message to the console.

        Args:
            *args: Variable length argument list.
            **kwargs: Arbitrary keyword arguments.
        """
        if not self.silent:
            _print(*args, **kwargs)

    def warn(self, message):
        """
        Record and print a warning.

        Args:
            message (str): The warning to issue.
        """
        self.warnings.append(message)
        self.log(f"warning: {message}")

    def increment(self, key, amount=1):
        """
        Increment a counter.

        Args:
            key (str): The counter to increment.
            amount (int): How much to add.
        """
        self.counts[key] = self.counts.get(key, 0) + amount

    def count(self, *keys):
        """
        Count an operation defined by a function.

        This function will count the operation represented by any function
        decorated by it. The counts will be stored under the specified keys.

        Args:
            *keys (str): The keys to store the counts under.

        Returns:
            function: The decorated function.
        """

        def decorator(func):
            @wraps(func)
            def wrapper(*args, **kwargs):
                result = func(*args, **kwargs)
                for key in keys:
                    self.increment(key)
                return result

            return wrapper

        return decorator

    def report(self):
        """Print a summary of the operations performed."""
        self._stop_timer()

        # Prepare header and format strings
        header = f"|{'Operation':<20} | {'Count':<10}|"
        line = "|" + "-" * (len(header) - 2) + "|"
        self.log("\n" + "Run Report".center(len(line), "-"))
        self.log(header)
        self.log(line)

        # Print each operation's summary
        for key in sorted(self.counts):
            self.log(f"|{key:<20} | {self.counts[key]:<10}|")
        self.log(line)

        final_line = [
            f"\nportkit ran in {self.elapsed_time:.2f} seconds, ",
            f"handling {self.counts.get('write', 0)} writes ",
            f"({self.counts.get('deliver', 0)} delivered, ",
            f"{self.counts.get('discard', 0)} discarded)",
            f" with {len(self.warnings)} warnings."
            if self.warnings
            else ".",
        ]

        self.log("".join(final_line))


# Store the original print function
_print = print


def custom_print(*args, **kwargs):
    """
    Overload the print function.

    This function will replace print and redirect all print calls to the
    Logger.log function for handling verbosity and logging.

    Args:
        *args: Variable length argument list.
        **kwargs: Arbitrary keyword arguments.
    """
    Logger().log(*args, **kwargs)


# Override the built-in print function
builtins.print = custom_print
