"""A module defining the exceptions raised by portkit.

Every error raised by the library derives from PortkitError so callers (and
the command line interface) can tell portkit failures apart from genuine
bugs. Errors caused by bad user input also derive from ValueError, in the
same way the rest of the code base reports bad input.

Example:
    try:
        decode_value("(1 2")
    except ParseError as e:
        print(e.position, e.expected)
"""


class PortkitError(Exception):
    """The base class of all portkit errors."""


class ParseError(PortkitError, ValueError):
    """
    A class for reporting malformed text.

    The same class is used for value text, constraint expressions, monitor
    specifications and manifests; whichever location information is
    available is attached.

    Attributes:
        reason (str):
            A description of what went wrong.
        position (int):
            The character offset of the failure (if known).
        expected (str):
            What the parser expected to find (if known).
        line (int):
            The 1-based line number of the failure (if known).
        source (str):
            The file the text was read from (if known).
        token (int):
            The 1-based index of the offending token (if known).
    """

    def __init__(
        self,
        reason,
        position=None,
        expected=None,
        line=None,
        source=None,
        token=None,
    ):
        """
        Create the parse error.

        Args:
            reason (str):
                A description of what went wrong.
            position (int):
                The character offset of the failure.
            expected (str):
                What the parser expected to find.
            line (int):
                The 1-based line number of the failure.
            source (str):
                The file the text was read from.
            token (int):
                The 1-based index of the offending token.
        """
        self.reason = reason
        self.position = position
        self.expected = expected
        self.line = line
        self.source = source
        self.token = token
        super(ParseError, self).__init__(self._describe())

    def _describe(self):
        """Build the human readable message."""
        where = []
        if self.source is not None:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.token is not None:
            where.append(f"token {self.token}")
        if self.position is not None:
            where.append(f"offset {self.position}")

        message = self.reason
        if self.expected is not None:
            message += f" (expected {self.expected})"
        if where:
            message = ", ".join(where) + ": " + message
        return message

    def located(self, line=None, source=None):
        """
        Return a copy of the error with line/source information attached.

        Args:
            line (int):
                The line number to attach.
            source (str):
                The source file to attach.

        Returns:
            ParseError:
                The relocated error (same class as self).
        """
        return type(self)(
            self.reason,
            position=self.position,
            expected=self.expected,
            line=line if line is not None else self.line,
            source=source if source is not None else self.source,
            token=self.token,
        )


class ReservedWordAsIdentifier(ParseError):
    """A keyword (true, false, and, or, not) was used as an event name."""


class UnknownStage(ParseError):
    """A monitor specification line names a stage that does not exist."""


class BadPath(ParseError):
    """A structured access path is malformed."""


class ManifestError(ParseError):
    """A scenario manifest is malformed or inconsistent."""


class DepthExceeded(PortkitError, ValueError):
    """A value is nested deeper than the configured limit."""


class UnknownPort(PortkitError, LookupError):
    """A port is not registered on the bus."""


class DirectionMismatch(PortkitError, ValueError):
    """A connection does not run from an output to an input port."""


class MonitorInitFailed(PortkitError, RuntimeError):
    """A monitor's create callback refused to start."""


class AlreadyAttached(PortkitError, RuntimeError):
    """A connection already carries a monitor."""


class CallbackFault(PortkitError, RuntimeError):
    """
    A monitor callback raised an error.

    Attributes:
        callback (str):
            The name of the failing callback.
        cause (Exception):
            The original error.
    """

    def __init__(self, callback, cause):
        """
        Create the fault.

        Args:
            callback (str):
                The name of the failing callback.
            cause (Exception):
                The original error.
        """
        self.callback = callback
        self.cause = cause
        super(CallbackFault, self).__init__(
            f"{callback} callback failed: {cause!r}"
        )


class NegativeStep(PortkitError, ValueError):
    """The clock was asked to move backwards."""


class InvalidLifetime(PortkitError, ValueError):
    """An event lifetime is not strictly positive."""


class InvalidSymbol(PortkitError, ValueError):
    """An event name is not a valid identifier."""


class TooManyVariables(PortkitError, ValueError):
    """A consistency check would need to enumerate too many variables."""


class UnknownConnection(PortkitError, LookupError):
    """A connection is not registered where it was looked up."""


class PathError(PortkitError, LookupError):
    """A structured access path does not resolve against a value."""


class CompileError(PortkitError, ValueError):
    """A monitor specification cannot be compiled into a plug-in."""


class UnboundParameter(PortkitError, KeyError):
    """
    A monitor or manifest references a parameter that has no value.

    Attributes:
        name (str):
            The name of the missing parameter.
    """

    def __init__(self, name, source=None):
        """
        Create the error.

        Args:
            name (str):
                The name of the missing parameter.
            source (str):
                The file that referenced it (if known).
        """
        self.name = name
        self.source = source
        super(UnboundParameter, self).__init__(name)

    def __str__(self):
        """Return the message."""
        where = f"{self.source}: " if self.source is not None else ""
        return f"{where}unbound parameter {self.name}"


class ConsistencyError(PortkitError, RuntimeError):
    """
    A strict-mode consistency audit found overlapping constraints.

    Attributes:
        violations (list):
            The Violation instances found.
    """

    def __init__(self, violations):
        """
        Create the error.

        Args:
            violations (list):
                The Violation instances found.
        """
        self.violations = list(violations)
        super(ConsistencyError, self).__init__(
            f"{len(self.violations)} pair(s) of constraints can be "
            "satisfied at the same time"
        )


class UnknownObject(PortkitError, LookupError):
    """A world event references an object that does not exist."""
