"""A module containing the ActionLog, the observable output of the kernel.

Every delivery, discard, event mutation and stub module action is recorded
as one trace line of the form

    <time:%.3f> <event-kind> <label> <payload-text>

where label is a connection label (or a module name for ACTION lines) and
payload-text is a Value in canonical text form, with any line break inside
a string escaped as a backslash, "u" and four hex digits. Logs are compared
with diff_logs, which tolerates tiny timestamp differences and re-encodes
payloads before comparing them.

Example:
    log = ActionLog()
    log.append(0.0, LineKind.ACTION, "Speak", "hello")
    print(log.text())
"""

import enum
import re

from portkit.errors import ParseError
from portkit.logger import Logger
from portkit.value import MAX_DEPTH, canonical, encode_value

# Get the logger
logger = Logger()

# The timestamp tolerance used when comparing logs
TIME_TOLERANCE = 1e-6

# Trace payloads wrap a message payload in one more list
TRACE_DEPTH = MAX_DEPTH + 1

# Characters that would split a trace line; they are written as \uXXXX
_LINE_BREAKS = frozenset("\n\r\x0b\x0c\x1c\x1d\x1e\x85\u2028\u2029")
_ESCAPED = re.compile(r"\\(\\|u[0-9a-f]{4})")


def escape_line_breaks(text):
    """Escape the line breaks of a payload text."""
    return "".join(
        f"\\u{ord(char):04x}" if char in _LINE_BREAKS else char
        for char in text
    )


def unescape_line_breaks(text):
    """Undo escape_line_breaks, leaving the value escapes alone."""

    def restore(match):
        token = match.group(1)
        return match.group(0) if token == "\\" else chr(int(token[1:], 16))

    return _ESCAPED.sub(restore, text)


class LineKind(enum.Enum):
    """The kinds of trace line."""

    DELIVER = "DELIVER"
    DISCARD = "DISCARD"
    EVENT_SET = "EVENT_SET"
    EVENT_UNSET = "EVENT_UNSET"
    EVENT_EXPIRE = "EVENT_EXPIRE"
    ACTION = "ACTION"


# The counter bumped for each kind of line
_COUNTER = {
    LineKind.DELIVER: "deliver",
    LineKind.DISCARD: "discard",
    LineKind.EVENT_SET: "event_set",
    LineKind.EVENT_UNSET: "event_unset",
    LineKind.EVENT_EXPIRE: "event_expire",
    LineKind.ACTION: "action",
}


class TraceLine:
    """
    A class defining one line of an ActionLog.

    Attributes:
        time (float):
            The virtual time of the line.
        kind (LineKind):
            What happened.
        label (str):
            The connection label or module name.
        payload (str):
            The canonical payload text.
    """

    __slots__ = ("time", "kind", "label", "payload")

    def __init__(self, time, kind, label, payload):
        """
        Create the trace line.

        Args:
            time (float):
                The virtual time of the line.
            kind (LineKind):
                What happened.
            label (str):
                The connection label or module name.
            payload (str):
                The canonical payload text.
        """
        self.time = time
        self.kind = LineKind(kind)
        self.label = label
        self.payload = payload

    def __str__(self):
        """Return the line in its trace format."""
        payload = escape_line_breaks(self.payload)
        return f"{self.time:.3f} {self.kind.value} {self.label} {payload}"

    def __repr__(self):
        """Return the debugging representation of the line."""
        return f"TraceLine({str(self)!r})"

    def __eq__(self, other):
        """Compare two lines exactly."""
        if not isinstance(other, TraceLine):
            return NotImplemented
        return str(self) == str(other)

    def __hash__(self):
        """Hash the line text."""
        return hash(str(self))

    @classmethod
    def parse(cls, text):
        """
        Parse a trace line.

        Args:
            text (str):
                The line to parse.

        Returns:
            TraceLine:
                The parsed line.

        Raises:
            ParseError:
                If the line is malformed.
        """
        parts = text.rstrip("\n").split(" ", 3)
        if len(parts) != 4:
            raise ParseError(
                f"malformed trace line {text!r}",
                expected="<time> <kind> <label> <payload>",
            )
        stamp, kind, label, payload = parts
        try:
            stamp = float(stamp)
        except ValueError:
            raise ParseError(f"invalid timestamp {stamp!r}", expected="time")
        try:
            kind = LineKind(kind)
        except ValueError:
            raise ParseError(f"unknown line kind {kind!r}", expected="kind")
        return cls(stamp, kind, label, unescape_line_breaks(payload))

    def matches(self, other, tolerance=TIME_TOLERANCE):
        """
        Compare two lines the way diff_logs does.

        Args:
            other (TraceLine):
                The line to compare with.
            tolerance (float):
                The timestamp tolerance.

        Returns:
            bool:
                Whether the lines are equivalent.
        """
        if abs(self.time - other.time) > tolerance:
            return False
        if self.kind is not other.kind or self.label != other.label:
            return False
        if self.payload == other.payload:
            return True
        try:
            return canonical(self.payload, TRACE_DEPTH) == canonical(
                other.payload, TRACE_DEPTH
            )
        except ValueError:
            return False


class ActionLog:
    """
    A class defining an ordered trace of what happened during a run.

    Attributes:
        lines (list):
            The TraceLine instances in the order they were appended.
    """

    def __init__(self, lines=None):
        """
        Create the log.

        Args:
            lines (list):
                Initial lines (optional).
        """
        self.lines = list(lines) if lines is not None else []

    def __len__(self):
        """Return the number of lines."""
        return len(self.lines)

    def __iter__(self):
        """Iterate over the lines."""
        return iter(self.lines)

    def __getitem__(self, index):
        """Return a line (or a slice of lines)."""
        return self.lines[index]

    def __eq__(self, other):
        """Compare two logs line by line."""
        if not isinstance(other, ActionLog):
            return NotImplemented
        return self.lines == other.lines

    def append(self, time, kind, label, payload):
        """
        Append a line.

        Args:
            time (float):
                The virtual time of the line.
            kind (LineKind):
                What happened.
            label (str):
                The connection label or module name.
            payload (Value):
                The payload value (encoded here).

        Returns:
            TraceLine:
                The appended line.
        """
        line = TraceLine(
            time, kind, label, encode_value(payload, TRACE_DEPTH)
        )
        self.lines.append(line)
        logger.increment(_COUNTER[line.kind])
        return line

    def filter(self, kind=None, label=None):
        """
        Select lines by kind and/or label.

        Args:
            kind (LineKind):
                The kind to keep (any if None).
            label (str):
                The label to keep (any if None).

        Returns:
            list:
                The matching lines.
        """
        kind = LineKind(kind) if kind is not None else None
        return [
            line
            for line in self.lines
            if (kind is None or line.kind is kind)
            and (label is None or line.label == label)
        ]

    def text(self):
        """Return the whole log in its trace format."""
        return "".join(f"{line}\n" for line in self.lines)

    def write(self, path):
        """
        Write the log to a file.

        Args:
            path (str):
                The file to write.
        """
        with open(path, "w") as file:
            file.write(self.text())

    @classmethod
    def from_text(cls, text):
        """
        Parse a log from its trace format.

        Args:
            text (str):
                The log text (blank lines are ignored).

        Returns:
            ActionLog:
                The parsed log.
        """
        lines = []
        for number, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                lines.append(TraceLine.parse(raw))
            except ParseError as error:
                raise error.located(line=number)
        return cls(lines)

    @classmethod
    def read(cls, path):
        """
        Read a log file.

        Args:
            path (str):
                The file to read.

        Returns:
            ActionLog:
                The parsed log.
        """
        with open(path, "r") as file:
            text = file.read()
        try:
            return cls.from_text(text)
        except ParseError as error:
            raise error.located(source=path)


class Divergence:
    """
    A class describing where two logs stop agreeing.

    Attributes:
        index (int):
            The 0-based index of the first divergent line.
        expected (TraceLine):
            The expected line (None if the expected log ended).
        actual (TraceLine):
            The actual line (None if the actual log ended).
        context (list):
            The matching lines just before the divergence.
    """

    def __init__(self, index, expected, actual, context):
        """
        Create the divergence.

        Args:
            index (int):
                The 0-based index of the first divergent line.
            expected (TraceLine):
                The expected line.
            actual (TraceLine):
                The actual line.
            context (list):
                The matching lines just before the divergence.
        """
        self.index = index
        self.expected = expected
        self.actual = actual
        self.context = context

    def __str__(self):
        """Return a human readable description of the divergence."""
        lines = [f"logs diverge at line {self.index + 1}:"]
        for line in self.context:
            lines.append(f"    {line}")
        lines.append(
            f"  - {self.expected if self.expected is not None else '<end>'}"
        )
        lines.append(
            f"  + {self.actual if self.actual is not None else '<end>'}"
        )
        return "\n".join(lines)


def diff_logs(expected, actual, context=3, tolerance=TIME_TOLERANCE):
    """
    Find where two logs diverge.

    Timestamps are compared with a tolerance and payloads after canonical
    re-encoding. Only the first divergence is reported since everything after
    it is usually a consequence.

    Args:
        expected (ActionLog):
            The reference log.
        actual (ActionLog):
            The log to check.
        context (int):
            How many preceding lines to include in the report.
        tolerance (float):
            The timestamp tolerance.

    Returns:
        list:
            An empty list if the logs agree, otherwise a single Divergence.
    """
    length = max(len(expected), len(actual))
    for index in range(length):
        want = expected[index] if index < len(expected) else None
        got = actual[index] if index < len(actual) else None
        if want is not None and got is not None and want.matches(
            got, tolerance
        ):
            continue
        start = max(0, index - context)
        return [
            Divergence(index, want, got, list(expected.lines[start:index]))
        ]
    return []
