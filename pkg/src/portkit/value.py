"""A module defining message values and their canonical text encoding.

A Value is the unit of port traffic. Values are represented with immutable
Python objects so they can be shared freely between connections and threads:

    IntAtom     -> int (64-bit signed range, bool is not accepted)
    FloatAtom   -> float
    StringAtom  -> str
    List        -> tuple of Values

The canonical text form writes integers in decimal, floats with the shortest
representation that round trips (always containing a ".", an exponent or
being one of inf, -inf, nan so they never read back as integers), strings
double-quoted with backslash escapes for '"' and '\\', and lists as their
space-separated elements inside "(" and ")".

Values are also addressed with structured access paths (see resolve_path),
which is how monitors read fields such as ".certainty" or ".pos.0".

Example:
    >>> encode_value((0.1, 0.2, 0.3))
    '(0.1 0.2 0.3)'
    >>> decode_value('(1 2.5 "hi")')
    (1, 2.5, 'hi')
"""

import math
import re

from portkit.errors import BadPath, DepthExceeded, ParseError, PathError

# The default maximum nesting depth of lists
MAX_DEPTH = 32

# The range of an IntAtom
INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

# Tokens of the text form
_NUMBER = re.compile(r"[+-]?(?:inf|nan|[0-9.][0-9A-Za-z.+-]*)")
_DELIMITERS = set('()" \t\r\n')


def is_atom(value):
    """Return whether a value is an atom (int, float or str)."""
    return isinstance(value, (int, float, str)) and not isinstance(
        value, bool
    )


def depth(value):
    """
    Return the list nesting depth of a value.

    Atoms have depth 0 and a list has one more than its deepest element.

    Args:
        value (Value):
            The value to measure.

    Returns:
        int:
            The nesting depth.
    """
    if isinstance(value, tuple):
        return 1 + max((depth(item) for item in value), default=0)
    return 0


def check_value(value, max_depth=MAX_DEPTH):
    """
    Validate that an object is a well-formed Value.

    Args:
        value (object):
            The object to validate.
        max_depth (int):
            The maximum list nesting depth allowed.

    Raises:
        DepthExceeded:
            If the value is nested too deeply.
        TypeError:
            If the object is not a Value.
        ValueError:
            If an integer is outside the 64-bit signed range.
    """
    _check(value, max_depth, 0)


def _check(value, max_depth, level):
    """Recursively validate a value."""
    if isinstance(value, tuple):
        if level + 1 > max_depth:
            raise DepthExceeded(
                f"value nested deeper than the limit of {max_depth}"
            )
        for item in value:
            _check(item, max_depth, level + 1)
    elif isinstance(value, bool):
        raise TypeError("booleans are not Values, use an IntAtom")
    elif isinstance(value, int):
        if not INT_MIN <= value <= INT_MAX:
            raise ValueError(f"integer {value} is outside the 64-bit range")
    elif not isinstance(value, (float, str)):
        raise TypeError(f"{type(value).__name__} is not a Value")


def to_value(obj):
    """
    Convert nested Python sequences into a Value.

    Lists become tuples recursively, everything else must already be an atom.

    Args:
        obj (object):
            The object to convert.

    Returns:
        Value:
            The converted value.
    """
    if isinstance(obj, (list, tuple)):
        return tuple(to_value(item) for item in obj)
    _check(obj, MAX_DEPTH, 0)
    return obj


def _encode_float(number):
    """Encode a float in its canonical shortest form."""
    if math.isnan(number):
        return "nan"
    if math.isinf(number):
        return "inf" if number > 0 else "-inf"
    return repr(number)


def _encode_string(text):
    """Encode a string with its escapes."""
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def encode_value(value, max_depth=MAX_DEPTH):
    """
    Encode a value in its canonical text form.

    Args:
        value (Value):
            The value to encode.
        max_depth (int):
            The maximum list nesting depth allowed.

    Returns:
        str:
            The canonical text.

    Raises:
        DepthExceeded:
            If the value is nested deeper than max_depth.
    """
    check_value(value, max_depth)
    parts = []
    _encode_into(value, parts)
    return "".join(parts)


def _encode_into(value, parts):
    """Append the encoding of a (validated) value to parts."""
    if isinstance(value, tuple):
        parts.append("(")
        for index, item in enumerate(value):
            if index:
                parts.append(" ")
            _encode_into(item, parts)
        parts.append(")")
    elif isinstance(value, str):
        parts.append(_encode_string(value))
    elif isinstance(value, float):
        parts.append(_encode_float(value))
    else:
        parts.append(str(value))


class _ValueReader:
    """A recursive descent reader for the canonical text form.

    Attributes:
        text (str):
            The text being read.
        index (int):
            The current character offset.
        max_depth (int):
            The maximum list nesting depth allowed.
    """

    def __init__(self, text, max_depth):
        """
        Create the reader.

        Args:
            text (str):
                The text to read.
            max_depth (int):
                The maximum list nesting depth allowed.
        """
        self.text = text
        self.index = 0
        self.max_depth = max_depth

    def skip_space(self):
        """Advance past any whitespace."""
        while self.index < len(self.text) and self.text[self.index].isspace():
            self.index += 1

    def at_end(self):
        """Return whether all input has been consumed."""
        return self.index >= len(self.text)

    def error(self, reason, expected):
        """Build a parse error at the current position."""
        return ParseError(reason, position=self.index, expected=expected)

    def read(self, level=0):
        """Read one value starting at the current position."""
        self.skip_space()
        if self.at_end():
            raise self.error("unexpected end of input", "a value")

        char = self.text[self.index]
        if char == "(":
            return self.read_list(level)
        if char == '"':
            return self.read_string()
        if char == ")":
            raise self.error("unexpected ')'", "a value")
        return self.read_number()

    def read_list(self, level):
        """Read a parenthesised list."""
        if level + 1 > self.max_depth:
            raise DepthExceeded(
                f"value nested deeper than the limit of {self.max_depth}"
            )

        # Step over the opening parenthesis
        self.index += 1
        items = []
        while True:
            self.skip_space()
            if self.at_end():
                raise self.error("unterminated list", "')'")
            if self.text[self.index] == ")":
                self.index += 1
                return tuple(items)
            items.append(self.read(level + 1))

    def read_string(self):
        """Read a double-quoted string."""
        start = self.index
        self.index += 1
        chars = []
        while True:
            if self.at_end():
                self.index = start
                raise self.error("unterminated string", "'\"'")
            char = self.text[self.index]
            if char == "\\":
                if self.index + 1 >= len(self.text):
                    raise self.error("dangling escape", "'\\\\' or '\"'")
                escaped = self.text[self.index + 1]
                if escaped not in '\\"':
                    raise self.error(
                        f"invalid escape '\\{escaped}'", "'\\\\' or '\"'"
                    )
                chars.append(escaped)
                self.index += 2
            elif char == '"':
                self.index += 1
                return "".join(chars)
            else:
                chars.append(char)
                self.index += 1

    def read_number(self):
        """Read an integer or float atom."""
        start = self.index
        while (
            self.index < len(self.text)
            and self.text[self.index] not in _DELIMITERS
        ):
            self.index += 1
        token = self.text[start : self.index]

        if not _NUMBER.fullmatch(token):
            self.index = start
            raise self.error(f"invalid token {token!r}", "a value")

        # Integers are plain decimal digits, anything else is a float
        if re.fullmatch(r"[+-]?[0-9]+", token):
            number = int(token)
            if not INT_MIN <= number <= INT_MAX:
                self.index = start
                raise self.error(
                    f"integer {token} is outside the 64-bit range", "a value"
                )
            return number
        try:
            return float(token)
        except ValueError:
            self.index = start
            raise self.error(f"invalid number {token!r}", "a value")


def decode_value(text, max_depth=MAX_DEPTH):
    """
    Decode the canonical text form of a value.

    Surrounding whitespace is ignored; any other trailing input is an error.

    Args:
        text (str):
            The text to decode.
        max_depth (int):
            The maximum list nesting depth allowed.

    Returns:
        Value:
            The decoded value.

    Raises:
        ParseError:
            If the text is malformed.
        DepthExceeded:
            If the value is nested deeper than max_depth.
    """
    reader = _ValueReader(text, max_depth)
    value = reader.read()
    reader.skip_space()
    if not reader.at_end():
        raise reader.error("unexpected trailing input", "end of input")
    return value


def canonical(text, max_depth=MAX_DEPTH):
    """Re-encode value text in its canonical form."""
    return encode_value(decode_value(text, max_depth), max_depth)


# ---------------------------------------------------------------------------
# Structured access paths
# ---------------------------------------------------------------------------

_SEGMENT = re.compile(
    r"\.(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|\.(?P<dotindex>-?[0-9]+)"
    r"|\[(?P<index>-?[0-9]+)\]"
)


def parse_path(path):
    """
    Parse a structured access path into its segments.

    A path is "." (the whole value) or a chain of ".name", ".N" and "[N]"
    segments, e.g. ".pos.0" or ".objects[1].dist".

    Args:
        path (str):
            The path to parse.

    Returns:
        tuple:
            The segments, each a str (field name) or an int (index).

    Raises:
        BadPath:
            If the path is malformed.
    """
    if path == ".":
        return ()
    if not path:
        raise BadPath("empty path", expected="'.' or a field path")

    segments = []
    index = 0
    while index < len(path):
        match = _SEGMENT.match(path, index)
        if match is None:
            raise BadPath(
                f"malformed path {path!r}",
                position=index,
                expected="'.name', '.N' or '[N]'",
            )
        if match.group("name") is not None:
            segments.append(match.group("name"))
        elif match.group("dotindex") is not None:
            segments.append(int(match.group("dotindex")))
        else:
            segments.append(int(match.group("index")))
        index = match.end()

    return tuple(segments)


def field(value, name, default=PathError):
    """
    Look up a named field of a record-like list.

    A record is a list of ("name" value) pairs; the first pair whose head
    equals name wins.

    Args:
        value (Value):
            The record to search.
        name (str):
            The field name.
        default (object):
            Returned when the field is missing (raise PathError if omitted).

    Returns:
        Value:
            The field's value.
    """
    if isinstance(value, tuple):
        for item in value:
            if (
                isinstance(item, tuple)
                and len(item) == 2
                and item[0] == name
            ):
                return item[1]
    if default is PathError:
        raise PathError(f"no field {name!r} in {encode_value(value)}")
    return default


def resolve_path(value, path):
    """
    Resolve a structured access path against a value.

    Args:
        value (Value):
            The value to read.
        path (str or tuple):
            The path text or its parsed segments.

    Returns:
        Value:
            The addressed part of the value.

    Raises:
        PathError:
            If the path does not resolve.
    """
    segments = parse_path(path) if isinstance(path, str) else path
    current = value
    for segment in segments:
        if isinstance(segment, int):
            if not isinstance(current, tuple):
                raise PathError(
                    f"cannot index atom {encode_value(current)}"
                )
            try:
                current = current[segment]
            except IndexError:
                raise PathError(
                    f"index {segment} out of range for "
                    f"{encode_value(current)}"
                )
        else:
            current = field(current, segment)
    return current


def first_string(value):
    """
    Return the first string atom of a value in depth-first order.

    Args:
        value (Value):
            The value to search.

    Returns:
        str:
            The first string atom, or None if there is none.
    """
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        for item in value:
            found = first_string(item)
            if found is not None:
                return found
    return None


def record(**fields):
    """
    Build a record value from keyword arguments.

    Example:
        >>> record(dist=0.3)
        (('dist', 0.3),)
    """
    return tuple((name, to_value(item)) for name, item in fields.items())
