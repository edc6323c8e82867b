"""A module containing the monitor pipeline language.

Monitor files describe a port monitor declaratively, one stage per line:

    # Object-Detector -> Pick-and-Place: take the closest reachable object
    constraint: not e_taken and e_arm_idle
    select_closest . .dist
    range .dist 0 $HAND_REACHABLE
    transform ("take" $item.pos)

A file may also carry a periodic block, whose indented stages run on a
timer instead of on data:

    trig 0.5:
        emit_event e_link_alive ttl 0.5

The available stages are

    filter <path> <cmp> <number|"string">
    select_closest <list-path> <dist-path>
    range <path> <lo> <hi>
    emit_event <name> [ttl <seconds>]
    retract_event <name>
    event_if <path> <cmp> <threshold> set <name> else unset <name>
    forward_status [ttl <seconds>]
    rate_limit <seconds>
    transform <template>
    transform_if <path> <cmp> <threshold> <template> else <template>
    accept
    reject

Stages run in order on every arrival; the first rejecting stage ends the
arrival. Everything before the first transform runs in the accept callback
and the transforms run in update, once the arbitrator has let the message
through. Templates are value text in which $payload, $item and paths below
them ($item.pos) are replaced by the corresponding parts of the message.

Order matters. A filter placed before select_closest sees the whole list and
keeps the elements that pass, so the closest passing element gets selected;
placed after it, the filter tests only the closest element.

Numeric operands are literals or parameter names, either bare (TOOL_REACHABLE)
or as $TOOL_REACHABLE references substituted when the file is loaded.

Example:
    spec = load_monitor("take.pm", {"HAND_REACHABLE": 0.4})
    plugin = compile_monitor(spec)
    bus.connect(objects, cmd, monitor=plugin, label="C1")
"""

import operator
import re
from dataclasses import dataclass, field

from portkit.constraint import parse_constraint, print_constraint
from portkit.errors import (
    BadPath,
    CompileError,
    InvalidSymbol,
    ParseError,
    PathError,
    UnboundParameter,
    UnknownStage,
)
from portkit.events import validate_symbol
from portkit.monitor import MonitorPlugin
from portkit.utils import format_number, resolve_number, swap_in_str
from portkit.value import (
    decode_value,
    encode_value,
    first_string,
    parse_path,
    resolve_path,
)

# The comparison operators
COMPARISONS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}

# A template reference, e.g. $item.pos or $payload[0]
_REFERENCE = re.compile(
    r"\$(?P<root>item|payload)"
    r"(?P<path>(?:\.[A-Za-z_][A-Za-z0-9_]*|\.-?[0-9]+|\[-?[0-9]+\])*)"
)

_TRIG_HEADER = re.compile(r"trig\s+(?P<period>\S+?)\s*:")


def compare(left, op, right):
    """
    Compare two atoms with a comparison operator.

    Numbers compare numerically and strings lexically; comparing a number
    with a string is only ever "!=".

    Args:
        left (Value):
            The value read from the message.
        op (str):
            The operator.
        right (float or str):
            The operand from the stage.

    Returns:
        bool:
            The result of the comparison.
    """
    numeric = (int, float)
    if isinstance(left, numeric) and isinstance(right, numeric):
        return COMPARISONS[op](float(left), float(right))
    if isinstance(left, str) and isinstance(right, str):
        return COMPARISONS[op](left, right)
    return op == "!="


def fill_template(template, payload, item):
    """
    Substitute message parts into a template and decode the result.

    Args:
        template (str):
            The template text.
        payload (Value):
            The current payload ($payload).
        item (Value):
            The selected item ($item).

    Returns:
        Value:
            The filled template.
    """

    def substitute(match):
        root = item if match.group("root") == "item" else payload
        path = match.group("path") or "."
        return encode_value(resolve_path(root, path))

    return decode_value(_REFERENCE.sub(substitute, template))


def template_references(template):
    """Return the roots ("item"/"payload") a template refers to."""
    return {match.group("root") for match in _REFERENCE.finditer(template)}


class _Arrival:
    """The working state of one arrival while the stages run.

    Attributes:
        payload (Value):
            The arriving payload.
        item (Value):
            The working item (the payload until select_closest binds one).
        bound (bool):
            Whether select_closest has bound an item.
    """

    def __init__(self, payload):
        self.payload = payload
        self.item = payload
        self.bound = False


# Stage outcomes (besides True meaning "carry on")
REJECT = False
ACCEPT = "accept"


@dataclass(frozen=True)
class Filter:
    """Reject unless the value at path compares true with the operand."""

    path: str
    op: str
    operand: object
    keyword = "filter"

    def text(self):
        operand = (
            encode_value(self.operand)
            if isinstance(self.operand, str)
            else format_number(self.operand)
        )
        return f"filter {self.path} {self.op} {operand}"

    def run(self, arrival, host, memory):
        try:
            value = resolve_path(arrival.item, self.path)
        except PathError:
            if arrival.bound or not isinstance(arrival.item, tuple):
                raise
            return self.narrow(arrival)
        return compare(value, self.op, self.operand)

    def narrow(self, arrival):
        """Keep the list elements that pass, rejecting if none do."""
        kept = []
        for element in arrival.item:
            try:
                value = resolve_path(element, self.path)
            except PathError:
                continue
            if compare(value, self.op, self.operand):
                kept.append(element)
        arrival.item = tuple(kept)
        return bool(kept)


@dataclass(frozen=True)
class SelectClosest:
    """Bind the list element with the smallest distance as the item."""

    list_path: str
    dist_path: str
    keyword = "select_closest"

    def text(self):
        return f"select_closest {self.list_path} {self.dist_path}"

    def run(self, arrival, host, memory):
        candidates = resolve_path(arrival.item, self.list_path)
        if not isinstance(candidates, tuple):
            raise PathError(f"{self.list_path} is not a list")
        closest = None
        closest_dist = None
        # Ties go to the lowest index
        for candidate in candidates:
            dist = resolve_path(candidate, self.dist_path)
            if not isinstance(dist, (int, float)):
                raise PathError(f"{self.dist_path} is not a number")
            if closest_dist is None or dist < closest_dist:
                closest, closest_dist = candidate, dist
        if closest is None:
            return REJECT
        arrival.item = closest
        arrival.bound = True
        return True


@dataclass(frozen=True)
class Range:
    """Reject unless lo <= value < hi."""

    path: str
    lo: float
    hi: float
    keyword = "range"

    def text(self):
        return (
            f"range {self.path} {format_number(self.lo)} "
            f"{format_number(self.hi)}"
        )

    def run(self, arrival, host, memory):
        value = resolve_path(arrival.item, self.path)
        if not isinstance(value, (int, float)):
            return REJECT
        return self.lo <= value < self.hi


@dataclass(frozen=True)
class EmitEvent:
    """Set an event (with an optional lifetime)."""

    name: str
    ttl: object = None
    keyword = "emit_event"

    def text(self):
        if self.ttl is None:
            return f"emit_event {self.name}"
        return f"emit_event {self.name} ttl {format_number(self.ttl)}"

    def run(self, arrival, host, memory):
        host.set_event(self.name, self.ttl)
        return True


@dataclass(frozen=True)
class RetractEvent:
    """Remove this connection's record of an event."""

    name: str
    keyword = "retract_event"

    def text(self):
        return f"retract_event {self.name}"

    def run(self, arrival, host, memory):
        host.unset_event(self.name)
        return True


@dataclass(frozen=True)
class EventIf:
    """Set one event when a comparison holds, otherwise unset another."""

    path: str
    op: str
    threshold: float
    set_name: str
    unset_name: str
    keyword = "event_if"

    def text(self):
        return (
            f"event_if {self.path} {self.op} {format_number(self.threshold)} "
            f"set {self.set_name} else unset {self.unset_name}"
        )

    def run(self, arrival, host, memory):
        value = resolve_path(arrival.item, self.path)
        if compare(value, self.op, self.threshold):
            host.set_event(self.set_name)
        else:
            host.unset_event(self.unset_name)
        return True


@dataclass(frozen=True)
class ForwardStatus:
    """Set the event named by the payload's first string, then reject."""

    ttl: object = None
    keyword = "forward_status"

    def text(self):
        if self.ttl is None:
            return "forward_status"
        return f"forward_status ttl {format_number(self.ttl)}"

    def run(self, arrival, host, memory):
        name = first_string(arrival.payload)
        if name is not None:
            host.set_event(name, self.ttl)
        return REJECT


@dataclass(frozen=True)
class RateLimit:
    """Reject if the previous acceptance is more recent than the period."""

    period: float
    keyword = "rate_limit"

    def text(self):
        return f"rate_limit {format_number(self.period)}"

    def run(self, arrival, host, memory):
        now = host.now()
        last = memory.get(id(self))
        if last is not None and now - last < self.period:
            return REJECT
        memory[id(self)] = now
        return True


@dataclass(frozen=True)
class Transform:
    """Replace the payload with a filled template."""

    template: str
    keyword = "transform"

    def text(self):
        return f"transform {self.template}"

    def apply(self, arrival):
        return fill_template(self.template, arrival.payload, arrival.item)


@dataclass(frozen=True)
class TransformIf:
    """Replace the payload with one of two templates."""

    path: str
    op: str
    threshold: float
    then_template: str
    else_template: str
    keyword = "transform_if"

    def text(self):
        return (
            f"transform_if {self.path} {self.op} "
            f"{format_number(self.threshold)} {self.then_template} "
            f"else {self.else_template}"
        )

    def apply(self, arrival):
        value = resolve_path(arrival.item, self.path)
        template = (
            self.then_template
            if compare(value, self.op, self.threshold)
            else self.else_template
        )
        return fill_template(template, arrival.payload, arrival.item)


@dataclass(frozen=True)
class Accept:
    """Accept unconditionally, skipping the remaining accept stages."""

    keyword = "accept"

    def text(self):
        return "accept"

    def run(self, arrival, host, memory):
        return ACCEPT


@dataclass(frozen=True)
class Reject:
    """Reject unconditionally."""

    keyword = "reject"

    def text(self):
        return "reject"

    def run(self, arrival, host, memory):
        return REJECT


TRANSFORMS = (Transform, TransformIf)

# Stages that always end the accept phase
TERMINAL = (Accept, Reject, ForwardStatus)

# Stages allowed in a trig block
TRIG_STAGES = (EmitEvent, RetractEvent)


@dataclass(frozen=True)
class MonitorSpec:
    """
    A class defining a parsed monitor file.

    Attributes:
        stages (tuple):
            The data stages, in order.
        constraint (str):
            The canonical text of the selection constraint (optional).
        trig_period (float):
            The period of the trig block (optional).
        trig_stages (tuple):
            The stages run on the timer.
        source (str):
            The file the monitor was loaded from (not part of equality).
    """

    stages: tuple = ()
    constraint: object = None
    trig_period: object = None
    trig_stages: tuple = ()
    source: object = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _split_line(text, line):
    """
    Split a line into tokens, keeping templates and strings whole.

    A "(" starts a balanced group and a '"' starts a string; both become a
    single token. An unquoted "#" starts a comment.

    Args:
        text (str):
            The line (without its indentation).
        line (int):
            The line number, for errors.

    Returns:
        list:
            The tokens.
    """
    tokens = []
    index = 0
    while index < len(text):
        char = text[index]
        if char.isspace():
            index += 1
            continue
        if char == "#":
            break

        start = index
        depth = 0
        in_string = False
        while index < len(text):
            char = text[index]
            if in_string:
                if char == "\\":
                    index += 1
                elif char == '"':
                    in_string = False
            elif char == '"':
                in_string = True
            elif char == "(":
                depth += 1
            elif char == ")":
                depth -= 1
                if depth < 0:
                    raise ParseError(
                        "unbalanced ')'", position=index, line=line
                    )
            elif char.isspace() and depth == 0:
                break
            elif char == "#" and depth == 0:
                break
            index += 1

        if in_string:
            raise ParseError(
                "unterminated string", position=start, expected="'\"'",
                line=line,
            )
        if depth > 0:
            raise ParseError(
                "unbalanced '('", position=start, expected="')'", line=line
            )
        tokens.append(text[start:index])

    return tokens


class _LineParser:
    """A parser for the operands of one stage line.

    Attributes:
        tokens (list):
            The operand tokens of the line.
        line (int):
            The line number.
        params (dict):
            Parameter values for bare parameter names.
        keyword (str):
            The stage keyword.
    """

    def __init__(self, keyword, tokens, line, params):
        self.keyword = keyword
        self.tokens = list(tokens)
        self.line = line
        self.params = params

    def error(self, reason, expected=None):
        return ParseError(
            f"{self.keyword}: {reason}", expected=expected, line=self.line
        )

    def take(self, what):
        if not self.tokens:
            raise self.error(f"missing {what}", expected=what)
        return self.tokens.pop(0)

    def word(self, expected):
        token = self.take(f"'{expected}'")
        if token != expected:
            raise self.error(f"found {token!r}", expected=f"'{expected}'")

    def path(self):
        token = self.take("a path")
        try:
            parse_path(token)
        except BadPath as error:
            raise BadPath(
                f"{self.keyword}: {error.reason}",
                position=error.position,
                expected=error.expected,
                line=self.line,
            )
        return token

    def comparison(self):
        token = self.take("a comparison")
        if token not in COMPARISONS:
            raise self.error(
                f"unknown comparison {token!r}",
                expected=" ".join(COMPARISONS),
            )
        return token

    def number(self, what="a number"):
        token = self.take(what)
        try:
            return resolve_number(token, self.params)
        except ValueError:
            raise self.error(f"invalid number {token!r}", expected=what)

    def operand(self):
        if self.tokens and self.tokens[0].startswith('"'):
            token = self.tokens.pop(0)
            try:
                value = decode_value(token)
            except ParseError as error:
                raise self.error(error.reason, expected="a string")
            return value
        return self.number("a number or string")

    def symbol(self):
        token = self.take("an event name")
        try:
            return validate_symbol(token)
        except InvalidSymbol as error:
            raise self.error(str(error), expected="an event name")

    def template(self):
        token = self.take("a template")
        placeholder = _REFERENCE.sub("0", token)
        try:
            decode_value(placeholder)
        except ParseError as error:
            raise self.error(
                f"template {token!r} is not value text: {error.reason}",
                expected="a value template",
            )
        return token

    def optional_ttl(self):
        if not self.tokens:
            return None
        self.word("ttl")
        ttl = self.number("a lifetime")
        if not ttl > 0:
            raise self.error(f"lifetime must be positive, got {ttl}")
        return ttl

    def done(self):
        if self.tokens:
            raise self.error(
                f"unexpected {self.tokens[0]!r}", expected="end of line"
            )


def _parse_filter(p):
    return Filter(p.path(), p.comparison(), p.operand())


def _parse_select_closest(p):
    return SelectClosest(p.path(), p.path())


def _parse_range(p):
    path = p.path()
    return Range(path, p.number("a lower bound"), p.number("an upper bound"))


def _parse_emit_event(p):
    return EmitEvent(p.symbol(), p.optional_ttl())


def _parse_retract_event(p):
    return RetractEvent(p.symbol())


def _parse_event_if(p):
    path, op, threshold = p.path(), p.comparison(), p.number("a threshold")
    p.word("set")
    set_name = p.symbol()
    p.word("else")
    p.word("unset")
    return EventIf(path, op, threshold, set_name, p.symbol())


def _parse_forward_status(p):
    return ForwardStatus(p.optional_ttl())


def _parse_rate_limit(p):
    period = p.number("a period")
    if not period > 0:
        raise p.error(f"period must be positive, got {period}")
    return RateLimit(period)


def _parse_transform(p):
    return Transform(p.template())


def _parse_transform_if(p):
    path, op, threshold = p.path(), p.comparison(), p.number("a threshold")
    then_template = p.template()
    p.word("else")
    return TransformIf(path, op, threshold, then_template, p.template())


def _parse_accept(p):
    return Accept()


def _parse_reject(p):
    return Reject()


_STAGE_PARSERS = {
    "filter": _parse_filter,
    "select_closest": _parse_select_closest,
    "range": _parse_range,
    "emit_event": _parse_emit_event,
    "retract_event": _parse_retract_event,
    "event_if": _parse_event_if,
    "forward_status": _parse_forward_status,
    "rate_limit": _parse_rate_limit,
    "transform": _parse_transform,
    "transform_if": _parse_transform_if,
    "accept": _parse_accept,
    "reject": _parse_reject,
}


def parse_stage(text, line=None, params=None):
    """
    Parse one stage line.

    Args:
        text (str):
            The stage text.
        line (int):
            The line number, for errors.
        params (dict):
            Parameter values for bare parameter names.

    Returns:
        Stage:
            The parsed stage.
    """
    tokens = _split_line(text.strip(), line)
    if not tokens:
        raise ParseError("empty stage", expected="a stage", line=line)
    keyword, operands = tokens[0], tokens[1:]
    parser = _STAGE_PARSERS.get(keyword)
    if parser is None:
        raise UnknownStage(
            f"unknown stage {keyword!r}",
            expected=", ".join(sorted(_STAGE_PARSERS)),
            line=line,
        )
    p = _LineParser(keyword, operands, line, params or {})
    stage = parser(p)
    p.done()
    return stage


def parse_monitor_spec(text, params=None, source=None):
    """
    Parse the text of a monitor file.

    Args:
        text (str):
            The monitor text.
        params (dict):
            Parameter values for bare parameter names.
        source (str):
            The file the text came from, for errors.

    Returns:
        MonitorSpec:
            The parsed specification.

    Raises:
        ParseError:
            If a line is malformed (UnknownStage and BadPath are
            subclasses naming the specific problem).
        UnboundParameter:
            If a bare parameter name has no value.
    """
    stages = []
    trig_stages = []
    constraint = None
    trig_period = None
    in_trig = False

    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indented = raw[:1].isspace()

        try:
            if stripped.startswith("constraint:") or stripped.startswith(
                "constraint :"
            ):
                in_trig = False
                if constraint is not None:
                    raise ParseError(
                        "more than one constraint", line=number
                    )
                rule_text = stripped.split(":", 1)[1].split("#", 1)[0]
                try:
                    rule = parse_constraint(rule_text)
                except ParseError as error:
                    raise error.located(line=number)
                constraint = print_constraint(rule)
                continue

            header = _TRIG_HEADER.fullmatch(stripped.split("#", 1)[0].strip())
            if stripped.startswith("trig"):
                if header is None:
                    raise ParseError(
                        f"malformed trig header {stripped!r}",
                        expected="'trig <period>:'",
                        line=number,
                    )
                if trig_period is not None:
                    raise ParseError("more than one trig block", line=number)
                period = _LineParser("trig", [header.group("period")], number,
                                     params or {}).number("a period")
                if not period > 0:
                    raise ParseError(
                        f"trig period must be positive, got {period}",
                        line=number,
                    )
                trig_period = period
                in_trig = True
                continue

            stage = parse_stage(stripped, number, params)
            if in_trig and indented:
                trig_stages.append(stage)
            else:
                in_trig = False
                stages.append(stage)
        except UnboundParameter as error:
            raise UnboundParameter(error.name, source=source)
        except ParseError as error:
            raise error.located(line=number, source=source)

    if not stages and constraint is None and trig_period is None:
        raise ParseError(
            "a monitor needs at least one stage, a constraint or a trig block",
            source=source,
        )
    if trig_period is not None and not trig_stages:
        raise ParseError("trig block has no stages", source=source)

    return MonitorSpec(
        tuple(stages), constraint, trig_period, tuple(trig_stages), source
    )


def print_monitor_spec(spec):
    """
    Print a specification back to monitor file text.

    Args:
        spec (MonitorSpec):
            The specification to print.

    Returns:
        str:
            The monitor text.
    """
    lines = []
    if spec.constraint is not None:
        lines.append(f"constraint: {spec.constraint}")
    for stage in spec.stages:
        lines.append(stage.text())
    if spec.trig_period is not None:
        lines.append(f"trig {format_number(spec.trig_period)}:")
        for stage in spec.trig_stages:
            lines.append(f"    {stage.text()}")
    return "\n".join(lines) + "\n"


def load_monitor(path, params=None):
    """
    Load a monitor file, substituting its parameters.

    Args:
        path (str):
            The path to the monitor file.
        params (dict):
            The parameter values ($NAME references and bare names).

    Returns:
        MonitorSpec:
            The parsed specification.

    Raises:
        OSError:
            If the file cannot be read.
        UnboundParameter:
            If a referenced parameter has no value.
        ParseError:
            If the file is malformed.
    """
    params = dict(params or {})
    with open(path, "r") as file:
        text = file.read()

    # Drop comments before substituting so they may mention anything
    lines = [_strip_comment(line) for line in text.splitlines()]
    text = swap_in_str("\n".join(lines), source=path, **params)
    return parse_monitor_spec(text, params=params, source=path)


def _strip_comment(line):
    """Remove an unquoted "#" comment from a line."""
    in_string = False
    escaped = False
    for index, char in enumerate(line):
        if escaped:
            escaped = False
        elif char == "\\" and in_string:
            escaped = True
        elif char == '"':
            in_string = not in_string
        elif char == "#" and not in_string:
            return line[:index].rstrip()
    return line


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


class CompiledMonitor(MonitorPlugin):
    """
    A class implementing the plug-in contract for a MonitorSpec.

    Attributes:
        spec (MonitorSpec):
            The compiled specification.
        accept_stages (tuple):
            The stages run by accept.
        update_stages (tuple):
            The transforms run by update.
        trig_period (float):
            The period of the trig block (None for no timer).
        delivers (bool):
            Whether any message can get past accept.
    """

    def __init__(self, spec, accept_stages, update_stages, delivers):
        """
        Create the plug-in (use compile_monitor).

        Args:
            spec (MonitorSpec):
                The compiled specification.
            accept_stages (tuple):
                The stages run by accept.
            update_stages (tuple):
                The transforms run by update.
            delivers (bool):
                Whether any message can get past accept.
        """
        self.spec = spec
        self.accept_stages = accept_stages
        self.update_stages = update_stages
        self.trig_period = spec.trig_period
        self.delivers = delivers
        self._memory = {}
        self._arrival = None

    def __repr__(self):
        """Return the debugging representation of the plug-in."""
        where = self.spec.source or "<inline>"
        return f"CompiledMonitor({where})"

    def create(self, host):
        """Install the constraint (if any)."""
        if self.spec.constraint is not None:
            host.set_constraint(self.spec.constraint)
        return True

    def accept(self, host, payload):
        """Run the accept stages until one rejects or accepts."""
        arrival = _Arrival(payload)
        self._arrival = arrival
        for stage in self.accept_stages:
            result = stage.run(arrival, host, self._memory)
            if result is REJECT:
                return False
            if result == ACCEPT:
                break
        return True

    def update(self, host, payload):
        """Apply the transforms."""
        arrival = self._arrival
        if arrival is None or arrival.payload is not payload:
            arrival = _Arrival(payload)
        for stage in self.update_stages:
            arrival.payload = stage.apply(arrival)
        self._arrival = None
        return arrival.payload

    def trig(self, host):
        """Run the trig stages."""
        arrival = _Arrival(())
        for stage in self.spec.trig_stages:
            stage.run(arrival, host, self._memory)


def compile_monitor(spec):
    """
    Compile a specification into a plug-in.

    Args:
        spec (MonitorSpec):
            The specification to compile.

    Returns:
        CompiledMonitor:
            A fresh plug-in (each connection needs its own instance).

    Raises:
        CompileError:
            If the stages cannot work in the order given.
    """
    where = f"{spec.source}: " if spec.source else ""
    accept_stages = []
    update_stages = []
    selected = False
    terminated = None

    for index, stage in enumerate(spec.stages, start=1):
        if isinstance(stage, TRANSFORMS):
            if isinstance(terminated, (Reject, ForwardStatus)):
                raise CompileError(
                    f"{where}stage {index} ({stage.keyword}) can never run "
                    f"after {terminated.keyword}"
                )
            templates = (
                [stage.template]
                if isinstance(stage, Transform)
                else [stage.then_template, stage.else_template]
            )
            uses_item = any(
                "item" in template_references(template)
                for template in templates
            )
            if uses_item and not selected:
                raise CompileError(
                    f"{where}stage {index} ({stage.keyword}) references "
                    "$item before any select_closest"
                )
            update_stages.append(stage)
            continue

        if update_stages:
            raise CompileError(
                f"{where}stage {index} ({stage.keyword}) follows a transform; "
                "transforms must come last"
            )
        if terminated is not None:
            raise CompileError(
                f"{where}stage {index} ({stage.keyword}) can never run "
                f"after {terminated.keyword}"
            )
        if isinstance(stage, SelectClosest):
            selected = True
        if isinstance(stage, TERMINAL):
            terminated = stage
        accept_stages.append(stage)

    for stage in spec.trig_stages:
        if not isinstance(stage, TRIG_STAGES):
            raise CompileError(
                f"{where}{stage.keyword} cannot run in a trig block, only "
                "emit_event and retract_event can"
            )

    delivers = not isinstance(terminated, (Reject, ForwardStatus))
    return CompiledMonitor(
        spec, tuple(accept_stages), tuple(update_stages), delivers
    )
