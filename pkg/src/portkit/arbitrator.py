"""A module containing the port arbitrator.

Every input port owns an arbitrator combining

    - one optional monitor per incoming connection,
    - one event container shared by all those monitors,
    - one selection constraint per incoming connection (default true),
    - a selector gating each arrival.

An arrival is processed in four serialized steps:

    1. expired events are purged,
    2. the connection's monitor runs accept (which may set/unset events or
       replace its constraint),
    3. the connection's constraint is evaluated against the resulting
       snapshot of active events,
    4. on success the monitor runs update and the message is delivered.

A rejection at step 2 never consults the constraint, so the two causes are
logged with different stage labels.

Example:
    outcome, delivered = arbitrator.arbitrate("C2", message)
    if outcome.delivered:
        ...
"""

import enum
import threading

from portkit.actionlog import LineKind
from portkit.constraint import (
    ConstraintTable,
    check_consistency,
    evaluate,
    format_assignment,
    parse_constraint,
    print_constraint,
)
from portkit.errors import (
    CallbackFault,
    ConsistencyError,
    UnknownConnection,
)
from portkit.events import EventContainer
from portkit.logger import Logger
from portkit.monitor import HostApi, attach

# Get the logger
logger = Logger()


class Stage(enum.Enum):
    """Where an arrival ended up."""

    DELIVERED = "delivered"
    REJECTED_BY_MONITOR = "monitor"
    REJECTED_BY_CONSTRAINT = "constraint"
    FAULT = "fault"


class ArrivalOutcome:
    """
    A class describing what happened to one arriving message.

    Attributes:
        connection (str):
            The label of the arriving connection.
        stage (Stage):
            Where the arrival ended up.
        snapshot (frozenset):
            The active events the constraint was evaluated against (empty
            when the constraint was not consulted).
        fault (CallbackFault):
            The callback fault, for FAULT outcomes.
    """

    def __init__(self, connection, stage, snapshot=frozenset(), fault=None):
        """
        Create the outcome.

        Args:
            connection (str):
                The label of the arriving connection.
            stage (Stage):
                Where the arrival ended up.
            snapshot (frozenset):
                The active events the constraint was evaluated against.
            fault (CallbackFault):
                The callback fault, for FAULT outcomes.
        """
        self.connection = connection
        self.stage = stage
        self.snapshot = frozenset(snapshot)
        self.fault = fault

    def __repr__(self):
        """Return the debugging representation of the outcome."""
        return (
            f"ArrivalOutcome({self.connection!r}, {self.stage.value}, "
            f"{sorted(self.snapshot)})"
        )

    @property
    def delivered(self):
        """Return whether the message was delivered."""
        return self.stage is Stage.DELIVERED

    def trace_payload(self, payload):
        """Build the payload of the DELIVER/DISCARD trace line."""
        return (self.stage.value, tuple(sorted(self.snapshot)), payload)


class ConsistencyReport:
    """
    A class holding the result of an arbitrator audit.

    Attributes:
        port (str):
            The name of the audited port.
        violations (list):
            The overlapping pairs of constraints.
        rules (list):
            The (connection, constraint text) pairs audited.
    """

    def __init__(self, port, violations, rules):
        """
        Create the report.

        Args:
            port (str):
                The name of the audited port.
            violations (list):
                The overlapping pairs of constraints.
            rules (list):
                The (connection, constraint text) pairs audited.
        """
        self.port = port
        self.violations = violations
        self.rules = rules

    @property
    def clean(self):
        """Return whether the rules are pairwise exclusive."""
        return not self.violations

    def lines(self):
        """Return the report as printable lines."""
        lines = [f"{self.port}:"]
        for connection, rule in self.rules:
            lines.append(f"  {connection}: {rule}")
        if self.clean:
            lines.append("  consistency: OK")
        for violation in self.violations:
            lines.append(
                f"  overlap {violation.first}/{violation.second} witness "
                f"{format_assignment(violation.witness) or '(none)'}"
            )
        return lines

    def __str__(self):
        """Return the report as text."""
        return "\n".join(self.lines())


class Arbitrator:
    """
    A class defining the arbitrator of an input port.

    Attributes:
        port (PortId):
            The input port arbitrated.
        clock (Clock):
            The bus clock.
        log (ActionLog):
            The log arrivals are written to.
        container (EventContainer):
            The events shared by the port's monitors.
        constraints (ConstraintTable):
            The selection constraint of each incoming connection.
        monitors (dict):
            The MonitorHandle of each monitored connection.
    """

    def __init__(self, port, clock, log=None):
        """
        Create the arbitrator.

        Args:
            port (PortId):
                The input port arbitrated.
            clock (Clock):
                The bus clock.
            log (ActionLog):
                The log arrivals are written to (optional).
        """
        self.port = port
        self.clock = clock
        self.log = log
        self.container = EventContainer(clock, log)
        self.constraints = ConstraintTable()
        self.monitors = {}
        self._lock = threading.RLock()

    def __repr__(self):
        """Return the debugging representation of the arbitrator."""
        return f"Arbitrator({self.port}, {len(self.constraints)} connections)"

    @property
    def connections(self):
        """Return the labels of the incoming connections in order."""
        return [connection for connection, _ in self.constraints.items()]

    def register(self, connection):
        """
        Register an incoming connection with the default constraint.

        Args:
            connection (str):
                The connection label.
        """
        self.constraints.register(connection)

    def attach_monitor(self, connection, plugin):
        """
        Attach a monitor to a registered connection.

        Args:
            connection (str):
                The connection label.
            plugin (MonitorPlugin):
                The plug-in to run.

        Returns:
            MonitorHandle:
                The running monitor.

        Raises:
            UnknownConnection:
                If the connection is not registered here.
            AlreadyAttached:
                If the connection already carries a monitor.
            MonitorInitFailed:
                If the plug-in's create callback fails.
        """
        self._check(connection)
        with self._lock:
            host = HostApi(connection, self.clock, self)
            handle = attach(
                connection, plugin, host, self.monitors.get(connection)
            )
            self.monitors[connection] = handle
            return handle

    def remove(self, connection):
        """
        Detach a connection's monitor and forget the connection.

        Events owned by the connection stay in the container.

        Args:
            connection (str):
                The connection label.
        """
        with self._lock:
            handle = self.monitors.pop(connection, None)
            if handle is not None:
                handle.detach()
            self.constraints.remove(connection)

    def _check(self, connection):
        """Ensure a connection is registered."""
        if connection not in self.constraints:
            raise UnknownConnection(
                f"{connection} is not connected to {self.port}"
            )

    def set_constraint_for(self, connection, text):
        """
        Replace the selection constraint of a connection.

        The text is parsed before anything changes, so a malformed rule
        leaves the previous one in place. The new rule applies from the next
        arrival.

        Args:
            connection (str):
                The connection label.
            text (str):
                The constraint text.

        Raises:
            ParseError:
                If the text is malformed.
            UnknownConnection:
                If the connection is not registered here.
        """
        self._check(connection)
        rule = parse_constraint(text) if isinstance(text, str) else text
        self.constraints.set(connection, rule)

    def constraint_text(self, connection):
        """Return the canonical text of a connection's constraint."""
        return print_constraint(self.constraints.get(connection))

    def arbitrate(self, connection, message):
        """
        Decide whether an arriving message is delivered.

        Args:
            connection (str):
                The label of the arriving connection.
            message (Message):
                The arriving message.

        Returns:
            tuple:
                The ArrivalOutcome and the delivered Message (None when the
                message was discarded).

        Raises:
            UnknownConnection:
                If the connection is not registered here.
        """
        self._check(connection)
        with self._lock:
            # (1) Forget expired events before anyone looks at them
            self.container.purge()

            # (2) Let the monitor accept or reject the data
            handle = self.monitors.get(connection)
            try:
                if handle is not None and not handle.run_accept(message):
                    outcome = ArrivalOutcome(
                        connection, Stage.REJECTED_BY_MONITOR
                    )
                    return self._finish(outcome, message, None)

                # (3) Gate the arrival with the connection's constraint
                snapshot = self.container.snapshot()
                rule = self.constraints.get(connection)
                if not evaluate(rule, snapshot):
                    if handle is not None:
                        handle.reject()
                    outcome = ArrivalOutcome(
                        connection, Stage.REJECTED_BY_CONSTRAINT, snapshot
                    )
                    return self._finish(outcome, message, None)

                # (4) Transform and deliver
                delivered = (
                    handle.run_update(message)
                    if handle is not None
                    else message
                )
            except CallbackFault as fault:
                print(f"{connection}: {fault}")
                outcome = ArrivalOutcome(connection, Stage.FAULT, fault=fault)
                return self._finish(outcome, message, None)

            outcome = ArrivalOutcome(connection, Stage.DELIVERED, snapshot)
            return self._finish(outcome, message, delivered)

    def _finish(self, outcome, message, delivered):
        """Log an arrival and return its result."""
        if self.log is not None:
            if outcome.delivered:
                self.log.append(
                    self.clock.now,
                    LineKind.DELIVER,
                    outcome.connection,
                    outcome.trace_payload(delivered.payload),
                )
            else:
                self.log.append(
                    self.clock.now,
                    LineKind.DISCARD,
                    outcome.connection,
                    outcome.trace_payload(message.payload),
                )
        return outcome, delivered

    def delivering_connections(self):
        """
        Return the connections whose monitors can deliver data.

        Connections whose monitor only feeds events (it rejects every
        message) never compete for the port, so the audit leaves them out.
        """
        return [
            connection
            for connection in self.connections
            if connection not in self.monitors
            or getattr(self.monitors[connection].plugin, "delivers", True)
        ]

    def audit(self, strict=False):
        """
        Check the port's constraints for pairwise exclusivity.

        Only connections that can deliver data take part in the check.

        Args:
            strict (bool):
                Raise instead of warning when constraints overlap.

        Returns:
            ConsistencyReport:
                The audit result.

        Raises:
            ConsistencyError:
                In strict mode, if any pair of constraints overlaps.
            TooManyVariables:
                If the constraints mention too many symbols.
        """
        competing = set(self.delivering_connections())
        items = [
            (connection, rule)
            for connection, rule in self.constraints.items()
            if connection in competing
        ]
        violations = check_consistency(items)
        report = ConsistencyReport(
            str(self.port),
            violations,
            [
                (connection, print_constraint(rule))
                for connection, rule in items
            ],
        )
        if violations and strict:
            raise ConsistencyError(violations)
        for violation in violations:
            logger.warn(f"{self.port}: {violation}")
        return report
