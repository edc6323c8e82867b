"""A module containing the single-process message bus.

The bus owns the ports of every module, the connections between them, one
arbitrator per input port and the clock. Writing to an output port fans the
value out over every connection from that port, in connection creation
order; each arrival is run through the destination's arbitrator (monitor,
constraint, update) and delivered messages are handed to the destination
port's handler.

All writes and clock advances go through one re-entrant lock so their
effects are applied in a single total order, whichever thread submits them.
A write made by a handler while a fan-out is running is queued and fanned
out once the running one has reached every connection.

Example:
    bus = Bus()
    face = bus.add_port("FaceDetector", "face", Direction.OUT)
    gaze = bus.add_port("HeadControl", "gaze", Direction.IN, handler)
    bus.connect(face, gaze, label="C1")
    bus.write(face, (0.1, 0.2, 0.3))
"""

import collections
import enum
import itertools
import threading

from portkit.actionlog import ActionLog
from portkit.arbitrator import Arbitrator
from portkit.clock import Clock
from portkit.errors import DirectionMismatch, UnknownConnection, UnknownPort
from portkit.logger import Logger
from portkit.value import check_value

# Get the logger
logger = Logger()


class Direction(enum.Enum):
    """The direction of a port."""

    IN = "in"
    OUT = "out"


class PortId:
    """
    A class identifying a port.

    Attributes:
        module (str):
            The name of the owning module.
        name (str):
            The name of the port.
        direction (Direction):
            Whether the port sends or receives.
    """

    __slots__ = ("module", "name", "direction")

    def __init__(self, module, name, direction):
        """
        Create the port id.

        Args:
            module (str):
                The name of the owning module.
            name (str):
                The name of the port.
            direction (Direction):
                Whether the port sends or receives.
        """
        self.module = module
        self.name = name
        self.direction = Direction(direction)

    def __str__(self):
        """Return the "module.port" form of the id."""
        return f"{self.module}.{self.name}"

    def __repr__(self):
        """Return the debugging representation of the id."""
        return (
            f"PortId({self.module!r}, {self.name!r}, "
            f"{self.direction.value})"
        )

    def __eq__(self, other):
        """Compare two port ids."""
        if not isinstance(other, PortId):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        """Hash the port id."""
        return hash(self._key())

    def _key(self):
        """Return the identifying tuple."""
        return (self.module, self.name, self.direction)


class Message:
    """
    A class defining one message travelling over a connection.

    Messages are immutable: replace returns a new message.

    Attributes:
        payload (Value):
            The carried value.
        source (str):
            The label of the connection carrying it.
        stamp (float):
            The virtual time it was written.
    """

    __slots__ = ("_payload", "_source", "_stamp")

    def __init__(self, payload, source, stamp):
        """
        Create the message.

        Args:
            payload (Value):
                The carried value.
            source (str):
                The label of the connection carrying it.
            stamp (float):
                The virtual time it was written.
        """
        object.__setattr__(self, "_payload", payload)
        object.__setattr__(self, "_source", source)
        object.__setattr__(self, "_stamp", stamp)

    def __setattr__(self, name, value):
        """Refuse to mutate the message."""
        raise AttributeError("messages are immutable")

    def __eq__(self, other):
        """Compare two messages."""
        if not isinstance(other, Message):
            return NotImplemented
        return (self.payload, self.source, self.stamp) == (
            other.payload,
            other.source,
            other.stamp,
        )

    def __hash__(self):
        """Hash the message."""
        return hash((self.payload, self.source, self.stamp))

    def __repr__(self):
        """Return the debugging representation of the message."""
        return (
            f"Message({self.payload!r}, source={self.source!r}, "
            f"stamp={self.stamp!r})"
        )

    @property
    def payload(self):
        """Return the carried value."""
        return self._payload

    @property
    def source(self):
        """Return the label of the carrying connection."""
        return self._source

    @property
    def stamp(self):
        """Return the time the message was written."""
        return self._stamp

    def replace(self, payload):
        """Return a copy of the message with a new payload."""
        return Message(payload, self.source, self.stamp)


class Port:
    """
    A class defining a registered port.

    Attributes:
        id (PortId):
            The port's identity.
        handler (callable):
            For input ports, the function receiving delivered messages.
        arbitrator (Arbitrator):
            For input ports, the port's arbitrator.
    """

    def __init__(self, port_id, handler=None, arbitrator=None):
        """
        Create the port.

        Args:
            port_id (PortId):
                The port's identity.
            handler (callable):
                The function receiving delivered messages (input ports).
            arbitrator (Arbitrator):
                The port's arbitrator (input ports).
        """
        self.id = port_id
        self.handler = handler
        self.arbitrator = arbitrator


class Connection:
    """
    A class defining a connection between two ports.

    Attributes:
        id (int):
            The unique id of the connection on its bus.
        label (str):
            The display label (e.g. "C1").
        src (PortId):
            The output port.
        dst (PortId):
            The input port.
        last_stamp (float):
            The stamp of the last message written over the connection.
    """

    def __init__(self, connection_id, label, src, dst):
        """
        Create the connection.

        Args:
            connection_id (int):
                The unique id of the connection.
            label (str):
                The display label.
            src (PortId):
                The output port.
            dst (PortId):
                The input port.
        """
        self.id = connection_id
        self.label = label
        self.src = src
        self.dst = dst
        self.last_stamp = None

    def __repr__(self):
        """Return the debugging representation of the connection."""
        return f"Connection({self.label}: {self.src} -> {self.dst})"


class DeliveryReport:
    """
    A class listing what happened to a write on each connection.

    Attributes:
        outcomes (list):
            The ArrivalOutcome of each connection, in fan-out order.
        delivered (list):
            The (connection label, Message) pairs actually delivered.
    """

    def __init__(self):
        """Create an empty report."""
        self.outcomes = []
        self.delivered = []

    def __len__(self):
        """Return the number of connections the write went over."""
        return len(self.outcomes)

    def __iter__(self):
        """Iterate over the outcomes."""
        return iter(self.outcomes)

    def outcome(self, label):
        """Return the outcome on one connection."""
        for outcome in self.outcomes:
            if outcome.connection == label:
                return outcome
        raise UnknownConnection(f"{label} was not part of this write")


class Bus:
    """
    A class defining the single-process message bus.

    Attributes:
        clock (Clock):
            The clock shared by everything on the bus.
        log (ActionLog):
            The trace of deliveries, discards and events.
        ports (dict):
            The registered Port of each PortId.
        connections (dict):
            The Connection of each label, in creation order.
    """

    def __init__(self, clock=None, log=None):
        """
        Create the bus.

        Args:
            clock (Clock):
                The clock to use (a new virtual clock if None).
            log (ActionLog):
                The log to write to (a new log if None).
        """
        self.clock = clock if clock is not None else Clock()
        self.log = log if log is not None else ActionLog()
        self.ports = {}
        self.connections = {}
        self._ids = itertools.count(1)
        self._lock = threading.RLock()
        self._queue = collections.deque()
        self._delivering = False

    def add_port(self, module, name, direction, handler=None):
        """
        Register a port.

        Args:
            module (str):
                The name of the owning module.
            name (str):
                The name of the port.
            direction (Direction):
                Whether the port sends or receives.
            handler (callable):
                For input ports, called with each delivered Message.

        Returns:
            PortId:
                The id of the new port.
        """
        port_id = PortId(module, name, direction)
        with self._lock:
            if port_id in self.ports:
                raise ValueError(f"port {port_id} is already registered")
            arbitrator = None
            if port_id.direction is Direction.IN:
                arbitrator = Arbitrator(port_id, self.clock, self.log)
            self.ports[port_id] = Port(port_id, handler, arbitrator)
        return port_id

    def find_port(self, module, name, direction=None):
        """
        Look up a port by module and port name.

        Args:
            module (str):
                The name of the owning module.
            name (str):
                The name of the port.
            direction (Direction):
                Restrict the search to one direction (optional).

        Returns:
            PortId:
                The matching port.

        Raises:
            UnknownPort:
                If there is no such port.
        """
        for port_id in self.ports:
            if port_id.module == module and port_id.name == name:
                if direction is None or port_id.direction is Direction(
                    direction
                ):
                    return port_id
        raise UnknownPort(f"no port {module}.{name}")

    def _port(self, port_id):
        """Return the registered port of an id."""
        try:
            return self.ports[port_id]
        except KeyError:
            raise UnknownPort(f"no port {port_id}")

    def arbitrator(self, port_id):
        """Return the arbitrator of an input port."""
        port = self._port(port_id)
        if port.arbitrator is None:
            raise DirectionMismatch(f"{port_id} is not an input port")
        return port.arbitrator

    def connect(self, src, dst, monitor=None, label=None):
        """
        Connect an output port to an input port.

        Args:
            src (PortId):
                The output port.
            dst (PortId):
                The input port.
            monitor (MonitorPlugin):
                A plug-in to attach to the connection (optional).
            label (str):
                The display label (defaults to "C<id>").

        Returns:
            str:
                The label of the new connection.

        Raises:
            UnknownPort:
                If either port is not registered.
            DirectionMismatch:
                If src is not an output or dst is not an input.
            MonitorInitFailed:
                If the monitor's create callback fails; the connection is
                rolled back.
        """
        with self._lock:
            self._port(src)
            self._port(dst)
            if src.direction is not Direction.OUT:
                raise DirectionMismatch(f"{src} is not an output port")
            if dst.direction is not Direction.IN:
                raise DirectionMismatch(f"{dst} is not an input port")

            connection_id = next(self._ids)
            label = label if label is not None else f"C{connection_id}"
            if label in self.connections:
                raise ValueError(f"connection label {label} is already used")

            arbitrator = self.arbitrator(dst)
            arbitrator.register(label)
            if monitor is not None:
                try:
                    arbitrator.attach_monitor(label, monitor)
                except Exception:
                    arbitrator.remove(label)
                    raise

            self.connections[label] = Connection(
                connection_id, label, src, dst
            )
            return label

    def disconnect(self, label):
        """
        Remove a connection, detaching its monitor first.

        Args:
            label (str):
                The label of the connection.

        Raises:
            UnknownConnection:
                If there is no such connection.
        """
        with self._lock:
            connection = self.connections.pop(label, None)
            if connection is None:
                raise UnknownConnection(f"no connection {label}")
            self.arbitrator(connection.dst).remove(label)

    def monitor(self, label):
        """Return the MonitorHandle of a connection (None if unmonitored)."""
        connection = self.connections.get(label)
        if connection is None:
            raise UnknownConnection(f"no connection {label}")
        return self.arbitrator(connection.dst).monitors.get(label)

    @logger.count("write")
    def write(self, src, value):
        """
        Write a value to an output port.

        Args:
            src (PortId):
                The output port.
            value (Value):
                The value to send.

        Returns:
            DeliveryReport:
                The outcome on every connection from src. A write queued
                from a handler gets its report filled in once it has been
                fanned out.

        Raises:
            UnknownPort:
                If src is not registered.
            DirectionMismatch:
                If src is not an output port.
        """
        check_value(value)
        report = DeliveryReport()
        with self._lock:
            self._port(src)
            if src.direction is not Direction.OUT:
                raise DirectionMismatch(f"cannot write to input port {src}")

            self._queue.append((src, value, report))
            if self._delivering:
                return report

            self._delivering = True
            try:
                while self._queue:
                    self._fan_out(*self._queue.popleft())
            finally:
                self._delivering = False
                self._queue.clear()
        return report

    def _fan_out(self, src, value, report):
        """Run one write over every connection from its port."""
        now = self.clock.now
        fan_out = [
            connection
            for connection in self.connections.values()
            if connection.src == src
        ]
        for connection in fan_out:
            message = Message(value, connection.label, now)
            connection.last_stamp = now
            port = self._port(connection.dst)
            outcome, delivered = port.arbitrator.arbitrate(
                connection.label, message
            )
            report.outcomes.append(outcome)
            if delivered is not None:
                report.delivered.append((connection.label, delivered))
                if port.handler is not None:
                    port.handler(delivered)

    def advance(self, dt):
        """
        Move the clock forward, firing due trigs and expiring events.

        Args:
            dt (float):
                The step in seconds, nonnegative.

        Returns:
            float:
                The new time.
        """
        with self._lock:
            return self.clock.advance(dt)

    def advance_to(self, target):
        """
        Move the clock forward to an absolute time.

        Args:
            target (float):
                The time to move to.

        Returns:
            float:
                The new time.
        """
        with self._lock:
            return self.clock.advance_to(target)

    def audit(self, strict=False):
        """
        Audit the constraints of every input port that has connections.

        Args:
            strict (bool):
                Raise on the first port with overlapping constraints.

        Returns:
            list:
                The ConsistencyReport of each audited port.
        """
        reports = []
        for port in self.ports.values():
            if port.arbitrator is not None and port.arbitrator.connections:
                reports.append(port.arbitrator.audit(strict=strict))
        return reports
