"""A module containing the port monitor runtime.

A port monitor is a plug-in attached to one connection. It follows a fixed
life cycle:

    Created --create()--> Waiting
    Waiting --data--> Accepting --accept() false--> Waiting
                      Accepting --accept() true--> Updating
                      Updating --update()--> Waiting
    Waiting --timer--> Trigged --trig()--> Waiting
    Waiting --disconnect--> Destroyed (destroy() runs once)

Plug-ins subclass MonitorPlugin and override the callbacks they need; the
defaults accept everything unchanged. Every callback receives a HostApi
scoped to its connection, through which it can read the clock and (when the
destination port is arbitrated) set and unset events and replace its own
selection constraint.

Hand-coded plug-ins can be registered under a name with register_plugin so
manifests can refer to them as "native:<name>".

Example:
    @register_plugin("certainty")
    class CertaintyFilter(MonitorPlugin):
        def accept(self, host, payload):
            return field(payload, "certainty") >= 0.8
"""

import enum

from portkit.errors import (
    AlreadyAttached,
    CallbackFault,
    MonitorInitFailed,
)
from portkit.logger import Logger
from portkit.value import check_value, resolve_path

# Get the logger
logger = Logger()

# The registry of native plug-ins
_PLUGINS = {}


class MonitorState(enum.Enum):
    """The states of a port monitor."""

    CREATED = "created"
    WAITING = "waiting"
    ACCEPTING = "accepting"
    UPDATING = "updating"
    TRIGGED = "trigged"
    DESTROYED = "destroyed"


# The legal state transitions
TRANSITIONS = {
    MonitorState.CREATED: {MonitorState.WAITING},
    MonitorState.WAITING: {
        MonitorState.ACCEPTING,
        MonitorState.TRIGGED,
        MonitorState.DESTROYED,
    },
    MonitorState.ACCEPTING: {MonitorState.WAITING, MonitorState.UPDATING},
    MonitorState.UPDATING: {MonitorState.WAITING},
    MonitorState.TRIGGED: {MonitorState.WAITING},
    MonitorState.DESTROYED: set(),
}


class MonitorPlugin:
    """
    The base class of port monitor plug-ins.

    The default callbacks behave like an empty monitor script: create
    succeeds, every message is accepted and passed on unchanged, and trig
    and destroy do nothing.

    Attributes:
        trig_period (float):
            The interval between trig calls, None for no timer.
        delivers (bool):
            False for plug-ins that reject every message (event feeders);
            consistency audits leave their connections out.
    """

    trig_period = None
    delivers = True

    def create(self, host):
        """
        Initialise the plug-in.

        Args:
            host (HostApi):
                The host API of the connection.

        Returns:
            bool:
                Whether initialisation succeeded.
        """
        return True

    def accept(self, host, payload):
        """
        Decide whether to accept a payload.

        The payload is immutable so accept can only read it.

        Args:
            host (HostApi):
                The host API of the connection.
            payload (Value):
                The arriving payload.

        Returns:
            bool:
                Whether to accept it.
        """
        return True

    def update(self, host, payload):
        """
        Transform an accepted payload.

        Args:
            host (HostApi):
                The host API of the connection.
            payload (Value):
                The accepted payload.

        Returns:
            Value:
                The payload to deliver (None keeps the original).
        """
        return payload

    def trig(self, host):
        """
        Run the periodic callback.

        Args:
            host (HostApi):
                The host API of the connection.
        """

    def destroy(self, host):
        """
        Release the plug-in.

        Args:
            host (HostApi):
                The host API of the connection.
        """


def register_plugin(name):
    """
    Register a native plug-in class under a name.

    Args:
        name (str):
            The name manifests use ("native:<name>").

    Returns:
        function:
            The class decorator.
    """

    def decorator(cls):
        if name in _PLUGINS and _PLUGINS[name] is not cls:
            raise ValueError(f"a plug-in named {name!r} already exists")
        _PLUGINS[name] = cls
        return cls

    return decorator


def get_plugin(name, **options):
    """
    Instantiate a registered native plug-in.

    Args:
        name (str):
            The registered name.
        **options:
            Keyword arguments for the plug-in's constructor.

    Returns:
        MonitorPlugin:
            The new plug-in instance.

    Raises:
        KeyError:
            If no plug-in is registered under the name.
    """
    try:
        cls = _PLUGINS[name]
    except KeyError:
        raise KeyError(
            f"no native plug-in named {name!r} "
            f"(known: {', '.join(sorted(_PLUGINS)) or 'none'})"
        )
    return cls(**options)


def registered_plugins():
    """Return the names of the registered native plug-ins."""
    return sorted(_PLUGINS)


class HostApi:
    """
    A class giving a monitor's callbacks access to their host.

    Every operation is scoped to the monitor's own connection: events are
    set and unset on its behalf and set_constraint replaces its own rule.

    Attributes:
        connection (str):
            The label of the connection.
        clock (Clock):
            The bus clock.
        arbitrator (Arbitrator):
            The arbitrator of the destination port.
    """

    def __init__(self, connection, clock, arbitrator):
        """
        Create the host API.

        Args:
            connection (str):
                The label of the connection.
            clock (Clock):
                The bus clock.
            arbitrator (Arbitrator):
                The arbitrator of the destination port.
        """
        self.connection = connection
        self.clock = clock
        self.arbitrator = arbitrator

    def now(self):
        """Return the current time in seconds."""
        return self.clock.now

    def read(self, payload, path="."):
        """Read part of a payload with a structured access path."""
        return resolve_path(payload, path)

    def set_event(self, name, lifetime=None):
        """Insert (or refresh) an event owned by this connection."""
        self.arbitrator.container.set_event(name, self.connection, lifetime)

    def unset_event(self, name):
        """Remove this connection's record of an event."""
        return self.arbitrator.container.unset_event(name, self.connection)

    def is_active(self, name):
        """Return whether an event is active in the container."""
        return self.arbitrator.container.is_active(name)

    def set_constraint(self, text):
        """Replace this connection's selection constraint."""
        self.arbitrator.set_constraint_for(self.connection, text)


class MonitorHandle:
    """
    A class managing one plug-in attached to one connection.

    Attributes:
        connection (str):
            The label of the connection.
        plugin (MonitorPlugin):
            The plug-in implementation.
        host (HostApi):
            The host API handed to the callbacks.
        state (MonitorState):
            The current life cycle state.
        trig_period (float):
            The interval between trig calls, None for no timer.
        history (list):
            The names of the callbacks run so far, in order.
    """

    def __init__(self, connection, plugin, host):
        """
        Create the handle (use attach to start the monitor).

        Args:
            connection (str):
                The label of the connection.
            plugin (MonitorPlugin):
                The plug-in implementation.
            host (HostApi):
                The host API handed to the callbacks.
        """
        self.connection = connection
        self.plugin = plugin
        self.host = host
        self.state = MonitorState.CREATED
        self.trig_period = getattr(plugin, "trig_period", None)
        self.history = []
        self._timer = None

        if self.trig_period is not None and not self.trig_period > 0:
            raise ValueError(
                f"trig period must be positive, got {self.trig_period}"
            )

    def __repr__(self):
        """Return the debugging representation of the handle."""
        return (
            f"MonitorHandle({self.connection!r}, "
            f"{type(self.plugin).__name__}, {self.state.value})"
        )

    @property
    def attached(self):
        """Return whether the monitor is running."""
        return self.state not in (
            MonitorState.CREATED,
            MonitorState.DESTROYED,
        )

    def _move(self, state):
        """Transition to a new state, enforcing the life cycle."""
        if state not in TRANSITIONS[self.state]:
            raise RuntimeError(
                f"illegal monitor transition {self.state.value} -> "
                f"{state.value} on {self.connection}"
            )
        self.state = state

    def _call(self, name, *args):
        """Run a callback, wrapping any error in a CallbackFault."""
        self.history.append(name)
        try:
            return getattr(self.plugin, name)(self.host, *args)
        except Exception as error:
            logger.increment("fault")
            raise CallbackFault(name, error)

    def start(self):
        """
        Run the create callback and start the trig timer.

        Raises:
            MonitorInitFailed:
                If create returns a false value or raises.
        """
        try:
            ok = self._call("create")
        except CallbackFault as fault:
            self.state = MonitorState.DESTROYED
            raise MonitorInitFailed(
                f"monitor on {self.connection} failed to start: {fault}"
            )
        if not ok:
            self.state = MonitorState.DESTROYED
            raise MonitorInitFailed(
                f"monitor on {self.connection} refused to start"
            )
        self._move(MonitorState.WAITING)

        if self.trig_period is not None:
            self._timer = self.host.clock.every(self.trig_period, self.on_trig)

    def run_accept(self, message):
        """
        Run the accept callback for an arriving message.

        On a false answer (or a fault) the monitor returns to Waiting; on a
        true answer it stays in Accepting until run_update or reject is
        called.

        Args:
            message (Message):
                The arriving message.

        Returns:
            bool:
                Whether the plug-in accepted the message.

        Raises:
            CallbackFault:
                If the callback raised.
        """
        self._move(MonitorState.ACCEPTING)
        try:
            ok = bool(self._call("accept", message.payload))
        except CallbackFault:
            self._move(MonitorState.WAITING)
            raise
        if not ok:
            self._move(MonitorState.WAITING)
        return ok

    def reject(self):
        """Return to Waiting after an accepted message was not delivered."""
        if self.state is MonitorState.ACCEPTING:
            self._move(MonitorState.WAITING)

    def run_update(self, message):
        """
        Run the update callback for an accepted message.

        Args:
            message (Message):
                The accepted message.

        Returns:
            Message:
                The message to deliver (possibly with a new payload).

        Raises:
            CallbackFault:
                If the callback raised or returned something that is not a
                Value.
        """
        self._move(MonitorState.UPDATING)
        try:
            payload = self._call("update", message.payload)
            if payload is not None:
                try:
                    check_value(payload)
                except (TypeError, ValueError) as error:
                    raise CallbackFault("update", error)
        finally:
            self._move(MonitorState.WAITING)
        if payload is None:
            return message
        return message.replace(payload)

    def on_data(self, message):
        """
        Run accept and (if accepted) update for a message.

        Args:
            message (Message):
                The arriving message.

        Returns:
            Message:
                The (possibly transformed) message, None if discarded.

        Raises:
            CallbackFault:
                If a callback raised; the monitor stays attached.
        """
        if not self.run_accept(message):
            return None
        return self.run_update(message)

    def on_trig(self):
        """Run the trig callback (faults are logged, not raised)."""
        if self.state is not MonitorState.WAITING:
            return
        self._move(MonitorState.TRIGGED)
        logger.increment("trig")
        try:
            self._call("trig")
        except CallbackFault as fault:
            print(f"{self.connection}: {fault}")
        finally:
            self._move(MonitorState.WAITING)

    def detach(self):
        """Stop the monitor, running destroy exactly once."""
        if self.state is MonitorState.DESTROYED:
            return
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        self.state = MonitorState.DESTROYED
        try:
            self._call("destroy")
        except CallbackFault as fault:
            print(f"{self.connection}: {fault}")


def attach(connection, plugin, host, existing=None):
    """
    Attach a plug-in to a connection and start it.

    Args:
        connection (str):
            The label of the connection.
        plugin (MonitorPlugin):
            The plug-in implementation.
        host (HostApi):
            The host API for the connection.
        existing (MonitorHandle):
            The monitor already on the connection (if any).

    Returns:
        MonitorHandle:
            The running monitor.

    Raises:
        AlreadyAttached:
            If the connection already carries a running monitor.
        MonitorInitFailed:
            If the plug-in's create callback fails.
    """
    if existing is not None and existing.attached:
        raise AlreadyAttached(f"{connection} already carries a monitor")
    handle = MonitorHandle(connection, plugin, host)
    handle.start()
    return handle


@register_plugin("passthrough")
class Passthrough(MonitorPlugin):
    """A plug-in with the default callbacks, delivering everything."""


@register_plugin("heartbeat")
class Heartbeat(MonitorPlugin):
    """
    A watchdog plug-in keeping an event alive while its timer runs.

    Every trig (re)sets the event with a lifetime of one period, so the
    event stays active exactly as long as the trig keeps firing. Data passes
    through unchanged.

    Attributes:
        event (str):
            The watchdog event.
        trig_period (float):
            The interval between trig calls.
    """

    def __init__(self, period=0.5, event="e_link_stale"):
        """
        Create the plug-in.

        Args:
            period (float):
                The interval between trig calls.
            event (str):
                The watchdog event.
        """
        self.trig_period = float(period)
        self.event = event

    def trig(self, host):
        """Refresh the watchdog event."""
        host.set_event(self.event, self.trig_period)
