"""A module containing the stub robot modules driven by the simulator.

Each stub stands in for one module of the table-cleaning application. Stubs
never know about each other: they read the shared WorldModel, write to
their output ports and react to whatever their input ports deliver. All
coordination comes from the monitors and arbitrators on the connections.

    Module          Input     Output      Period
    FaceDetector    -         face        0.1 (while a human is present)
    ObjectDetector  -         objects     0.5
    BucketDetector  -         bucket      0.5
    LookAround      -         target      0.5 (seeded random gaze targets)
    HeadControl     gaze      -           -
    PickAndPlace    cmd       status      0.1
    PullObject      cmd       status      0.1 (e_pull_idle or e_pulling)
    Speak           text      -           -

Stubs log what they do as ACTION lines labelled with their module name.

Example:
    stub = make_stub("Speak", "speak", simulation)
    stub.open_ports()
"""

import enum
import math

import numpy as np

from portkit.actionlog import LineKind
from portkit.bus import Direction
from portkit.clock import quantize
from portkit.errors import UnknownObject
from portkit.value import field
from portkit.world import WorldEvent, step_world

# The registry of stub kinds
_STUBS = {}


def register_stub(kind):
    """
    Register a stub class under a manifest kind name.

    Args:
        kind (str):
            The name used in manifest "module" lines.

    Returns:
        function:
            The class decorator.
    """

    def decorator(cls):
        cls.kind = kind
        _STUBS[kind] = cls
        return cls

    return decorator


def stub_kinds():
    """Return the known stub kinds."""
    return sorted(_STUBS)


def make_stub(kind, name, simulation, **options):
    """
    Instantiate a stub module.

    Args:
        kind (str):
            The registered kind.
        name (str):
            The module name.
        simulation (Simulation):
            The simulation the stub belongs to.
        **options:
            The manifest's key=value options (strings or numbers).

    Returns:
        StubModule:
            The new stub.

    Raises:
        KeyError:
            If the kind is unknown.
        ValueError:
            If an option is unknown or not a number.
    """
    try:
        cls = _STUBS[kind]
    except KeyError:
        raise KeyError(
            f"no stub module kind {kind!r} (known: {', '.join(stub_kinds())})"
        )
    try:
        numbers = {key: float(value) for key, value in options.items()}
    except ValueError as error:
        raise ValueError(f"{name}: options must be numbers ({error})")
    try:
        return cls(name, simulation, **numbers)
    except TypeError:
        raise ValueError(
            f"{name}: unknown option among {', '.join(sorted(options))}"
        )


def _command(payload):
    """Split a msg_cmd into its verb and argument."""
    if isinstance(payload, tuple) and payload and isinstance(payload[0], str):
        return payload[0], payload[1] if len(payload) > 1 else None
    return None, None


def _is_pos(value):
    """Return whether a value is a pos_3D."""
    return (
        isinstance(value, tuple)
        and len(value) == 3
        and all(isinstance(item, (int, float)) for item in value)
    )


class StubModule:
    """
    The base class of the stub modules.

    Attributes:
        name (str):
            The module name.
        simulation (Simulation):
            The simulation the stub belongs to.
        period (float):
            How often emit runs (None for stubs that never emit).
        ports (dict):
            The PortId of each of the stub's ports.
    """

    kind = None
    period = None

    def __init__(self, name, simulation, period=None):
        """
        Create the stub.

        Args:
            name (str):
                The module name.
            simulation (Simulation):
                The simulation the stub belongs to.
            period (float):
                Override the emission period.
        """
        self.name = name
        self.simulation = simulation
        if period is not None:
            if not period > 0:
                raise ValueError(f"{name}: period must be positive")
            self.period = float(period)
        self.ports = {}

    def __repr__(self):
        """Return the debugging representation of the stub."""
        return f"{type(self).__name__}({self.name!r})"

    @property
    def now(self):
        """Return the current virtual time."""
        return self.simulation.clock.now

    @property
    def world(self):
        """Return the current world."""
        return self.simulation.world

    def change_world(self, event):
        """Apply an event to the shared world."""
        self.simulation.world = step_world(self.simulation.world, event)

    def open_ports(self):
        """Register the stub's ports on the bus."""

    def add_port(self, name, direction, handler=None):
        """Register one port on the bus."""
        self.ports[name] = self.simulation.bus.add_port(
            self.name, name, direction, handler
        )

    def write(self, port, value):
        """Write a value to one of the stub's output ports."""
        return self.simulation.bus.write(self.ports[port], value)

    def act(self, payload):
        """Record an ACTION line."""
        self.simulation.log.append(
            self.now, LineKind.ACTION, self.name, payload
        )

    def due(self, k, tick):
        """
        Return whether emit runs on a tick.

        Args:
            k (int):
                The tick number.
            tick (float):
                The tick length in seconds.
        """
        if self.period is None:
            return False
        every = max(1, int(round(self.period / tick)))
        return k % every == 0

    def step(self, t):
        """Advance internal state to time t."""

    def emit(self, t):
        """Write the stub's periodic output."""


@register_stub("FaceDetector")
class FaceDetector(StubModule):
    """Report the position of the human's face while one is present.

    With spread > 0 the certainty of each detection is drawn uniformly from
    [certainty - spread, certainty + spread] (clipped to [0, 1]).
    """

    period = 0.1

    def __init__(self, name, simulation, period=None, certainty=0.9,
                 spread=0.0):
        super(FaceDetector, self).__init__(name, simulation, period)
        self.certainty = float(certainty)
        self.spread = float(spread)
        self.rng = np.random.default_rng([simulation.seed, 1])

    def open_ports(self):
        self.add_port("face", Direction.OUT)

    def emit(self, t):
        if not self.world.human_present:
            return
        certainty = self.certainty
        if self.spread > 0:
            certainty = self.rng.uniform(
                certainty - self.spread, certainty + self.spread
            )
            certainty = round(float(np.clip(certainty, 0.0, 1.0)), 3)
        self.write(
            "face",
            (("pos", self.world.human_pos), ("certainty", float(certainty))),
        )


@register_stub("ObjectDetector")
class ObjectDetector(StubModule):
    """Report the objects on the table."""

    period = 0.5

    def open_ports(self):
        self.add_port("objects", Direction.OUT)

    def emit(self, t):
        self.write("objects", self.world.object_list())


@register_stub("BucketDetector")
class BucketDetector(StubModule):
    """Report the position of the bucket."""

    period = 0.5

    def open_ports(self):
        self.add_port("bucket", Direction.OUT)

    def emit(self, t):
        self.write("bucket", tuple(float(x) for x in self.world.bucket))


@register_stub("LookAround")
class LookAround(StubModule):
    """
    A class producing random gaze targets.

    The targets come from a numpy Generator seeded with the simulation's
    seed, so equal seeds give equal target sequences.

    Attributes:
        rng (numpy.random.Generator):
            The target stream.
    """

    period = 0.5

    def __init__(self, name, simulation, period=None):
        """
        Create the stub.

        Args:
            name (str):
                The module name.
            simulation (Simulation):
                The simulation the stub belongs to.
            period (float):
                Override the emission period.
        """
        super(LookAround, self).__init__(name, simulation, period)
        self.rng = np.random.default_rng(simulation.seed)

    def open_ports(self):
        """Register the target port."""
        self.add_port("target", Direction.OUT)

    def emit(self, t):
        """Write the next random target."""
        low = np.array([0.3, -0.5, 0.0])
        high = np.array([1.0, 0.5, 0.5])
        target = np.round(self.rng.uniform(low, high), 3)
        self.write("target", tuple(float(x) for x in target))


@register_stub("HeadControl")
class HeadControl(StubModule):
    """Move the gaze to every delivered position."""

    def open_ports(self):
        self.add_port("gaze", Direction.IN, self.on_gaze)

    def on_gaze(self, message):
        payload = message.payload
        target = field(payload, "pos", default=payload)
        self.act(("gaze", target))


@register_stub("Speak")
class Speak(StubModule):
    """Say every delivered text."""

    def open_ports(self):
        self.add_port("text", Direction.IN, self.on_text)

    def on_text(self, message):
        self.act(("speak", message.payload))


class ArmState(enum.Enum):
    """The states of the Pick-and-Place arm."""

    FREE = "free"
    TAKING = "taking"
    HOLDING = "holding"
    PUTTING = "putting"


@register_stub("PickAndPlace")
class PickAndPlace(StubModule):
    """
    A class standing in for the Pick-and-Place module.

    "take <pos>" is executed only while the arm is free and "put <pos>"
    only while it holds an object; any other command is logged as ignored.
    The status port reports e_arm_idle while no action runs and e_taken
    while an object is in the hand.

    Attributes:
        state (ArmState):
            What the arm is doing.
        target (str):
            The id of the object being taken or held.
        until (float):
            When the running action finishes.
        take_time (float):
            How long a take lasts.
        put_time (float):
            How long a put lasts.
    """

    period = 0.1

    def __init__(self, name, simulation, period=None, take_time=1.0,
                 put_time=1.0):
        """
        Create the stub.

        Args:
            name (str):
                The module name.
            simulation (Simulation):
                The simulation the stub belongs to.
            period (float):
                Override the status period.
            take_time (float):
                How long a take lasts.
            put_time (float):
                How long a put lasts.
        """
        super(PickAndPlace, self).__init__(name, simulation, period)
        self.take_time = float(take_time)
        self.put_time = float(put_time)
        self.state = ArmState.FREE
        self.target = None
        self.until = None

    def open_ports(self):
        """Register the command and status ports."""
        self.add_port("cmd", Direction.IN, self.on_command)
        self.add_port("status", Direction.OUT)

    def on_command(self, message):
        """Start an action, or ignore the command."""
        verb, arg = _command(message.payload)

        if verb == "take" and self.state is ArmState.FREE and _is_pos(arg):
            target = self.world.nearest(arg)
            if target is not None:
                self.state = ArmState.TAKING
                self.target = target.id
                self.until = quantize(self.now + self.take_time)
                self.act(("take", arg))
                return

        if verb == "put" and self.state is ArmState.HOLDING and _is_pos(arg):
            self.state = ArmState.PUTTING
            self.until = quantize(self.now + self.put_time)
            self.act(("put", arg))
            return

        self.act(("ignore", message.payload))

    def step(self, t):
        """Finish running actions and notice dropped objects."""
        if self.state is ArmState.TAKING and t >= self.until:
            try:
                self.change_world(WorldEvent("grab", obj=self.target))
            except UnknownObject:
                self.act(("missed", self.target))
                self._free()
                return
            self.state = ArmState.HOLDING
            self.act(("taken", self.target))

        elif self.state in (ArmState.HOLDING, ArmState.PUTTING):
            if self.world.held is None:
                self.act(("dropped", self.target))
                self._free()
            elif self.state is ArmState.PUTTING and t >= self.until:
                self.change_world(WorldEvent("release"))
                self.act(("placed", self.target))
                self._free()

    def _free(self):
        self.state = ArmState.FREE
        self.target = None
        self.until = None

    def emit(self, t):
        """Publish the arm status."""
        if self.state in (ArmState.FREE, ArmState.HOLDING):
            self.write("status", ("e_arm_idle",))
        if self.state in (ArmState.HOLDING, ArmState.PUTTING):
            self.write("status", ("e_taken",))


class PullState(enum.Enum):
    """The states of the Pull-Object module."""

    IDLE = "idle"
    PULLING = "pulling"


# The sub-actions of a pull, in order
SUB_ACTIONS = ("take-tool", "reach", "pull", "return-tool")


@register_stub("PullObject")
class PullObject(StubModule):
    """
    A class standing in for the Pull-Object module.

    A "pull <pos>" command starts a fixed sequence of sub-actions, each
    lasting step_time. Redundant pulls are ignored until the sequence
    completes or a "cancel" aborts it. A completed pull brings the target
    object to pulled_dist. The status port reports e_pull_idle while no
    sequence runs and e_pulling while one does.

    Attributes:
        state (PullState):
            Whether a sequence is running.
        target (str):
            The id of the object being pulled.
        started (float):
            When the running sequence started.
        sub_action (int):
            The index of the running sub-action.
    """

    period = 0.1

    def __init__(self, name, simulation, period=None, step_time=0.5,
                 pulled_dist=0.3):
        """
        Create the stub.

        Args:
            name (str):
                The module name.
            simulation (Simulation):
                The simulation the stub belongs to.
            period (float):
                Override the status period.
            step_time (float):
                How long each sub-action lasts.
            pulled_dist (float):
                Where a pulled object ends up.
        """
        super(PullObject, self).__init__(name, simulation, period)
        self.step_time = float(step_time)
        self.pulled_dist = float(pulled_dist)
        self.state = PullState.IDLE
        self.target = None
        self.started = None
        self.sub_action = None

    def open_ports(self):
        """Register the command and status ports."""
        self.add_port("cmd", Direction.IN, self.on_command)
        self.add_port("status", Direction.OUT)

    def on_command(self, message):
        """Start or abort a pull, or ignore the command."""
        verb, arg = _command(message.payload)

        if verb == "pull" and self.state is PullState.IDLE and _is_pos(arg):
            target = self.world.nearest(arg)
            if target is not None:
                self.state = PullState.PULLING
                self.target = target.id
                self.started = self.now
                self.sub_action = 0
                self.act(("pull", arg))
                self.act(("sub_action", SUB_ACTIONS[0]))
                return

        if verb == "cancel" and self.state is PullState.PULLING:
            self.act(("cancel", self.target))
            self._idle()
            return

        self.act(("ignore", message.payload))

    def step(self, t):
        """Move through the sub-actions and finish the sequence."""
        if self.state is not PullState.PULLING:
            return
        elapsed = quantize(t - self.started)
        index = int(math.floor(elapsed / self.step_time + 1e-9))

        if index >= len(SUB_ACTIONS):
            try:
                self.change_world(
                    WorldEvent("move", obj=self.target, dist=self.pulled_dist)
                )
                self.act(("pulled", self.target, self.pulled_dist))
            except UnknownObject:
                self.act(("missed", self.target))
            self._idle()
            return

        while self.sub_action < index:
            self.sub_action += 1
            self.act(("sub_action", SUB_ACTIONS[self.sub_action]))

    def _idle(self):
        self.state = PullState.IDLE
        self.target = None
        self.started = None
        self.sub_action = None

    def emit(self, t):
        """Publish the pull status."""
        if self.state is PullState.IDLE:
            self.write("status", ("e_pull_idle",))
        else:
            self.write("status", ("e_pulling",))
