"""A module containing the simulated table the stub modules look at.

The world is immutable: scripted disturbances and the actions of the stub
modules produce a new WorldModel through step_world. Objects are reduced to
a distance from the robot and a lateral offset, which is all the detectors
need to report a position.

Example:
    world = WorldModel(hand_reachable=0.4, tool_reachable=0.8)
    world = step_world(world, WorldEvent("add", obj="o1", dist=0.3))
    world = step_world(world, WorldEvent("move", obj="o1", dist=0.35))
"""

from dataclasses import dataclass, replace

from portkit.errors import UnknownObject
from portkit.value import record

# The kinds of world event and the operands each one takes
EVENT_KINDS = {
    "add": ("obj", "dist", "lateral"),
    "move": ("obj", "dist"),
    "remove": ("obj",),
    "human": ("state",),
    "grab": ("obj",),
    "release": (),
    "drop": (),
}


@dataclass(frozen=True)
class WorldObject:
    """
    A class defining an object on the table.

    Attributes:
        id (str):
            The object's name.
        dist (float):
            The distance from the robot in meters.
        lateral (float):
            The sideways offset in meters.
    """

    id: str
    dist: float
    lateral: float = 0.0

    def __post_init__(self):
        """Check the distance."""
        if self.dist < 0:
            raise ValueError(f"{self.id}: negative distance {self.dist}")

    @property
    def pos(self):
        """Return the object's pos_3D."""
        return (float(self.dist), float(self.lateral), 0.0)

    def as_value(self):
        """Return the object the way Object-Detector reports it."""
        return record(id=self.id, dist=float(self.dist), pos=self.pos)


@dataclass(frozen=True)
class WorldEvent:
    """
    A class defining one scripted change to the world.

    Attributes:
        kind (str):
            One of the EVENT_KINDS.
        time (float):
            When the event happens (scripted events only).
        obj (str):
            The object concerned.
        dist (float):
            The new distance ("add" and "move").
        lateral (float):
            The lateral offset ("add").
        state (bool):
            Whether the human is present ("human").
    """

    kind: str
    time: float = 0.0
    obj: object = None
    dist: object = None
    lateral: float = 0.0
    state: object = None

    def __post_init__(self):
        """Check the kind."""
        if self.kind not in EVENT_KINDS:
            raise ValueError(
                f"unknown world event {self.kind!r} "
                f"(expected one of {', '.join(EVENT_KINDS)})"
            )

    def __str__(self):
        """Render the event the way manifests write it."""
        if self.kind == "add":
            return f"add {self.obj} {self.dist!r} {self.lateral!r}"
        if self.kind == "move":
            return f"move {self.obj} {self.dist!r}"
        if self.kind == "human":
            return f"human {'on' if self.state else 'off'}"
        if self.obj is not None:
            return f"{self.kind} {self.obj}"
        return self.kind


def parse_world_event(text, time=0.0):
    """
    Parse the event part of a manifest "world" line.

    Accepted forms are "add <id> <dist> [lateral]", "move <id> <dist>",
    "remove <id>", "human on|off" and "drop".

    Args:
        text (str):
            The event text (without the "@time" suffix).
        time (float):
            When the event happens.

    Returns:
        WorldEvent:
            The parsed event.

    Raises:
        ValueError:
            If the text is not a world event.
    """
    words = text.split()
    if not words:
        raise ValueError("empty world event")
    kind, operands = words[0], words[1:]

    if kind == "add" and len(operands) in (2, 3):
        lateral = float(operands[2]) if len(operands) == 3 else 0.0
        return WorldEvent(
            kind, time, obj=operands[0], dist=float(operands[1]),
            lateral=lateral,
        )
    if kind == "move" and len(operands) == 2:
        return WorldEvent(kind, time, obj=operands[0], dist=float(operands[1]))
    if kind == "remove" and len(operands) == 1:
        return WorldEvent(kind, time, obj=operands[0])
    if kind == "human" and len(operands) == 1 and operands[0] in ("on", "off"):
        return WorldEvent(kind, time, state=operands[0] == "on")
    if kind == "drop" and not operands:
        return WorldEvent(kind, time)
    raise ValueError(f"malformed world event {text!r}")


@dataclass(frozen=True)
class WorldModel:
    """
    A class defining the state of the simulated table.

    Attributes:
        objects (tuple):
            The WorldObjects on the table, in the order they were added.
        bucket (tuple):
            The pos_3D of the bucket.
        human_present (bool):
            Whether a person is in front of the robot.
        human_pos (tuple):
            Where the person's face is.
        held (WorldObject):
            The object in the robot's hand (None if the hand is empty).
        in_bucket (tuple):
            The ids of the objects put into the bucket.
        hand_reachable (float):
            Objects closer than this can be taken by hand.
        tool_reachable (float):
            Objects closer than this can be pulled with the tool.
    """

    objects: tuple = ()
    bucket: tuple = (0.25, -0.3, 0.0)
    human_present: bool = False
    human_pos: tuple = (1.0, 0.1, 0.45)
    held: object = None
    in_bucket: tuple = ()
    hand_reachable: float = 0.4
    tool_reachable: float = 0.8

    def __post_init__(self):
        """Check the reach zones."""
        if not 0 < self.hand_reachable < self.tool_reachable:
            raise ValueError(
                "reach zones must satisfy 0 < hand_reachable < "
                f"tool_reachable, got {self.hand_reachable} and "
                f"{self.tool_reachable}"
            )

    def find(self, obj):
        """
        Return the object with an id.

        Raises:
            UnknownObject:
                If no object on the table has the id.
        """
        for item in self.objects:
            if item.id == obj:
                return item
        raise UnknownObject(f"no object {obj!r} on the table")

    def nearest(self, pos):
        """
        Return the object closest to a position.

        Args:
            pos (tuple):
                The pos_3D to match.

        Returns:
            WorldObject:
                The nearest object (None if the table is empty).
        """
        best = None
        best_distance = None
        for item in self.objects:
            distance = sum(
                (float(a) - b) ** 2 for a, b in zip(pos, item.pos)
            )
            if best_distance is None or distance < best_distance:
                best, best_distance = item, distance
        return best

    def object_list(self):
        """Return the object list Object-Detector reports."""
        return tuple(item.as_value() for item in self.objects)


def _replace_object(world, obj, **changes):
    """Return the world with one object changed."""
    target = world.find(obj)
    objects = tuple(
        replace(item, **changes) if item is target else item
        for item in world.objects
    )
    return replace(world, objects=objects)


def step_world(world, event):
    """
    Apply an event to the world.

    Args:
        world (WorldModel):
            The current world.
        event (WorldEvent):
            The change to apply.

    Returns:
        WorldModel:
            The new world.

    Raises:
        UnknownObject:
            If the event names an object that is not on the table.
        ValueError:
            If an object is added twice.
    """
    if event.kind == "add":
        if any(item.id == event.obj for item in world.objects):
            raise ValueError(f"object {event.obj!r} is already on the table")
        added = WorldObject(event.obj, float(event.dist), float(event.lateral))
        return replace(world, objects=world.objects + (added,))

    if event.kind == "move":
        return _replace_object(world, event.obj, dist=float(event.dist))

    if event.kind == "remove":
        target = world.find(event.obj)
        return replace(
            world,
            objects=tuple(
                item for item in world.objects if item is not target
            ),
        )

    if event.kind == "human":
        return replace(world, human_present=bool(event.state))

    if event.kind == "grab":
        target = world.find(event.obj)
        return replace(
            world,
            objects=tuple(
                item for item in world.objects if item is not target
            ),
            held=target,
        )

    if event.kind == "release":
        if world.held is None:
            return world
        return replace(
            world, held=None, in_bucket=world.in_bucket + (world.held.id,)
        )

    # A drop puts the held object back where it was picked up
    if world.held is None:
        return world
    return replace(
        world, held=None, objects=world.objects + (world.held,)
    )
