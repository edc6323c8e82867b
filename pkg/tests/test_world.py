from dataclasses import FrozenInstanceError

import pytest

from portkit.errors import UnknownObject
from portkit.world import (
    WorldEvent,
    WorldModel,
    WorldObject,
    parse_world_event,
    step_world,
)


@pytest.fixture
def world():
    world = WorldModel()
    world = step_world(world, WorldEvent("add", obj="o1", dist=0.3))
    return step_world(
        world, WorldEvent("add", obj="o2", dist=0.6, lateral=0.1)
    )


def test_object_list(world):
    assert world.object_list() == (
        (("id", "o1"), ("dist", 0.3), ("pos", (0.3, 0.0, 0.0))),
        (("id", "o2"), ("dist", 0.6), ("pos", (0.6, 0.1, 0.0))),
    )


def test_world_is_immutable(world):
    moved = step_world(world, WorldEvent("move", obj="o2", dist=0.3))
    assert world.find("o2").dist == 0.6
    assert moved.find("o2") == WorldObject("o2", 0.3, 0.1)
    with pytest.raises(FrozenInstanceError):
        world.human_present = True


def test_grab_release_and_drop(world):
    holding = step_world(world, WorldEvent("grab", obj="o1"))
    assert holding.held.id == "o1"
    assert [item.id for item in holding.objects] == ["o2"]

    placed = step_world(holding, WorldEvent("release"))
    assert placed.held is None
    assert placed.in_bucket == ("o1",)

    dropped = step_world(holding, WorldEvent("drop"))
    assert dropped.held is None
    assert [item.id for item in dropped.objects] == ["o2", "o1"]

    # Nothing in hand
    assert step_world(world, WorldEvent("drop")) is world
    assert step_world(world, WorldEvent("release")) is world


def test_unknown_and_duplicate_objects(world):
    with pytest.raises(UnknownObject):
        step_world(world, WorldEvent("move", obj="o9", dist=0.1))
    with pytest.raises(UnknownObject):
        step_world(world, WorldEvent("grab", obj="o9"))
    with pytest.raises(ValueError):
        step_world(world, WorldEvent("add", obj="o1", dist=0.2))


def test_nearest(world):
    assert world.nearest((0.55, 0.1, 0.0)).id == "o2"
    assert world.nearest((0.0, 0.0, 0.0)).id == "o1"
    assert WorldModel().nearest((0.3, 0.0, 0.0)) is None


def test_human(world):
    assert step_world(world, WorldEvent("human", state=True)).human_present


def test_reach_zones():
    with pytest.raises(ValueError):
        WorldModel(hand_reachable=0.8, tool_reachable=0.4)
    with pytest.raises(ValueError):
        WorldObject("o1", -0.1)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("add o1 0.3", WorldEvent("add", 1.0, obj="o1", dist=0.3)),
        (
            "add o2 0.6 0.1",
            WorldEvent("add", 1.0, obj="o2", dist=0.6, lateral=0.1),
        ),
        ("move o3 0.35", WorldEvent("move", 1.0, obj="o3", dist=0.35)),
        ("remove o1", WorldEvent("remove", 1.0, obj="o1")),
        ("human on", WorldEvent("human", 1.0, state=True)),
        ("human off", WorldEvent("human", 1.0, state=False)),
        ("drop", WorldEvent("drop", 1.0)),
    ],
)
def test_parse_world_event(text, expected):
    event = parse_world_event(text, time=1.0)
    assert event == expected
    assert str(event).split()[0] == text.split()[0]


@pytest.mark.parametrize(
    "text", ["", "add o1", "move o1", "human maybe", "drop o1", "fly o1"]
)
def test_malformed_world_events(text):
    with pytest.raises(ValueError):
        parse_world_event(text)
