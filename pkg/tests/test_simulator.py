import functools
import os

import pytest

from portkit.actionlog import LineKind
from portkit.bus import Message
from portkit.constraint import evaluate, parse_constraint
from portkit.errors import ConsistencyError, ManifestError
from portkit.main import scenario_dir
from portkit.manifest import parse_manifest
from portkit.paramfile import parse_index
from portkit.simulator import Simulation
from portkit.value import decode_value

SCENARIOS = [
    "search_and_track",
    "reachable",
    "drop",
    "tool",
    "tool_intervention",
    "full",
]

INDEX = parse_index(os.path.join(scenario_dir(), "index.yaml"))

BUCKET = (0.25, -0.3, 0.0)


def simulate(name, seed=7, params=None):
    path = os.path.join(scenario_dir(), f"{name}.manifest")
    simulation = Simulation(path, seed=seed, params=params)
    simulation.run(INDEX[name]["duration"])
    return simulation


@functools.lru_cache(maxsize=None)
def scenario(name):
    """Run a shipped scenario once per test session."""
    return simulate(name)


def actions(simulation, module):
    return [
        (line.time, decode_value(line.payload))
        for line in simulation.log.filter(LineKind.ACTION, module)
    ]


def times(simulation, kind, label, stage=None):
    lines = simulation.log.filter(kind, label)
    if stage is not None:
        lines = [
            line for line in lines if decode_value(line.payload)[0] == stage
        ]
    return [line.time for line in lines]


def ticks(start, stop, step):
    count = int(round((stop - start) / step)) + 1
    return [round(start + index * step, 9) for index in range(count)]


@pytest.mark.parametrize("name", SCENARIOS)
def test_runs_are_deterministic(name):
    assert simulate(name).log.text() == scenario(name).log.text()


@pytest.mark.parametrize("name", SCENARIOS)
def test_arbitration_respects_the_constraints(name):
    simulation = scenario(name)
    for line in simulation.log:
        if line.kind not in (LineKind.DELIVER, LineKind.DISCARD):
            continue
        stage, symbols, _ = decode_value(line.payload)
        if stage not in ("delivered", "constraint"):
            continue
        dst = simulation.bus.connections[line.label].dst
        rule = parse_constraint(
            simulation.bus.arbitrator(dst).constraint_text(line.label)
        )
        assert evaluate(rule, set(symbols)) == (stage == "delivered"), line


def test_search_and_track():
    simulation = scenario("search_and_track")

    assert times(simulation, LineKind.DELIVER, "C2") == [
        0.0, 0.5, 1.0, 1.5, 5.0, 5.5, 6.0,
    ]
    assert times(simulation, LineKind.DELIVER, "C1") == pytest.approx(
        ticks(2.0, 4.0, 0.1)
    )
    assert times(
        simulation, LineKind.DISCARD, "C2", "constraint"
    ) == ticks(2.0, 4.5, 0.5)

    expired = simulation.log.filter(LineKind.EVENT_EXPIRE)
    assert [(line.time, line.label, line.payload) for line in expired] == [
        (5.0, "C1", '("e_face_detected")')
    ]
    assert len(actions(simulation, "head")) == 28

    (report,) = simulation.reports
    assert report.port == "head.gaze"
    assert [v.as_tuple() for v in report.violations] == [
        ("C1", "C2", {"e_face_detected": False})
    ]


def test_reachable():
    simulation = scenario("reachable")
    assert actions(simulation, "arm") == [
        (0.5, ("take", (0.3, 0.0, 0.0))),
        (1.5, ("taken", "o1")),
        (2.0, ("put", BUCKET)),
        (3.0, ("placed", "o1")),
    ]
    assert len(simulation.log.filter(LineKind.DELIVER, "C1")) == 1
    assert len(simulation.log.filter(LineKind.DELIVER, "C2")) == 1
    assert simulation.world.objects == ()
    assert simulation.world.in_bucket == ("o1",)
    assert all(report.clean for report in simulation.reports)


def test_take_needs_an_idle_arm_without_an_object():
    simulation = scenario("reachable")
    (take,) = simulation.log.filter(LineKind.DELIVER, "C1")
    stage, symbols, payload = decode_value(take.payload)
    assert "e_arm_idle" in symbols
    assert "e_taken" not in symbols
    assert payload == ("take", (0.3, 0.0, 0.0))


def test_drop():
    simulation = scenario("drop")
    assert actions(simulation, "arm") == [
        (0.5, ("take", (0.3, 0.0, 0.0))),
        (1.5, ("taken", "o1")),
        (2.0, ("put", BUCKET)),
        (2.5, ("dropped", "o1")),
        (3.0, ("take", (0.3, 0.0, 0.0))),
        (4.0, ("taken", "o1")),
        (4.5, ("put", BUCKET)),
        (5.5, ("placed", "o1")),
    ]
    assert simulation.world.in_bucket == ("o1",)


def test_tool():
    simulation = scenario("tool")
    assert actions(simulation, "puller") == [
        (0.5, ("pull", (0.6, 0.0, 0.0))),
        (0.5, ("sub_action", "take-tool")),
        (1.0, ("sub_action", "reach")),
        (1.5, ("sub_action", "pull")),
        (2.0, ("sub_action", "return-tool")),
        (2.5, ("pulled", "o1", 0.3)),
        (2.5, ("ignore", ("cancel",))),
    ]
    assert actions(simulation, "arm") == [
        (3.0, ("take", (0.3, 0.0, 0.0))),
        (4.0, ("taken", "o1")),
        (4.5, ("put", BUCKET)),
        (5.5, ("placed", "o1")),
    ]
    assert len(simulation.log.filter(LineKind.DELIVER, "C4")) == 1
    assert all(report.clean for report in simulation.reports)


def test_no_take_while_pulling():
    simulation = scenario("tool")
    for line in simulation.log.filter(LineKind.DELIVER, "C1"):
        _, symbols, _ = decode_value(line.payload)
        assert "e_pull_idle" in symbols
        assert "e_pulling" not in symbols


def test_tool_intervention():
    simulation = scenario("tool_intervention")
    assert actions(simulation, "puller") == [
        (0.5, ("pull", (0.6, 0.0, 0.0))),
        (0.5, ("sub_action", "take-tool")),
        (1.0, ("sub_action", "reach")),
        (1.0, ("cancel", "o1")),
    ]
    assert times(simulation, LineKind.DELIVER, "C7") == [1.0]
    assert actions(simulation, "arm") == [
        (1.5, ("take", (0.35, 0.0, 0.0))),
        (2.5, ("taken", "o1")),
        (3.0, ("put", BUCKET)),
        (4.0, ("placed", "o1")),
    ]
    assert simulation.world.in_bucket == ("o1",)
    assert all(report.clean for report in simulation.reports)


def test_full():
    simulation = scenario("full")

    takes = [
        (time, payload)
        for time, payload in actions(simulation, "arm")
        if payload[0] == "take"
    ]
    assert takes == [
        (0.5, ("take", (0.3, 0.0, 0.0))),
        (6.0, ("take", (0.3, 0.1, 0.0))),
        (12.0, ("take", (0.35, -0.2, 0.0))),
    ]
    assert (3.5, ("pull", (0.6, 0.1, 0.0))) in actions(simulation, "puller")
    assert (5.5, ("pulled", "o2", 0.3)) in actions(simulation, "puller")

    assert actions(simulation, "speak") == [
        (10.0, ("speak", "Please put the object closer!"))
    ]

    gazes = [time for time, _ in actions(simulation, "head")]
    assert gazes[:2] == [9.0, 9.5]
    assert gazes[2:] == pytest.approx(ticks(10.0, 12.0, 0.1))

    # e_unreachable is refreshed on every object report until o3 moves
    unreachable = times(simulation, LineKind.EVENT_SET, "C7")
    assert unreachable == ticks(7.0, 11.5, 0.5)
    assert times(simulation, LineKind.EVENT_UNSET, "C7") == [12.0]

    assert simulation.world.objects == ()
    assert simulation.world.in_bucket == ("o1", "o2", "o3")

    dirty = [report for report in simulation.reports if not report.clean]
    assert [report.port for report in dirty] == ["head.gaze"]
    assert [(v.first, v.second) for v in dirty[0].violations] == [
        ("C8", "C9")
    ]


def test_no_gaze_while_the_arms_are_busy():
    simulation = scenario("full")
    for label in ("C8", "C9"):
        for line in simulation.log.filter(LineKind.DELIVER, label):
            _, symbols, _ = decode_value(line.payload)
            assert {"e_unreachable", "e_arm_idle", "e_pull_idle"} <= set(
                symbols
            )
            assert "e_taken" not in symbols


def test_the_seed_only_changes_the_random_gaze():
    first = scenario("search_and_track").log
    second = simulate("search_and_track", seed=8).log
    assert len(first) == len(second)

    changed = [
        (a, b) for a, b in zip(first, second) if str(a) != str(b)
    ]
    assert changed
    for a, b in changed:
        assert (a.time, a.kind, a.label) == (b.time, b.kind, b.label)
        assert a.label in ("C2", "head")


def test_parameter_overrides():
    simulation = simulate("reachable", params={"HAND_REACHABLE": 0.2})
    assert actions(simulation, "arm") == []
    assert simulation.world.hand_reachable == 0.2


INLINE = """\
mode strict
module look LookAround
module objects ObjectDetector
module head HeadControl
connect look.target head.gaze
connect objects.objects head.gaze
"""


def test_strict_overlap_fails():
    with pytest.raises(ConsistencyError) as error:
        Simulation(parse_manifest(INLINE))
    assert [(v.first, v.second) for v in error.value.violations] == [
        ("C1", "C2")
    ]

    simulation = Simulation(parse_manifest(INLINE), strict=False)
    assert not simulation.reports[0].clean


@pytest.mark.parametrize(
    "text",
    [
        "module look LookAround\nmodule head HeadControl\n"
        "connect look.nope head.gaze\n",
        "module look LookAround\nmodule head HeadControl\n"
        "connect head.gaze look.target\n",
        "module arm PickAndPlace speed=2\n",
        "module arm PickAndPlace take_time=soon\n",
        "module look LookAround\nmodule head HeadControl\n"
        "connect look.target head.gaze monitor=native:nope\n",
    ],
)
def test_manifest_problems_found_while_building(text):
    with pytest.raises(ManifestError):
        Simulation(parse_manifest(text))


def test_run_continues_from_the_last_tick():
    simulation = Simulation(os.path.join(scenario_dir(), "reachable.manifest"))
    simulation.run(1.0)
    simulation.run(6.0)
    assert simulation.log.text() == simulate("reachable", seed=0).log.text()
    with pytest.raises(ValueError):
        simulation.run(-1.0)


def test_arm_ignores_commands_it_cannot_run():
    simulation = Simulation(parse_manifest("module arm PickAndPlace\n"))
    (arm,) = simulation.modules
    arm.on_command(Message(("put", BUCKET), "C1", 0.0))
    arm.on_command(Message("dance", "C1", 0.0))
    # Nothing on the table to take
    arm.on_command(Message(("take", (0.3, 0.0, 0.0)), "C1", 0.0))
    assert actions(simulation, "arm") == [
        (0.0, ("ignore", ("put", BUCKET))),
        (0.0, ("ignore", "dance")),
        (0.0, ("ignore", ("take", (0.3, 0.0, 0.0)))),
    ]
