import numpy as np
import pytest

from portkit.actionlog import TRACE_DEPTH, LineKind
from portkit.bus import Direction, Message
from portkit.dsl import compile_monitor, parse_monitor_spec
from portkit.errors import (
    DepthExceeded,
    DirectionMismatch,
    MonitorInitFailed,
    UnknownConnection,
    UnknownPort,
)
from portkit.monitor import MonitorPlugin, MonitorState
from portkit.value import MAX_DEPTH, decode_value, depth


@pytest.fixture
def wired(bus):
    """A face detector and a gaze input with a delivery recorder."""
    received = []
    face = bus.add_port("FaceDetector", "face", Direction.OUT)
    gaze = bus.add_port("HeadControl", "gaze", Direction.IN, received.append)
    return face, gaze, received


def test_certainty_filter(bus, wired):
    face, gaze, received = wired
    plugin = compile_monitor(parse_monitor_spec("filter .certainty >= 0.8\n"))
    bus.connect(face, gaze, monitor=plugin, label="C1")

    certainties = np.random.default_rng(42).uniform(0.0, 1.0, 1000)
    for certainty in certainties:
        bus.write(
            face, (("pos", (1.0, 0.0, 0.4)), ("certainty", float(certainty)))
        )
        bus.advance(0.01)

    delivered = [message.payload[1][1] for message in received]
    assert delivered == [float(c) for c in certainties if c >= 0.8]
    assert len(bus.log.filter(LineKind.DISCARD)) == sum(certainties < 0.8)


def test_fan_out_in_connection_order(bus, wired):
    face, gaze, received = wired
    other = []
    speak = bus.add_port("Speak", "text", Direction.IN, other.append)
    bus.connect(face, gaze, label="C1")
    bus.connect(face, speak, label="C2")

    report = bus.write(face, "hi")
    assert [outcome.connection for outcome in report] == ["C1", "C2"]
    assert [label for label, _ in report.delivered] == ["C1", "C2"]
    assert received == [Message("hi", "C1", 0.0)]
    assert other == [Message("hi", "C2", 0.0)]


def test_default_labels(bus, wired):
    face, gaze, _ = wired
    assert bus.connect(face, gaze) == "C1"
    assert bus.connect(face, gaze) == "C2"


def test_connect_checks_directions(bus, wired):
    face, gaze, _ = wired
    with pytest.raises(DirectionMismatch):
        bus.connect(gaze, face)
    with pytest.raises(DirectionMismatch):
        bus.write(gaze, 1)
    with pytest.raises(UnknownPort):
        bus.find_port("Speak", "text")
    assert bus.find_port("HeadControl", "gaze", Direction.IN) == gaze


def test_duplicate_port(bus, wired):
    with pytest.raises(ValueError):
        bus.add_port("FaceDetector", "face", Direction.OUT)


def test_failed_monitor_rolls_the_connection_back(bus, wired):
    class Refuses(MonitorPlugin):
        def create(self, host):
            return False

    face, gaze, _ = wired
    with pytest.raises(MonitorInitFailed):
        bus.connect(face, gaze, monitor=Refuses(), label="C1")
    assert "C1" not in bus.connections
    assert bus.arbitrator(gaze).connections == []


def test_disconnect_destroys_the_monitor(bus, wired):
    face, gaze, received = wired
    bus.connect(face, gaze, monitor=MonitorPlugin(), label="C1")
    handle = bus.monitor("C1")
    bus.disconnect("C1")
    assert handle.state is MonitorState.DESTROYED
    assert len(bus.write(face, 1)) == 0
    assert received == []
    with pytest.raises(UnknownConnection):
        bus.disconnect("C1")


def test_messages_are_immutable():
    message = Message((1, 2), "C1", 0.5)
    with pytest.raises(AttributeError):
        message.payload = 3
    assert message.replace(7) == Message(7, "C1", 0.5)


def test_write_rejects_non_values(bus, wired):
    face, _, _ = wired
    with pytest.raises(TypeError):
        bus.write(face, [1, 2])


def test_audit_skips_unconnected_ports(bus, wired):
    face, gaze, _ = wired
    assert bus.audit() == []
    bus.connect(face, gaze, label="C1")
    reports = bus.audit()
    assert [report.port for report in reports] == ["HeadControl.gaze"]
    assert reports[0].clean


def test_payload_at_the_depth_limit(bus, wired):
    face, gaze, received = wired
    other = []
    speak = bus.add_port("Speak", "text", Direction.IN, other.append)
    bus.connect(face, gaze, label="C1")
    bus.connect(face, speak, label="C2")

    deep = 1
    for _ in range(MAX_DEPTH):
        deep = (deep,)
    assert depth(deep) == MAX_DEPTH

    report = bus.write(face, deep)
    assert [label for label, _ in report.delivered] == ["C1", "C2"]
    assert [m.payload for m in received + other] == [deep, deep]

    lines = bus.log.filter(LineKind.DELIVER)
    assert len(lines) == 2
    assert decode_value(lines[0].payload, TRACE_DEPTH)[2] == deep

    with pytest.raises(DepthExceeded):
        bus.write(face, (deep,))


def test_writes_from_handlers_wait_for_the_fan_out(bus):
    order = []
    first = bus.add_port("First", "out", Direction.OUT)
    second = bus.add_port("Second", "out", Direction.OUT)

    def forward(message):
        order.append(("a", message.payload))
        if message.payload == "ping":
            queued = bus.write(second, "pong")
            assert len(queued) == 0
            order.append(("a", "wrote"))

    a = bus.add_port("A", "in", Direction.IN, forward)
    b = bus.add_port(
        "B", "in", Direction.IN,
        lambda message: order.append(("b", message.payload)),
    )
    bus.connect(first, a, label="C1")
    bus.connect(first, b, label="C2")
    bus.connect(second, b, label="C3")

    report = bus.write(first, "ping")
    assert len(report) == 2
    assert order == [
        ("a", "ping"),
        ("a", "wrote"),
        ("b", "ping"),
        ("b", "pong"),
    ]
    assert [line.label for line in bus.log.filter(LineKind.DELIVER)] == [
        "C1", "C2", "C3",
    ]
