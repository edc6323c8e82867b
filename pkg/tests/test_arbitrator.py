import pytest

from portkit.arbitrator import Arbitrator, Stage
from portkit.bus import Message
from portkit.errors import ConsistencyError, ParseError, UnknownConnection
from portkit.logger import Logger
from portkit.monitor import MonitorPlugin


class SetsEvent(MonitorPlugin):
    """Set an event from accept, the way a Listing-style filter does."""

    def __init__(self, name, lifetime=None):
        self.name = name
        self.lifetime = lifetime

    def accept(self, host, payload):
        host.set_event(self.name, self.lifetime)
        return True


class FeedsOnly(MonitorPlugin):
    delivers = False

    def accept(self, host, payload):
        return False


class Rejects(MonitorPlugin):
    def accept(self, host, payload):
        return False


@pytest.fixture
def arbitrator(clock, log):
    arbitrator = Arbitrator("HeadControl.gaze", clock, log)
    arbitrator.register("C1")
    arbitrator.register("C2")
    return arbitrator


def arrive(arbitrator, clock, connection, payload=1):
    return arbitrator.arbitrate(
        connection, Message(payload, connection, clock.now)
    )


def test_constraint_sees_events_set_by_accept(clock, arbitrator):
    arbitrator.attach_monitor("C1", SetsEvent("e_go"))
    arbitrator.set_constraint_for("C1", "e_go")
    outcome, delivered = arrive(arbitrator, clock, "C1")
    assert outcome.stage is Stage.DELIVERED
    assert outcome.snapshot == {"e_go"}
    assert delivered.payload == 1


def test_monitor_rejection_skips_the_constraint(clock, arbitrator, log):
    arbitrator.attach_monitor("C1", Rejects())
    arbitrator.set_constraint_for("C1", "false")
    outcome, _ = arrive(arbitrator, clock, "C1")
    assert outcome.stage is Stage.REJECTED_BY_MONITOR
    assert str(log[-1]) == '0.000 DISCARD C1 ("monitor" () 1)'


def test_face_tracking_blocks_look_around(clock, arbitrator, log):
    arbitrator.attach_monitor("C1", SetsEvent("e_face_detected", 1.0))
    arbitrator.set_constraint_for("C2", "not e_face_detected")

    assert arrive(arbitrator, clock, "C2")[0].delivered
    assert arrive(arbitrator, clock, "C1")[0].delivered

    clock.advance(0.5)
    outcome, delivered = arrive(arbitrator, clock, "C2", (0.5, 0.0, 0.2))
    assert outcome.stage is Stage.REJECTED_BY_CONSTRAINT
    assert delivered is None
    assert str(log[-1]) == (
        '0.500 DISCARD C2 ("constraint" ("e_face_detected") (0.5 0.0 0.2))'
    )

    clock.advance(0.5)
    assert arrive(arbitrator, clock, "C2")[0].delivered


def test_deliver_line(clock, arbitrator, log):
    arbitrator.attach_monitor("C1", SetsEvent("e_go"))
    arrive(arbitrator, clock, "C1", "hello")
    assert str(log[-1]) == '0.000 DELIVER C1 ("delivered" ("e_go") "hello")'


def test_bad_constraint_keeps_the_old_one(arbitrator):
    arbitrator.set_constraint_for("C1", "e_a and e_b")
    with pytest.raises(ParseError):
        arbitrator.set_constraint_for("C1", "e_a and")
    assert arbitrator.constraint_text("C1") == "e_a and e_b"


def test_unknown_connection(clock, arbitrator):
    with pytest.raises(UnknownConnection):
        arrive(arbitrator, clock, "C9")
    with pytest.raises(UnknownConnection):
        arbitrator.set_constraint_for("C9", "true")


def test_removed_connection_keeps_its_events(clock, arbitrator):
    arbitrator.attach_monitor("C1", SetsEvent("e_go"))
    arrive(arbitrator, clock, "C1")
    arbitrator.remove("C1")
    assert arbitrator.connections == ["C2"]
    assert arbitrator.container.is_active("e_go")


def test_advisory_audit_warns(arbitrator):
    arbitrator.set_constraint_for("C2", "not e_face_detected")
    warnings = len(Logger().warnings)
    report = arbitrator.audit()
    assert not report.clean
    assert len(Logger().warnings) == warnings + 1
    assert report.lines() == [
        "HeadControl.gaze:",
        "  C1: true",
        "  C2: not e_face_detected",
        "  overlap C1/C2 witness e_face_detected=false",
    ]


def test_strict_audit_raises(arbitrator):
    arbitrator.set_constraint_for("C2", "not e_face_detected")
    with pytest.raises(ConsistencyError) as error:
        arbitrator.audit(strict=True)
    assert error.value.violations[0].witness == {"e_face_detected": False}


def test_audit_ignores_event_feeders(arbitrator):
    arbitrator.register("C3")
    arbitrator.attach_monitor("C3", FeedsOnly())
    arbitrator.set_constraint_for("C1", "e_a")
    arbitrator.set_constraint_for("C2", "not e_a")
    report = arbitrator.audit(strict=True)
    assert report.clean
    assert report.lines()[-1] == "  consistency: OK"
    assert [connection for connection, _ in report.rules] == ["C1", "C2"]
