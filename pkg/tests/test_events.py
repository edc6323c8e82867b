import pytest

from portkit.actionlog import LineKind
from portkit.errors import InvalidLifetime, InvalidSymbol
from portkit.events import EventContainer, validate_symbol


@pytest.fixture
def container(clock, log):
    return EventContainer(clock, log)


def test_lifetime_is_half_open(clock, container):
    container.set_event("e_face_detected", "C1", 1.0)
    clock.advance_to(0.999)
    assert container.is_active("e_face_detected")
    clock.advance_to(1.0)
    assert not container.is_active("e_face_detected")


def test_refresh_extends_the_lifetime(clock, container, log):
    container.set_event("e_face_detected", "C1", 1.0)
    clock.advance_to(0.8)
    container.set_event("e_face_detected", "C1", 1.0)
    clock.advance_to(1.799)
    assert container.is_active("e_face_detected")
    clock.advance_to(1.8)
    assert not container.is_active("e_face_detected")

    # The first record was replaced, so only one expiry is logged
    expired = log.filter(LineKind.EVENT_EXPIRE)
    assert [str(line) for line in expired] == [
        '1.800 EVENT_EXPIRE C1 ("e_face_detected")'
    ]


def test_infinite_lifetime(clock, container):
    container.set_event("e_unreachable", "C7")
    clock.advance(1000.0)
    assert container.snapshot() == frozenset({"e_unreachable"})


def test_events_are_owned(container):
    container.set_event("e_arm_idle", "C3", 0.5)
    container.set_event("e_arm_idle", "C5", 0.5)
    assert container.unset_event("e_arm_idle", "C3")
    assert container.is_active("e_arm_idle")
    assert not container.unset_event("e_arm_idle", "C3")
    assert container.unset_event("e_arm_idle", "C5")
    assert not container.is_active("e_arm_idle")


def test_owned_by(container):
    container.set_event("e_b", "C1")
    container.set_event("e_a", "C1")
    container.set_event("e_c", "C2")
    assert container.owned_by("C1") == ["e_a", "e_b"]


def test_trace_lines(clock, container, log):
    container.set_event("e_taken", "C3", 0.5)
    container.set_event("e_unreachable", "C7")
    clock.advance(0.25)
    container.unset_event("e_unreachable", "C7")
    assert [str(line) for line in log] == [
        '0.000 EVENT_SET C3 ("e_taken" 0.5)',
        '0.000 EVENT_SET C7 ("e_unreachable")',
        '0.250 EVENT_UNSET C7 ("e_unreachable")',
    ]


def test_expiry_is_logged_when_the_clock_moves(clock, container, log):
    container.set_event("e_taken", "C3", 0.5)
    clock.advance(0.5)
    assert len(container) == 0
    assert str(log[-1]) == '0.500 EVENT_EXPIRE C3 ("e_taken")'


@pytest.mark.parametrize("lifetime", [0, -1.0])
def test_invalid_lifetime(container, lifetime):
    with pytest.raises(InvalidLifetime):
        container.set_event("e_x", "C1", lifetime)


@pytest.mark.parametrize("name", ["and", "not", "1abc", "e-x", ""])
def test_invalid_symbol(name):
    with pytest.raises(InvalidSymbol):
        validate_symbol(name)
