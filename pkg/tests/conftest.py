"""Shared fixtures for the portkit tests."""

import os

import pytest

from portkit.actionlog import ActionLog
from portkit.bus import Bus
from portkit.clock import Clock
from portkit.logger import Logger

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture(autouse=True, scope="session")
def quiet_logger():
    """Keep the chatter out of the test output."""
    return Logger(silent=True)


@pytest.fixture
def clock():
    return Clock()


@pytest.fixture
def log():
    return ActionLog()


@pytest.fixture
def bus(clock, log):
    return Bus(clock, log)


@pytest.fixture
def params_file():
    return os.path.join(TESTS_DIR, "params.yaml")
