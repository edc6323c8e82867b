"""A module containing the event container shared by an arbitrator's monitors.

Monitors insert named symbolic events into the container of the input port
they feed. An event lives forever unless it is given a lifetime, in which
case it is active on the half-open interval [set time, set time + lifetime).
Each record is owned by the connection that set it: a connection can only
remove its own records, and an event name is active while any owner holds
an unexpired record of it.

Expired records are purged lazily (on queries, snapshots and clock advances)
and each purge is written to the ActionLog as an EVENT_EXPIRE line.

Example:
    container = EventContainer(clock, log)
    container.set_event("e_face_detected", "C1", 1.0)
    container.is_active("e_face_detected")  # True until 1 s later
"""

import re
import threading

from portkit.actionlog import LineKind
from portkit.clock import quantize
from portkit.errors import InvalidLifetime, InvalidSymbol

# The syntax of an event name
SYMBOL = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")

# Words that can never be event names
RESERVED_WORDS = frozenset({"true", "false", "and", "or", "not"})


def validate_symbol(name):
    """
    Check that a name is usable as an event.

    Args:
        name (str):
            The name to check.

    Returns:
        str:
            The name.

    Raises:
        InvalidSymbol:
            If the name is not an identifier or is a reserved word.
    """
    if not isinstance(name, str) or not SYMBOL.fullmatch(name):
        raise InvalidSymbol(f"{name!r} is not a valid event name")
    if name in RESERVED_WORDS:
        raise InvalidSymbol(f"{name!r} is a reserved word")
    return name


class EventRecord:
    """
    A class defining one event held by the container.

    Attributes:
        name (str):
            The event symbol.
        owner (str):
            The label of the connection that set it.
        expiry (float):
            The absolute expiry time, None for an infinite lifetime.
        lifetime (float):
            The lifetime it was set with, None for infinite.
    """

    __slots__ = ("name", "owner", "expiry", "lifetime")

    def __init__(self, name, owner, expiry=None, lifetime=None):
        """
        Create the record.

        Args:
            name (str):
                The event symbol.
            owner (str):
                The label of the connection that set it.
            expiry (float):
                The absolute expiry time (None for infinite).
            lifetime (float):
                The lifetime it was set with (None for infinite).
        """
        self.name = name
        self.owner = owner
        self.expiry = expiry
        self.lifetime = lifetime

    def __repr__(self):
        """Return the debugging representation of the record."""
        return (
            f"EventRecord({self.name!r}, owner={self.owner!r}, "
            f"expiry={self.expiry!r})"
        )

    def active_at(self, now):
        """Return whether the record is active at a time."""
        return self.expiry is None or now < self.expiry


class EventContainer:
    """
    A class defining the shared store of symbolic events.

    Attributes:
        clock (Clock):
            The clock providing the current time.
        log (ActionLog):
            The log event mutations are written to (optional).
    """

    def __init__(self, clock, log=None):
        """
        Create the container.

        Args:
            clock (Clock):
                The clock providing the current time.
            log (ActionLog):
                The log event mutations are written to (optional).
        """
        self.clock = clock
        self.log = log
        self._records = {}
        self._lock = threading.RLock()

        # Purge expired records whenever the clock moves
        clock.subscribe(lambda now: self.purge())

    def __len__(self):
        """Return the number of records currently held."""
        with self._lock:
            return len(self._records)

    @property
    def records(self):
        """Return a copy of the records currently held."""
        with self._lock:
            return list(self._records.values())

    def _record(self, kind, owner, payload):
        """Write a line to the log (if there is one)."""
        if self.log is not None:
            self.log.append(self.clock.now, kind, owner, payload)

    def set_event(self, name, owner, lifetime=None):
        """
        Insert (or refresh) an event owned by a connection.

        Args:
            name (str):
                The event symbol.
            owner (str):
                The label of the owning connection.
            lifetime (float):
                The lifetime in seconds, None for infinite.

        Raises:
            InvalidSymbol:
                If the name is not a valid event name.
            InvalidLifetime:
                If the lifetime is not strictly positive.
        """
        validate_symbol(name)
        if lifetime is not None:
            lifetime = float(lifetime)
            if not lifetime > 0:
                raise InvalidLifetime(
                    f"event lifetime must be positive, got {lifetime}"
                )

        with self._lock:
            now = self.clock.now
            expiry = quantize(now + lifetime) if lifetime is not None else None
            self._records[(name, owner)] = EventRecord(
                name, owner, expiry, lifetime
            )
            payload = (name, lifetime) if lifetime is not None else (name,)
            self._record(LineKind.EVENT_SET, owner, payload)

    def unset_event(self, name, owner):
        """
        Remove the event record owned by a connection.

        Args:
            name (str):
                The event symbol.
            owner (str):
                The label of the owning connection.

        Returns:
            bool:
                Whether a record was removed.
        """
        with self._lock:
            self.purge()
            record = self._records.pop((name, owner), None)
            if record is None:
                return False
            self._record(LineKind.EVENT_UNSET, owner, (name,))
            return True

    def purge(self):
        """
        Drop every expired record, logging each one.

        Returns:
            list:
                The records that expired.
        """
        with self._lock:
            now = self.clock.now
            expired = [
                record
                for record in self._records.values()
                if not record.active_at(now)
            ]
            for record in expired:
                del self._records[(record.name, record.owner)]
                self._record(
                    LineKind.EVENT_EXPIRE, record.owner, (record.name,)
                )
            return expired

    def is_active(self, name):
        """
        Return whether any owner holds an unexpired record of an event.

        Args:
            name (str):
                The event symbol.

        Returns:
            bool:
                Whether the event is active now.
        """
        with self._lock:
            self.purge()
            return any(
                record.name == name for record in self._records.values()
            )

    def snapshot(self):
        """
        Return the set of active event names.

        Returns:
            frozenset:
                The names for which is_active holds.
        """
        with self._lock:
            self.purge()
            return frozenset(record.name for record in self._records.values())

    def owned_by(self, owner):
        """Return the names of the events currently held by an owner."""
        with self._lock:
            self.purge()
            return sorted(
                record.name
                for record in self._records.values()
                if record.owner == owner
            )
