"""A module containing the clock driving the kernel.

The clock runs in one of two modes. In virtual mode time only moves when
advance is called, which makes event expiry and periodic trig callbacks
fully deterministic. In real mode advance also sleeps for the requested
step so the same code can drive a live system.

Periodic timers (used for monitor trig callbacks) are registered on the
clock. Their deadlines are aligned to the registration time: the first
deadline is start + period, then start + 2 * period and so on. Advancing
from t0 to t1 fires every deadline d with t0 < d <= t1 in deadline order,
setting the clock to d while each one fires, so a large step fires every
missed deadline exactly once.

All times are quantized to nanoseconds so tick arithmetic stays exact.

Example:
    clock = Clock()
    clock.every(0.5, lambda: print("tick"))
    clock.advance(1.0)  # prints tick twice
"""

import enum
import threading
import time

from portkit.errors import NegativeStep

# Number of decimal places virtual times are rounded to
TIME_DECIMALS = 9


def quantize(seconds):
    """Round a time to the clock's resolution."""
    return round(float(seconds), TIME_DECIMALS)


class ClockMode(enum.Enum):
    """The modes a clock can run in."""

    VIRTUAL = "virtual"
    REAL = "real"


class Timer:
    """
    A periodic timer registered on a clock.

    Attributes:
        period (float):
            The interval between deadlines.
        start (float):
            The time the timer was registered.
        callback (callable):
            The function called at each deadline.
        fired (int):
            The number of deadlines fired so far.
        active (bool):
            Whether the timer is still scheduled.
    """

    def __init__(self, period, start, callback, order):
        """
        Create the timer.

        Args:
            period (float):
                The interval between deadlines.
            start (float):
                The time the timer was registered.
            callback (callable):
                The function called at each deadline.
            order (int):
                The registration order, used to break deadline ties.
        """
        self.period = period
        self.start = start
        self.callback = callback
        self.order = order
        self.fired = 0
        self.active = True

    @property
    def next_deadline(self):
        """Return the next deadline of the timer."""
        return quantize(self.start + (self.fired + 1) * self.period)

    def cancel(self):
        """Stop the timer from firing again."""
        self.active = False


class Clock:
    """
    A class defining the clock of a bus.

    Attributes:
        mode (ClockMode):
            Whether the clock is virtual or real.
        now (float):
            The current time in seconds.
    """

    def __init__(self, mode=ClockMode.VIRTUAL, start=0.0):
        """
        Create the clock.

        Args:
            mode (ClockMode):
                Whether the clock is virtual or real.
            start (float):
                The initial time in seconds.
        """
        self.mode = ClockMode(mode)
        self._now = quantize(start)
        self._timers = []
        self._listeners = []
        self._order = 0
        self._lock = threading.RLock()

    def __str__(self):
        """Return the string representation of the clock."""
        return f"Clock({self.mode.value}, now={self._now:.3f})"

    @property
    def now(self):
        """Return the current time."""
        return self._now

    def every(self, period, callback):
        """
        Register a periodic callback.

        Args:
            period (float):
                The interval between calls, strictly positive.
            callback (callable):
                The function to call at each deadline.

        Returns:
            Timer:
                The registered timer (cancel it to stop the calls).
        """
        if period <= 0:
            raise ValueError(f"timer period must be positive, got {period}")
        with self._lock:
            timer = Timer(quantize(period), self._now, callback, self._order)
            self._order += 1
            self._timers.append(timer)
        return timer

    def subscribe(self, listener):
        """
        Register a function called with the new time after every advance.

        Args:
            listener (callable):
                The function to call.
        """
        with self._lock:
            self._listeners.append(listener)

    def advance(self, dt):
        """
        Move the clock forward by dt seconds.

        Args:
            dt (float):
                The step, nonnegative.

        Returns:
            float:
                The new time.

        Raises:
            NegativeStep:
                If dt is negative.
        """
        if dt < 0:
            raise NegativeStep(f"cannot advance the clock by {dt} s")
        return self.advance_to(self._now + dt)

    def advance_to(self, target):
        """
        Move the clock forward to an absolute time.

        Every timer deadline up to and including target fires (in order)
        before the listeners are told about the new time.

        Args:
            target (float):
                The time to move to, not before now.

        Returns:
            float:
                The new time.

        Raises:
            NegativeStep:
                If target is before now.
        """
        target = quantize(target)
        with self._lock:
            if target < self._now:
                raise NegativeStep(
                    f"cannot move the clock back from {self._now} "
                    f"to {target}"
                )

            if self.mode is ClockMode.REAL and target > self._now:
                time.sleep(target - self._now)

            # Fire the due deadlines one at a time in time order so that a
            # callback registering or cancelling timers is honoured
            while True:
                due = [
                    timer
                    for timer in self._timers
                    if timer.active and timer.next_deadline <= target
                ]
                if not due:
                    break
                timer = min(
                    due, key=lambda item: (item.next_deadline, item.order)
                )
                self._now = timer.next_deadline
                timer.fired += 1
                timer.callback()

            # Drop cancelled timers
            self._timers = [timer for timer in self._timers if timer.active]

            self._now = target
            for listener in list(self._listeners):
                listener(self._now)

        return self._now
