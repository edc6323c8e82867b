"""A module containing the deterministic scenario simulator.

A Simulation builds a bus from a manifest (stub modules, connections,
monitors), audits the arbitrators' constraints and then steps a virtual
clock at a fixed tick. On tick k (time t = k * tick) it

    1. advances the clock to t, firing due trigs and expiring events,
    2. applies the scripted world events due at or before t,
    3. lets every stub finish its running actions (step), in declaration
       order,
    4. lets every stub whose period divides t write its output (emit), in
       declaration order.

Nothing in a run depends on wall time or hash order, so equal manifests,
seeds and parameters give byte-identical ActionLogs.

Example:
    log = run_scenario("scenarios/reachable.manifest", 6.0, seed=7)
    print(log.text())
"""

from portkit.actionlog import ActionLog
from portkit.bus import Bus, Direction
from portkit.clock import Clock, quantize
from portkit.dsl import compile_monitor, load_monitor
from portkit.errors import ManifestError, UnknownPort
from portkit.manifest import load_manifest
from portkit.monitor import get_plugin
from portkit.stubs import make_stub
from portkit.world import WorldModel, step_world

# The default scheduler tick in seconds
DEFAULT_TICK = 0.05

# The default reach zones in meters
DEFAULT_HAND_REACHABLE = 0.4
DEFAULT_TOOL_REACHABLE = 0.8


def build_monitor(manifest, connection, params):
    """
    Build the plug-in of a manifest connection.

    Args:
        manifest (Manifest):
            The manifest the connection belongs to.
        connection (ConnectionDecl):
            The connection.
        params (dict):
            The parameter values for monitor files.

    Returns:
        MonitorPlugin:
            The plug-in (None if the connection has no monitor).
    """
    if connection.monitor is None:
        return None
    if connection.native is not None:
        try:
            return get_plugin(connection.native)
        except KeyError as error:
            raise ManifestError(
                str(error.args[0]), line=connection.line,
                source=manifest.source,
            )
    return compile_monitor(
        load_monitor(manifest.monitor_path(connection), params)
    )


class Simulation:
    """
    A class defining one run of a scenario.

    Attributes:
        manifest (Manifest):
            The scenario.
        seed (int):
            The seed of the stubs' random streams.
        tick (float):
            The scheduler tick in seconds.
        params (dict):
            The manifest parameters with any overrides applied.
        clock (Clock):
            The virtual clock.
        log (ActionLog):
            The trace of the run.
        bus (Bus):
            The message bus.
        world (WorldModel):
            The current world.
        modules (list):
            The stub modules in declaration order.
        reports (list):
            The ConsistencyReport of every arbitrated port.
    """

    def __init__(
        self, manifest, seed=0, tick=DEFAULT_TICK, params=None, strict=None
    ):
        """
        Build the scenario.

        Args:
            manifest (Manifest or str):
                The scenario (or the path to its manifest).
            seed (int):
                The seed of the stubs' random streams.
            tick (float):
                The scheduler tick in seconds.
            params (dict):
                Parameter overrides applied on top of the manifest's.
            strict (bool):
                Override the manifest's consistency mode.

        Raises:
            ManifestError:
                If the manifest refers to ports that do not exist.
            MonitorInitFailed:
                If a monitor's create callback fails.
            ConsistencyError:
                If the manifest is strict and constraints overlap.
        """
        if isinstance(manifest, str):
            manifest = load_manifest(manifest)
        if not tick > 0:
            raise ValueError(f"tick must be positive, got {tick}")

        self.manifest = manifest
        self.seed = int(seed)
        self.tick = float(tick)
        self.params = dict(manifest.params)
        self.params.update(params or {})

        self.clock = Clock()
        self.log = ActionLog()
        self.bus = Bus(self.clock, self.log)
        self.world = WorldModel(
            hand_reachable=self.params.get(
                "HAND_REACHABLE", DEFAULT_HAND_REACHABLE
            ),
            tool_reachable=self.params.get(
                "TOOL_REACHABLE", DEFAULT_TOOL_REACHABLE
            ),
        )
        self.pending = list(manifest.world_events)
        self.ticks = 0

        self.modules = []
        for decl in manifest.modules:
            try:
                stub = make_stub(
                    decl.kind, decl.name, self, **dict(decl.options)
                )
            except (KeyError, ValueError) as error:
                raise ManifestError(
                    str(error), line=decl.line, source=manifest.source
                )
            stub.open_ports()
            self.modules.append(stub)

        for connection in manifest.connections:
            self._connect(connection)

        if strict is None:
            strict = manifest.strict
        self.reports = self.bus.audit(strict=strict)

    def _connect(self, connection):
        """Create one manifest connection on the bus."""
        try:
            src = self.bus.find_port(
                connection.src_module, connection.src_port, Direction.OUT
            )
            dst = self.bus.find_port(
                connection.dst_module, connection.dst_port, Direction.IN
            )
        except UnknownPort as error:
            raise ManifestError(
                str(error), line=connection.line, source=self.manifest.source
            )
        plugin = build_monitor(self.manifest, connection, self.params)
        self.bus.connect(src, dst, monitor=plugin, label=connection.label)

    @property
    def now(self):
        """Return the current virtual time."""
        return self.clock.now

    def apply_world_events(self, t):
        """Apply the scripted world events due at or before t."""
        while self.pending and self.pending[0].time <= t:
            event = self.pending.pop(0)
            self.world = step_world(self.world, event)

    def step(self, k):
        """
        Run tick k.

        Args:
            k (int):
                The tick number.
        """
        t = quantize(k * self.tick)
        self.bus.advance_to(t)
        self.apply_world_events(t)
        for stub in self.modules:
            stub.step(t)
        for stub in self.modules:
            if stub.due(k, self.tick):
                stub.emit(t)
        self.ticks = k + 1

    def run(self, duration):
        """
        Run the scenario from the current tick up to a duration.

        Args:
            duration (float):
                The last virtual time to simulate (inclusive).

        Returns:
            ActionLog:
                The trace of the run.
        """
        if duration < 0:
            raise ValueError(f"duration must be nonnegative, got {duration}")
        last = int(round(duration / self.tick))
        for k in range(self.ticks, last + 1):
            self.step(k)
        return self.log


def run_scenario(manifest, duration, seed=0, tick=DEFAULT_TICK, params=None):
    """
    Build and run a scenario.

    Args:
        manifest (Manifest or str):
            The scenario (or the path to its manifest).
        duration (float):
            How long to simulate in virtual seconds.
        seed (int):
            The seed of the stubs' random streams.
        tick (float):
            The scheduler tick in seconds.
        params (dict):
            Parameter overrides.

    Returns:
        ActionLog:
            The trace of the run.
    """
    simulation = Simulation(manifest, seed=seed, tick=tick, params=params)
    return simulation.run(duration)
