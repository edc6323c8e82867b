"""A module for parsing scenario manifests.

A manifest wires stub modules together, one declaration per line:

    # search and track a face
    mode advisory
    param HAND_REACHABLE 0.4
    module face FaceDetector period=0.1
    module look LookAround
    module head HeadControl
    connect face.face head.gaze label=C1 monitor=face_c1.pm
    connect look.target head.gaze label=C2 monitor=native:passthrough
    world human on@2.0

Monitor paths are relative to the manifest's directory; "native:<name>"
refers to a registered hand-coded plug-in. Every problem is reported as a
ManifestError naming the file and line.

Example:
    manifest = load_manifest("scenarios/reachable.manifest")
    print(manifest.modules[0].kind)
"""

import os
from dataclasses import dataclass, field

from portkit.errors import ManifestError
from portkit.stubs import stub_kinds
from portkit.utils import PARAMETER_NAME
from portkit.world import parse_world_event

# The file extension of manifests
MANIFEST_SUFFIX = ".manifest"

# The prefix of native plug-in references
NATIVE_PREFIX = "native:"

MODES = ("strict", "advisory")


@dataclass(frozen=True)
class ModuleDecl:
    """A "module <name> <kind> [key=value ...]" line."""

    name: str
    kind: str
    options: tuple = ()
    line: object = None


@dataclass(frozen=True)
class ConnectionDecl:
    """
    A class defining a "connect" line.

    Attributes:
        src_module (str):
            The module owning the output port.
        src_port (str):
            The output port.
        dst_module (str):
            The module owning the input port.
        dst_port (str):
            The input port.
        label (str):
            The connection label (None for the bus default).
        monitor (str):
            The monitor reference (None for no monitor).
        line (int):
            The manifest line.
    """

    src_module: str
    src_port: str
    dst_module: str
    dst_port: str
    label: object = None
    monitor: object = None
    line: object = None

    @property
    def native(self):
        """Return the native plug-in name (None for monitor files)."""
        if self.monitor is not None and self.monitor.startswith(NATIVE_PREFIX):
            return self.monitor[len(NATIVE_PREFIX):]
        return None


@dataclass
class Manifest:
    """
    A class defining a parsed manifest.

    Attributes:
        source (str):
            The manifest file (None for inline text).
        modules (list):
            The ModuleDecls in declaration order.
        params (dict):
            The parameter values.
        connections (list):
            The ConnectionDecls in declaration order.
        world_events (list):
            The scripted WorldEvents in time order.
        mode (str):
            "strict" or "advisory" consistency checking.
    """

    source: object = None
    modules: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    connections: list = field(default_factory=list)
    world_events: list = field(default_factory=list)
    mode: str = "advisory"

    @property
    def name(self):
        """Return the scenario name (the file name without extension)."""
        if self.source is None:
            return "<inline>"
        base = os.path.basename(self.source)
        if base.endswith(MANIFEST_SUFFIX):
            base = base[: -len(MANIFEST_SUFFIX)]
        return base

    @property
    def directory(self):
        """Return the directory monitor paths are relative to."""
        if self.source is None:
            return os.getcwd()
        return os.path.dirname(os.path.abspath(self.source))

    @property
    def strict(self):
        """Return whether consistency violations are fatal."""
        return self.mode == "strict"

    def monitor_path(self, connection):
        """Return the monitor file of a connection (None if native/none)."""
        if connection.monitor is None or connection.native is not None:
            return None
        return os.path.join(self.directory, connection.monitor)

    def module(self, name):
        """Return the ModuleDecl of a module name (None if undeclared)."""
        for module in self.modules:
            if module.name == name:
                return module
        return None


def _endpoint(text, error):
    """Split "module.port"."""
    module, dot, port = text.partition(".")
    if not dot or not module or not port or "." in port:
        raise error(f"malformed port {text!r}", "<module>.<port>")
    return module, port


def _options(words, error, allowed=None):
    """Parse key=value words."""
    options = {}
    for word in words:
        key, eq, value = word.partition("=")
        if not eq or not key or not value:
            raise error(f"malformed option {word!r}", "key=value")
        if allowed is not None and key not in allowed:
            raise error(f"unknown option {key!r}", " or ".join(allowed))
        if key in options:
            raise error(f"option {key!r} given twice")
        options[key] = value
    return options


def parse_manifest(text, source=None):
    """
    Parse manifest text.

    Args:
        text (str):
            The manifest text.
        source (str):
            The manifest file, for errors and relative monitor paths.

    Returns:
        Manifest:
            The parsed manifest.

    Raises:
        ManifestError:
            If any line is malformed.
    """
    manifest = Manifest(source=source)
    labels = set()
    mode_seen = False

    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        words = stripped.split()
        keyword, operands = words[0], words[1:]

        def error(reason, expected=None):
            return ManifestError(
                reason, expected=expected, line=number, source=source
            )

        if keyword == "module":
            if len(operands) < 2:
                raise error("module needs a name and a kind",
                            "module <name> <kind> [key=value ...]")
            name, kind = operands[0], operands[1]
            if manifest.module(name) is not None:
                raise error(f"module {name!r} declared twice")
            if kind not in stub_kinds():
                raise error(f"unknown module kind {kind!r}",
                            ", ".join(stub_kinds()))
            options = _options(operands[2:], error)
            manifest.modules.append(
                ModuleDecl(name, kind, tuple(options.items()), number)
            )

        elif keyword == "param":
            if len(operands) != 2:
                raise error("malformed param line", "param <NAME> <number>")
            name, value = operands
            if not PARAMETER_NAME.fullmatch(name):
                raise error(f"{name!r} is not a parameter name",
                            "an upper case name")
            try:
                manifest.params[name] = float(value)
            except ValueError:
                raise error(f"invalid number {value!r}", "a number")

        elif keyword == "connect":
            if len(operands) < 2:
                raise error("connect needs two ports",
                            "connect <module>.<port> <module>.<port>")
            src_module, src_port = _endpoint(operands[0], error)
            dst_module, dst_port = _endpoint(operands[1], error)
            for module in (src_module, dst_module):
                if manifest.module(module) is None:
                    raise error(f"undeclared module {module!r}")
            options = _options(operands[2:], error, ("label", "monitor"))
            label = options.get("label")
            if label is not None:
                if label in labels:
                    raise error(f"connection label {label!r} used twice")
                labels.add(label)
            manifest.connections.append(
                ConnectionDecl(
                    src_module, src_port, dst_module, dst_port,
                    label, options.get("monitor"), number,
                )
            )

        elif keyword == "world":
            spec, at, when = " ".join(operands).rpartition("@")
            if not at:
                raise error("world event needs a time", "<event>@<time>")
            try:
                time = float(when)
            except ValueError:
                raise error(f"invalid time {when!r}", "a number")
            if time < 0:
                raise error(f"negative time {time}")
            try:
                manifest.world_events.append(parse_world_event(spec, time))
            except ValueError as e:
                raise error(str(e))

        elif keyword == "mode":
            if len(operands) != 1 or operands[0] not in MODES:
                raise error("malformed mode line", "mode strict|advisory")
            if mode_seen:
                raise error("mode given twice")
            mode_seen = True
            manifest.mode = operands[0]

        else:
            raise error(f"unknown declaration {keyword!r}",
                        "module, param, connect, world or mode")

    # Stable, so events at the same time keep their manifest order
    manifest.world_events.sort(key=lambda event: event.time)

    return manifest


def load_manifest(path):
    """
    Read and parse a manifest file.

    Args:
        path (str):
            The manifest file.

    Returns:
        Manifest:
            The parsed manifest.

    Raises:
        OSError:
            If the file cannot be read.
        ManifestError:
            If the manifest is malformed.
    """
    with open(path, "r") as file:
        text = file.read()
    return parse_manifest(text, source=path)
