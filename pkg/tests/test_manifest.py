import glob
import os

import pytest

from portkit.errors import ManifestError
from portkit.main import scenario_dir
from portkit.manifest import load_manifest, parse_manifest
from portkit.world import WorldEvent

SEARCH = """\
# search and track a face
mode advisory
param DESIRED_TIME 5
module face FaceDetector period=0.1
module look LookAround
module head HeadControl
connect face.face head.gaze label=C1 monitor=face_track.pm
connect look.target head.gaze monitor=native:passthrough  # no label
world human off@4.05
world human on@2.0
"""


def test_parse_manifest():
    manifest = parse_manifest(SEARCH)
    assert manifest.name == "<inline>"
    assert manifest.mode == "advisory"
    assert not manifest.strict
    assert manifest.params == {"DESIRED_TIME": 5.0}
    assert [m.name for m in manifest.modules] == ["face", "look", "head"]
    assert manifest.module("face").options == (("period", "0.1"),)
    assert manifest.module("arm") is None

    first, second = manifest.connections
    assert (first.src_module, first.src_port) == ("face", "face")
    assert (first.dst_module, first.dst_port) == ("head", "gaze")
    assert first.label == "C1"
    assert first.native is None
    assert second.label is None
    assert second.native == "passthrough"
    assert second.line == 8

    # World events are kept in time order
    assert manifest.world_events == [
        WorldEvent("human", 2.0, state=True),
        WorldEvent("human", 4.05, state=False),
    ]


def test_monitor_paths_are_relative_to_the_manifest(tmp_path):
    path = tmp_path / "search.manifest"
    path.write_text(SEARCH)
    manifest = load_manifest(str(path))
    assert manifest.name == "search"
    first, second = manifest.connections
    assert manifest.monitor_path(first) == str(tmp_path / "face_track.pm")
    assert manifest.monitor_path(second) is None


@pytest.mark.parametrize(
    "text, line",
    [
        ("module face\n", 1),
        ("module face Teleporter\n", 1),
        ("module face FaceDetector\nmodule face Speak\n", 2),
        ("module face FaceDetector period\n", 1),
        ("param hand 0.4\n", 1),
        ("param HAND far\n", 1),
        ("module a Speak\nconnect a.text b.text\n", 2),
        ("module a Speak\nconnect a b.text\n", 2),
        ("module a Speak\nconnect a.x a.y colour=red\n", 2),
        (
            "module a Speak\nconnect a.x a.y label=C1\n"
            "connect a.x a.y label=C1\n",
            3,
        ),
        ("\nworld human on\n", 2),
        ("world human on@soon\n", 1),
        ("world human on@-1\n", 1),
        ("world teleport o1@1.0\n", 1),
        ("mode relaxed\n", 1),
        ("mode strict\nmode advisory\n", 2),
        ("wire a.x b.y\n", 1),
    ],
)
def test_manifest_errors(text, line):
    with pytest.raises(ManifestError) as error:
        parse_manifest(text, source="bad.manifest")
    assert error.value.line == line
    assert error.value.source == "bad.manifest"
    assert "bad.manifest" in str(error.value)


def test_shipped_manifests_parse():
    paths = sorted(glob.glob(os.path.join(scenario_dir(), "*.manifest")))
    assert len(paths) == 6
    for path in paths:
        manifest = load_manifest(path)
        assert manifest.modules
        assert manifest.connections
        labels = [c.label for c in manifest.connections]
        assert len(set(labels)) == len(labels)
