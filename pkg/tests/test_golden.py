"""Compare the shipped scenarios with their blessed logs.

Golden logs are written with "portkit run <scenario> --bless" and every
shipped scenario must have one.
"""

import os

import pytest

from portkit.actionlog import ActionLog, diff_logs
from portkit.main import golden_path, scenario_defaults, scenario_dir
from portkit.manifest import load_manifest
from portkit.simulator import run_scenario

SCENARIOS = [
    "search_and_track",
    "reachable",
    "drop",
    "tool",
    "tool_intervention",
    "full",
]


@pytest.mark.parametrize("name", SCENARIOS)
def test_golden_log(name):
    manifest = load_manifest(
        os.path.join(scenario_dir(), f"{name}.manifest")
    )
    path = golden_path(manifest)
    assert os.path.isfile(path), f"no golden log for {name}"

    duration, seed = scenario_defaults(manifest)
    log = run_scenario(manifest, duration, seed=seed)
    divergences = diff_logs(ActionLog.read(path), log)
    assert not divergences, str(divergences[0])
