import io

import pytest

from portkit.actionlog import ActionLog, LineKind
from portkit.logger import Logger
from portkit.main import main, resolve_manifest
from portkit.simulator import run_scenario

OVERLAPPING = """\
mode strict
module look LookAround
module objects ObjectDetector
module head HeadControl
connect look.target head.gaze
connect objects.objects head.gaze
"""


@pytest.fixture(autouse=True)
def quiet_again():
    """Commands reconfigure the logger, so restore the quiet one."""
    yield
    Logger(silent=True)


def portkit(*argv):
    """Run the command line and return its exit status."""
    with pytest.raises(SystemExit) as exit_info:
        main(list(argv))
    return exit_info.value.code


def test_no_arguments_prints_help(capsys):
    assert portkit() == 0
    assert "usage" in capsys.readouterr().out


@pytest.mark.parametrize(
    "symbols, result",
    [(["e_arm_idle"], "true"), (["e_arm_idle", "e_taken"], "false"),
     ([], "false")],
)
def test_eval(capsys, symbols, result):
    assert portkit("eval", "not e_taken and e_arm_idle", *symbols) == 0
    assert capsys.readouterr().out == result + "\n"


def test_eval_errors(capsys):
    assert portkit("eval", "and e_a") == 2
    assert "error" in capsys.readouterr().err
    assert portkit("eval", "e_a", "and") == 2
    with pytest.raises(SystemExit):
        main(["eval"])


def test_eval_repl(capsys, monkeypatch):
    monkeypatch.setattr(
        "sys.stdin",
        io.StringIO(
            "e_a and e_b ; e_a e_b\n"
            "# skipped\n"
            "\n"
            "not e_a\n"
            "e_a and\n"
            "e_a or e_b ; e_b\n"
        ),
    )
    assert portkit("eval", "--repl") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "true"
    assert lines[1] == "true"
    assert lines[2].startswith("error: ")
    assert lines[3] == "true"
    assert len(lines) == 4


def test_check_reports_every_port(capsys):
    assert portkit("check", "search_and_track") == 0
    out = capsys.readouterr().out
    assert "head.gaze:" in out
    assert "overlap C1/C2" in out

    assert portkit("check", "reachable") == 0
    assert "consistency: OK" in capsys.readouterr().out


def test_strict_overlap_exits_3(tmp_path):
    path = tmp_path / "overlap.manifest"
    path.write_text(OVERLAPPING)
    assert portkit("check", str(path)) == 3
    assert portkit("run", str(path), "--duration", "1") == 3


def test_parse_errors_exit_2(tmp_path):
    malformed = tmp_path / "malformed.manifest"
    malformed.write_text("mode relaxed\n")
    assert portkit("check", str(malformed)) == 2

    (tmp_path / "bad.pm").write_text("frobnicate\n")
    unknown_stage = tmp_path / "unknown_stage.manifest"
    unknown_stage.write_text(
        "module look LookAround\n"
        "module head HeadControl\n"
        "connect look.target head.gaze monitor=bad.pm\n"
    )
    assert portkit("run", str(unknown_stage)) == 2


def test_missing_manifest_exits_1(capsys):
    assert portkit("check", "no_such_scenario") == 1
    assert "no_such_scenario" in capsys.readouterr().err


def test_run_to_stdout(capsys):
    assert portkit("run", "reachable") == 0
    out = capsys.readouterr().out
    expected = run_scenario(resolve_manifest("reachable"), 6.0, seed=7)
    assert out == expected.text()
    assert ActionLog.from_text(out).filter(LineKind.ACTION, "arm")


def test_run_then_diff(tmp_path, capsys):
    actual = tmp_path / "reachable.log"
    assert portkit("run", "reachable", "--out", str(actual)) == 0
    assert portkit("diff", str(actual), str(actual)) == 0
    assert "logs match" in capsys.readouterr().out

    edited = tmp_path / "edited.log"
    edited.write_text(actual.read_text().replace('"take"', '"took"', 1))
    assert portkit("diff", str(actual), str(edited)) == 4
    assert "logs diverge at line" in capsys.readouterr().out

    assert portkit("run", "drop", "--expect", str(actual)) == 4
    assert portkit("run", "reachable", "--expect", str(actual)) == 0


@pytest.mark.parametrize(
    "overrides",
    [["--param", "HAND_REACHABLE=0.2"], ["--params", "PARAMS_FILE"]],
)
def test_parameter_overrides(capsys, params_file, overrides):
    overrides = [
        params_file if item == "PARAMS_FILE" else item for item in overrides
    ]
    assert portkit("run", "reachable", *overrides) == 0
    log = ActionLog.from_text(capsys.readouterr().out)
    assert log.filter(LineKind.ACTION, "arm") == []


def test_bad_param_override():
    with pytest.raises(SystemExit) as exit_info:
        main(["run", "reachable", "--param", "hand=0.2"])
    assert exit_info.value.code == 2


def test_scenario_directory_override(tmp_path, monkeypatch, capsys):
    (tmp_path / "mini.manifest").write_text(
        "module look LookAround\n"
        "module head HeadControl\n"
        "connect look.target head.gaze\n"
    )
    monkeypatch.setenv("PORTKIT_SCENARIO_DIR", str(tmp_path))
    assert portkit("check", "mini") == 0
    assert "consistency: OK" in capsys.readouterr().out
    assert portkit("check", "reachable") == 1
