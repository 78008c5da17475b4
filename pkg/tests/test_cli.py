import csv
import io
import json

import pytest
from click.testing import CliRunner

from freetorus import __version__
from freetorus.cli.main import cli
from freetorus.core.action import ActionSpec
from freetorus.core.analytic import FreeActionFamily
from freetorus.core.fixtures import EXAMPLES, fundamental_action
from freetorus.core.normal_form import NormalFormResult


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "freetorus.yaml"
    path.write_text("h_box: 1\nscan:\n  box: 1\n  grid: 16\n")
    return str(path)


def run_json(runner, args, input=None):
    result = runner.invoke(cli, args, input=input)
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


def orbit_rows(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["step", "x", "y", "z"]
    return [[float(value) for value in row[1:]] for row in rows[1:]]


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_check_fundamental(runner):
    report = run_json(runner, ["check", "--example", "fundamental"])
    assert report["spectral"]["status"] == "ExactlyVerified"
    assert report["spectral"]["closure_size"] == 4
    assert report["fix_lattice"] == []
    assert report["hypotheses"]["satisfied"]
    assert report["config"]["subcommand"] == "check"


def test_check_reads_stdin(runner):
    action = fundamental_action(2, -1, 0, 1)
    report = run_json(runner, ["check"], input=action.to_json())
    assert report["action"] == {"p": 2, "q": 3}


def test_check_out_of_scope_action_still_reports(runner):
    report = run_json(runner, ["check", "--example", "non-klein-z4"])
    assert report["spectral"]["status"] == "VerifiedOnBox"
    assert not report["hypotheses"]["satisfied"]


@pytest.mark.parametrize(
    "payload, code",
    [
        (json.dumps({"p": 2, "q": 2, "generators": [[[1, 1], [0, 1]], [[1, 0], [1, 1]]]}), 1),
        ('{"p": 2,', 2),
        (json.dumps({"p": 1, "q": 2, "generators": [[[2, 0], [0, 1]]]}), 2),
    ],
)
def test_check_errors_exit_codes(runner, payload, code):
    result = runner.invoke(cli, ["check"], input=payload)
    assert result.exit_code == code


def test_normal_form_of_twisted_example(runner):
    report = run_json(runner, ["normal-form", "--example", "fundamental-twisted"])
    nf = report["normal_form"]
    assert (nf["a"], nf["b"], nf["c"], nf["d"]) == (2, -1, 0, 1)
    assert report["verification"] == {"ok": True, "violations": []}


def test_normal_form_text(runner):
    result = runner.invoke(cli, ["normal-form", "--example", "klein-p3", "--format", "text"])
    assert result.exit_code == 0
    assert result.stdout.startswith("Normal form (a, b, c, d) = (")
    assert "Verification: ok" in result.stdout


def test_construct_output_feeds_orbit(runner):
    construct = runner.invoke(cli, ["construct", "--example", "fundamental"])
    assert construct.exit_code == 0
    assert json.loads(construct.stdout)["formulas"][0].startswith("φ₁(x, y, z)")

    result = runner.invoke(
        cli, ["orbit", "--word", "1,1", "--alpha", "0.5,0.25"], input=construct.stdout
    )
    assert result.exit_code == 0, result.output
    rows = orbit_rows(result.stdout)
    assert len(rows) == 3
    assert rows[1] == pytest.approx([0.25, 0.0, 0.0])
    assert rows[2] == pytest.approx([0.5, 0.0, 0.0])


def test_orbit_from_example_to_file(runner, tmp_path):
    path = tmp_path / "orbit.csv"
    result = runner.invoke(
        cli, ["orbit", "--example", "fundamental", "--word", "1,-1", "-o", str(path)]
    )
    assert result.exit_code == 0, result.output
    rows = orbit_rows(path.read_text(encoding="utf-8"))
    assert len(rows) == 3
    assert rows[0] == [0.0, 0.0, 0.0]


def test_orbit_half_turns_in_z(runner):
    result = runner.invoke(cli, ["orbit", "--example", "fundamental", "--word", "2,2"])
    assert result.exit_code == 0, result.output
    assert [row[2] for row in orbit_rows(result.stdout)] == pytest.approx([0.0, 0.5, 0.0])

    result = runner.invoke(cli, ["orbit", "--example", "fundamental"])
    assert result.exit_code == 0, result.output
    assert orbit_rows(result.stdout) == [[0.0, 0.0, 0.0]]


def test_orbit_rejects_bad_word(runner):
    result = runner.invoke(cli, ["orbit", "--example", "fundamental", "--word", "1,x"])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["orbit", "--example", "fundamental", "--word", "3"])
    assert result.exit_code == 2


def test_verify_free_fundamental(runner):
    report = run_json(runner, ["verify-free", "--example", "fundamental"])
    assert report["action_law"]["defects"] == {"1,2": [0, 0, 1]}
    assert all(report["action_law"]["identities"].values())
    assert report["freeness"]["checked"] == 49
    assert report["freeness"]["no_fixed_point"] == 48
    assert report["lifting"]["free"]
    assert report["lifting"]["index"] == 4
    assert report["freeness"]["samples"][0]["obstruction"]["identity"] == (
        "α₁² = (n₁)² + (n₂)²"
    )


def test_verify_free_with_scan(runner, small_config):
    report = run_json(
        runner, ["-c", small_config, "verify-free", "--example", "klein-p3", "--scan"]
    )
    assert report["freeness"]["checked"] == 27
    assert report["scan"]["flagged"] == []
    assert len(report["scan"]["minima"]) == 26
    assert report["scan"]["smallest"] > 0.0


def test_verify_free_rejects_fixed_line(runner):
    result = runner.invoke(cli, ["verify-free", "--example", "fixed-line"])
    assert result.exit_code == 1


def test_report_written_to_file(runner, tmp_path):
    path = tmp_path / "out" / "report.json"
    result = runner.invoke(cli, ["check", "--example", "fundamental", "-o", str(path)])
    assert result.exit_code == 0
    assert result.stdout == ""
    assert json.loads(path.read_text(encoding="utf-8"))["hypotheses"]["satisfied"]


def test_demo(runner, small_config):
    report = run_json(runner, ["-c", small_config, "demo", "--seed", "7"])
    examples = report["examples"]
    assert set(examples) == set(EXAMPLES)
    for name in ("fundamental", "fundamental-twisted", "klein-p3", "klein-p4"):
        assert examples[name]["check"]["hypotheses"]["satisfied"], name
        assert examples[name]["pipeline"]["lifting"]["free"], name
    for name in ("non-klein-z4", "fixed-line"):
        assert not examples[name]["check"]["hypotheses"]["satisfied"], name
        assert "pipeline" not in examples[name]
    nf = examples["fundamental-twisted"]["pipeline"]["normal_form"]
    assert nf["a"] * nf["d"] + 2 * (nf["b"] + nf["c"]) == 0


def test_demo_text(runner, small_config):
    result = runner.invoke(
        cli, ["-c", small_config, "demo", "--name", "fundamental", "--format", "text"]
    )
    assert result.exit_code == 0
    assert result.stdout.startswith("fundamental: ")
    assert "free: True" in result.stdout


def test_bad_config_file(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("unknown: 1\n")
    result = runner.invoke(cli, ["-c", str(path), "check", "--example", "fundamental"])
    assert result.exit_code == 2


def test_non_utf8_input_is_an_input_error(runner, tmp_path):
    path = tmp_path / "action.json"
    path.write_bytes(b'{"p": 2, "q": 3, "generators": \xff\xfe}')
    result = runner.invoke(cli, ["check", str(path)])
    assert result.exit_code == 2
    assert "UTF-8" in result.stderr


@pytest.mark.parametrize(
    "args",
    [
        ["verify-free", "--example", "fundamental-twisted"],
        ["demo", "--seed", "3", "--name", "klein-p3"],
        ["orbit", "--example", "klein-p3", "--word", "1,2,3,-2", "--start", "0.1,0.2,0.3"],
    ],
)
def test_identical_runs_give_identical_output(runner, small_config, args):
    first = runner.invoke(cli, ["-c", small_config] + args)
    second = runner.invoke(cli, ["-c", small_config] + args)
    assert first.exit_code == 0, first.output
    assert first.stdout_bytes == second.stdout_bytes


def test_reports_load_back_through_their_parsers(runner, small_config):
    report = run_json(runner, ["normal-form", "--example", "klein-p4"])
    result = NormalFormResult.from_dict(report["normal_form"])
    assert result.to_dict() == report["normal_form"]

    report = run_json(runner, ["construct", "--example", "fundamental-twisted"])
    family = FreeActionFamily.from_dict(report["family"])
    assert family.to_dict() == report["family"]
    assert family.pretty() == report["formulas"]

    report = run_json(runner, ["-c", small_config, "demo", "--seed", "5"])
    for name, entry in report["examples"].items():
        action = ActionSpec.from_dict(entry["action"])
        assert action.to_dict() == entry["action"], name
        if "normal_form" in entry.get("pipeline", {}):
            nf = NormalFormResult.from_dict(entry["pipeline"]["normal_form"])
            assert nf.to_dict() == entry["pipeline"]["normal_form"], name
