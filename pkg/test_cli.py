"""
Tests for the bfree-lab command line
"""

import json

import pytest
from click.testing import CliRunner

from bfree_lab import SCHEMA, entry_point


@pytest.fixture
def runner():
    return CliRunner()


def run(runner, *args):
    return runner.invoke(entry_point, list(args), catch_exceptions=False)


def document(result):
    return json.loads(result.stdout)


def test_member_document(runner):
    result = run(runner, "qset", "member", "--spec", "kfree:2", "--q", "12")
    assert result.exit_code == 0
    data = document(result)
    assert data["schema"] == SCHEMA
    assert data["member"] is False
    assert data["q"] == "12"


def test_formula_interval(runner):
    result = run(runner, "dim", "formula", "--n", "2", "--tau", "3", "--spec", "coprime:6", "--set", "wstar")
    assert result.exit_code == 0
    assert document(result)["interval"] == ["2/3", "1"]


def test_malformed_spec_is_a_domain_error(runner):
    result = run(runner, "qset", "member", "--spec", "kfree:x", "--q", "3")
    assert result.exit_code == 2
    assert "kfree:k | coprime:m" in result.output


def test_unknown_flag_is_a_usage_error(runner):
    result = run(runner, "qset", "member", "--spec", "all", "--q", "3", "--bogus")
    assert result.exit_code == 2


def test_help_names_the_schema(runner):
    result = run(runner, "liouville", "build", "--help")
    assert result.exit_code == 0
    assert SCHEMA in result.output


def test_build_writes_a_certificate(runner):
    result = run(runner, "liouville", "build")
    assert result.exit_code == 0
    data = document(result)
    assert data["q"][:5] == ["1", "3", "4", "27", "1048576"]
    assert data["q"][5] == {"prime": "3", "exponent": "262147"}
    assert data["checks"]["passed"] is True
    assert data["status"] == "active"


def test_build_past_the_digit_budget_exits_inconclusive(runner):
    result = run(runner, "liouville", "build", "--steps", "6")
    assert result.exit_code == 3
    data = document(result)
    assert data["status"] == "growth-exceeded"
    assert "digit budget" in data["stop_reason"]


def test_evidence_is_deterministic(runner):
    first = run(runner, "liouville", "evidence", "--tau", "5/2")
    second = run(runner, "liouville", "evidence", "--tau", "5/2")
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    data = document(first)
    assert data["hits"] == [2, 3, 4]
    assert data["legendre_cutoff"] == "5"


def test_threshold(runner):
    result = run(runner, "plane", "threshold", "--A", "1,-1", "--tau", "3")
    assert result.exit_code == 0
    assert document(result)["threshold"] == "2"


def test_convergents_as_csv(runner):
    result = run(runner, "cf", "convergents", "--a0", "1", "--quotients", "2,2,2", "--format", "csv")
    assert result.exit_code == 0
    assert result.stdout.splitlines() == ["s,a,p,q", "0,1,1,1", "1,2,3,2", "2,2,7,5", "3,2,17,12"]


def test_out_writes_a_file(runner, tmp_path):
    target = tmp_path / "expand.json"
    result = run(runner, "cf", "expand", "--x", "17/12", "--out", str(target))
    assert result.exit_code == 0
    assert result.stdout == ""
    data = json.loads(target.read_text())
    assert data["quotients"] == ["2", "2", "2"]
    assert data["a0"] == "1"


def test_critical_exponent_for_all_integers(runner):
    result = run(runner, "dim", "critical", "--spec", "all", "--n", "1", "--tau", "3", "--q-max", "65536")
    assert result.exit_code == 0
    data = document(result)
    assert data["exact_value"] == "2/3"
    assert abs(float(data["s_star"]) - 2 / 3) <= 0.05


def test_critical_exponent_of_a_single_member_is_inconclusive(runner, tmp_path):
    table = tmp_path / "one.json"
    table.write_text(json.dumps({"N": 1, "members": [1], "tail": {"rule": "empty"}}))
    result = run(runner, "dim", "critical", "--spec", f"table:@{table}", "--n", "1", "--tau", "3",
                 "--q-max", "65536")
    assert result.exit_code == 3
    assert "inconclusive" in result.output


def test_small_wstar_scan(runner):
    result = run(runner, "plane", "wstar", "--A", "1,1", "--b", "1/2", "--spec", "coprime:2", "--tau", "5/2",
                 "--steps", "4", "--scan-limit", "200")
    assert result.exit_code == 0
    data = document(result)
    assert data["summary"]["threshold"] == "3"
    assert data["summary"]["in_Q_count"] == 0
    assert data["hyperplane"] == {"A": ["1", "1"], "u": "1", "v": "2"}


def test_config_file_is_applied(runner, tmp_path):
    config = tmp_path / "lab.json"
    config.write_text(json.dumps({"digit_budget": 10}))
    result = run(runner, "--config", str(config), "liouville", "build")
    assert result.exit_code == 3
    data = document(result)
    assert data["status"] == "growth-exceeded"
    assert len(data["q"]) == 5


def test_config_file_with_unknown_keys_is_rejected(runner, tmp_path):
    config = tmp_path / "lab.json"
    config.write_text(json.dumps({"bogus": 1}))
    result = run(runner, "--config", str(config), "qset", "member", "--spec", "all", "--q", "1")
    assert result.exit_code == 2
    assert "bogus" in result.output


def test_option_overrides_config(runner, tmp_path):
    config = tmp_path / "lab.json"
    config.write_text(json.dumps({"digit_budget": 10}))
    result = run(runner, "--config", str(config), "liouville", "build", "--digit-budget", "1000000")
    assert result.exit_code == 0
