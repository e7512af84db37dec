import json
from unittest.mock import patch

import pytest
from click.testing import CliRunner
from loguru import logger

from metacirculant.cli import cli
from metacirculant.config import Config
from metacirculant.errors import SearchBudgetExceeded
from metacirculant.graphs import cycle_graph, empty_graph
from metacirculant.models import ClassificationReport, FlagResult, FlagStatus, ScenarioResult
from metacirculant.utils import write_graph


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger.remove()


@pytest.fixture
def nonagon_file(tmp_path):
    return str(write_graph(cycle_graph(9), tmp_path / "nonagon.txt"))


def _results(*statuses):
    return [ScenarioResult(f"scenario-{i}", status) for i, status in enumerate(statuses)]


def test_construct_circulant(runner):
    result = runner.invoke(cli, ["construct", "circulant", "--order", "9", "--connection", "1,8"])
    assert result.exit_code == 0
    assert "n 9 m 9" in result.output
    assert "0 8" in result.output


def test_construct_missing_option(runner):
    result = runner.invoke(cli, ["construct", "circulant", "--connection", "1,8"])
    assert result.exit_code == 1
    assert "circulant needs --order" in result.output


def test_construct_mp_to_file(runner, tmp_path):
    target = tmp_path / "flagship.txt"
    result = runner.invoke(
        cli,
        ["construct", "mp", "--m", "27", "--layers", "3", "--s", "9", "--t", "4"]
        + ["--output", str(target)],
    )
    assert result.exit_code == 0
    assert "Wrote MP_{27,3,9,4}: 81 vertices, 324 edges" in result.output
    assert target.read_text().startswith("n 81 m 324")


def test_construct_mp_layers_from_n(runner):
    flags = ["--m", "27", "--n", "3", "--s", "9"]
    result = runner.invoke(cli, ["construct", "mp"] + flags + ["--t", "4", "--format", "edgelist"])
    assert result.exit_code == 0
    assert "n 81 m 324" in result.output
    failed = runner.invoke(cli, ["construct", "mp"] + flags + ["--t", "3"])
    assert failed.exit_code == 1
    assert "gcd(t, m)" in failed.output


def test_construct_mp_cayley_default_connection_set(runner):
    result = runner.invoke(
        cli, ["construct", "cayley", "--group", "mp-cayley", "--params", "3,3,1,4"]
    )
    assert result.exit_code == 0
    assert "n 81 m 324" in result.output


def test_construct_random_cayley_json(runner, tmp_path):
    target = tmp_path / "cay.json"
    result = runner.invoke(
        cli,
        ["construct", "cayley", "--group", "split", "--params", "9,3,4"]
        + ["--random-valency", "4", "--format", "json", "--output", str(target)],
    )
    assert result.exit_code == 0
    data = json.loads(target.read_text())
    assert data["n"] == 27
    assert len(data["edges"]) == 54


def test_construct_cayley_bad_params(runner):
    result = runner.invoke(
        cli, ["construct", "cayley", "--group", "split", "--params", "9,3", "--connection", "1"]
    )
    assert result.exit_code == 1
    assert "split takes 3 parameters" in result.output


def test_construct_coset_graph(runner):
    # element 7 is t in C7 : C3, element 1 is s
    result = runner.invoke(
        cli,
        ["construct", "coset", "--group", "split", "--params", "7,3,2"]
        + ["--subgroup", "7", "--arc", "1"],
    )
    assert result.exit_code == 0
    assert "n 7 m 21" in result.output


def test_construct_petersen_dot(runner):
    result = runner.invoke(
        cli, ["construct", "petersen", "--n", "5", "--t", "2", "--format", "dot"]
    )
    assert result.exit_code == 0
    assert 'graph "P(5,2)" {' in result.output
    assert "  0 -- 5;" in result.output


def test_construct_lex(runner, tmp_path):
    first = write_graph(cycle_graph(5), tmp_path / "c5.txt")
    second = write_graph(empty_graph(2), tmp_path / "k2bar.txt")
    result = runner.invoke(
        cli, ["construct", "lex", "--first", str(first), "--second", str(second)]
    )
    assert result.exit_code == 0
    assert "n 10 m 20" in result.output


def test_classify_writes_report(runner, nonagon_file, tmp_path):
    target = tmp_path / "report.json"
    result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3", "--output", str(target)])
    assert result.exit_code == 0
    report = json.loads(target.read_text())
    assert report["order"] == 9
    assert report["aut_order"] == 18
    assert {flag["status"] for flag in report["flags"].values()} == {"yes"}


def _all_yes_report():
    report = ClassificationReport(order=9, prime=3, aut_order=18)
    report.flags["vertex_transitive"] = FlagResult(FlagStatus.YES)
    return report


def test_classify_accepts_scientific_search_nodes(runner, nonagon_file):
    with patch("metacirculant.cli.classify_graph", return_value=_all_yes_report()) as mock:
        result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3", "--search-nodes", "5e7"])
    assert result.exit_code == 0
    kwargs = mock.call_args.kwargs
    assert kwargs["search_nodes"] == 50_000_000
    assert kwargs["max_group_order"] == 2_000_000
    assert kwargs["seed"] == 0
    assert kwargs["threads"] == 1


def test_classify_passes_budget_flags(runner, nonagon_file):
    flags = ["--max-group-order", "1000", "--seed", "7", "--threads", "3", "--max-aut-degree", "81"]
    with patch("metacirculant.cli.classify_graph", return_value=_all_yes_report()) as mock:
        result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3"] + flags)
    assert result.exit_code == 0
    kwargs = mock.call_args.kwargs
    assert (kwargs["max_group_order"], kwargs["seed"], kwargs["threads"]) == (1000, 7, 3)
    assert kwargs["max_aut_degree"] == 81


def test_classify_defaults_follow_config(runner, nonagon_file):
    with patch.object(Config, "SEARCH_NODES", 123), patch.object(Config, "SEED", 9), patch(
        "metacirculant.cli.classify_graph", return_value=_all_yes_report()
    ) as mock:
        result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3"])
    assert result.exit_code == 0
    assert mock.call_args.kwargs["search_nodes"] == 123
    assert mock.call_args.kwargs["seed"] == 9


@pytest.mark.parametrize("value", ["lots", "1.5", "0", "2.5e0"])
def test_classify_rejects_bad_search_nodes(runner, nonagon_file, value):
    result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3", "--search-nodes", value])
    assert result.exit_code == 2
    assert "Invalid value for '--search-nodes'" in result.output


def test_classify_rejects_zero_threads(runner, nonagon_file):
    result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3", "--threads", "0"])
    assert result.exit_code == 1
    assert "Number of threads must be greater than 0" in result.output


def test_classify_wrong_prime(runner, nonagon_file):
    result = runner.invoke(cli, ["classify", nonagon_file, "--p", "5"])
    assert result.exit_code == 1
    assert "Error during classification" in result.output


def test_classify_missing_file(runner, tmp_path):
    result = runner.invoke(cli, ["classify", str(tmp_path / "missing.txt"), "--p", "3"])
    assert result.exit_code == 1
    assert "graph file not found" in result.output


def test_classify_budget_exhausted(runner, nonagon_file):
    with patch(
        "metacirculant.cli.classify_graph", side_effect=SearchBudgetExceeded("regular any", 5, 4)
    ):
        result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3"])
    assert result.exit_code == 2
    assert "Classification inconclusive" in result.output


def test_classify_inconclusive_flag(runner, nonagon_file):
    report = ClassificationReport(order=9, prime=3, aut_order=18)
    report.flags["vertex_transitive"] = FlagResult(FlagStatus.YES)
    report.flags["cayley"] = FlagResult(FlagStatus.INCONCLUSIVE, certificate={"nodes": 4})
    with patch("metacirculant.cli.classify_graph", return_value=report):
        result = runner.invoke(cli, ["classify", nonagon_file, "--p", "3"])
    assert result.exit_code == 2
    assert '"inconclusive"' in result.output
    assert "raise --search-nodes" in result.output


def test_group_report(runner, tmp_path):
    target = tmp_path / "group.json"
    result = runner.invoke(cli, ["group", "split", "--params", "9,3,4", "--output", str(target)])
    assert result.exit_code == 0
    assert "Wrote group of order 27" in result.output
    data = json.loads(target.read_text())
    assert data["metacyclic"] is True
    assert data["split_metacyclic"] is True
    assert data["structure"]["derived_order"] == 3


def test_group_max_group_order(runner):
    result = runner.invoke(cli, ["group", "cyclic", "--params", "27", "--max-group-order", "10"])
    assert result.exit_code == 1
    assert "Error building group" in result.output


def test_group_bad_arity(runner):
    result = runner.invoke(cli, ["group", "xu-zhang", "--params", "3,1"])
    assert result.exit_code == 1
    assert "Error building group" in result.output


def test_verify_paper_unknown_scenario(runner):
    result = runner.invoke(cli, ["verify-paper", "no-such-scenario"])
    assert result.exit_code == 1
    assert "Unknown scenario 'no-such-scenario'" in result.output
    assert "  petersen-non-cayley" in result.output


@pytest.mark.parametrize(
    "given, registered",
    [
        ("theorem-6-1-flagship", "theorem-6-1-flagship"),
        ("coset-lemma", "coset-lemma"),
        ("flagship-cayley-not-metacyclic", "theorem-6-1-flagship"),
        ("order-p4-trichotomy", "theorem-1-3-spotcheck"),
    ],
)
def test_verify_paper_scenario_ids_and_aliases(runner, given, registered):
    with patch("metacirculant.cli.run_scenarios", return_value=_results("pass")) as mock:
        result = runner.invoke(cli, ["verify-paper", given, "--search-nodes", "5e7"])
    assert result.exit_code == 0
    names, settings = mock.call_args.args
    assert names == [registered]
    assert settings.search_nodes == 50_000_000
    assert settings.max_group_order == 2_000_000


def test_verify_paper_rejects_zero_threads(runner):
    result = runner.invoke(cli, ["verify-paper", "--threads", "0"])
    assert result.exit_code == 1
    assert "Number of threads must be greater than 0" in result.output


@pytest.mark.parametrize(
    "statuses, code",
    [
        (("pass", "pass"), 0),
        (("pass", "fail"), 1),
        (("pass", "inconclusive"), 2),
        (("inconclusive", "fail"), 1),
    ],
)
def test_verify_paper_exit_codes(runner, statuses, code):
    with patch("metacirculant.cli.run_scenarios", return_value=_results(*statuses)) as mock:
        result = runner.invoke(cli, ["verify-paper", "--threads", "2"])
    assert result.exit_code == code
    assert f"{statuses.count('pass')}/2 scenarios passed" in result.output
    names, settings = mock.call_args.args
    assert names[0] == "xu-zhang-invariants"
    assert mock.call_args.kwargs["threads"] == 2
    assert settings.seed == Config.SEED


def test_verify_paper_single_scenario(runner, tmp_path):
    target = tmp_path / "results.json"
    result = runner.invoke(cli, ["verify-paper", "mp-distance-claim", "--output", str(target)])
    assert result.exit_code == 0
    assert "1/1 scenarios passed" in result.output
    (entry,) = json.loads(target.read_text())
    assert entry["scenario"] == "mp-distance-claim"
    assert entry["status"] == "pass"
    assert "wall_time" not in entry


def test_export_dot(runner, nonagon_file):
    result = runner.invoke(cli, ["export-dot", nonagon_file])
    assert result.exit_code == 0
    target = nonagon_file.replace(".txt", ".dot")
    assert f"Wrote {target}" in result.output
    with open(target) as f:
        assert "  0 -- 1;" in f.read()


def test_export_dot_bad_input(runner, tmp_path):
    broken = tmp_path / "broken.txt"
    broken.write_text("n 2 m 1\n")
    result = runner.invoke(cli, ["export-dot", str(broken)])
    assert result.exit_code == 1
    assert "Error reading graph" in result.output
