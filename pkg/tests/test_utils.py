import json

import pytest

from metacirculant.errors import CapExceeded, ParseError, PreconditionError
from metacirculant.graphs import MPParams, cycle_graph, multilayer_generalized_petersen
from metacirculant.utils import (
    format_dot,
    format_edgelist,
    format_graph,
    format_group,
    group_from_spec,
    parse_edgelist,
    parse_int_list,
    read_graph,
    write_graph,
)


@pytest.fixture
def square():
    return cycle_graph(4)


def test_format_edgelist(square):
    text = format_edgelist(square)
    assert text.splitlines() == ["n 4 m 4", "0 1", "0 3", "1 2", "2 3"]
    assert parse_edgelist(text).edges() == square.edges()


def test_parse_edgelist_skips_comments():
    graph = parse_edgelist("# triangle\nn 3 m 3\n0 1\n1 2\n\n2 0\n", name="K3")
    assert graph.name == "K3"
    assert graph.valency == 2


@pytest.mark.parametrize(
    "text",
    [
        "",
        "vertices 3 edges 1\n0 1\n",
        "n three m 1\n0 1\n",
        "n 3 m 2\n0 1\n",
        "n 3 m 1\n0 1 2\n",
        "n 3 m 1\n0 x\n",
        "n 3 m 2\n0 1\n1 0\n",
        "n 2 m 1\n0 0\n",
        "n 2 m 1\n0 5\n",
    ],
)
def test_parse_edgelist_errors(text):
    with pytest.raises(ParseError):
        parse_edgelist(text)


def test_json_keeps_tuple_labels(tmp_path):
    graph = multilayer_generalized_petersen(MPParams(9, 3, 3, 2))
    path = write_graph(graph, tmp_path / "mp.json", "json")
    again = read_graph(path)
    assert again.edges() == graph.edges()
    assert again.label(10) == (1, 1)
    assert again.name == graph.name


def test_read_graph_errors(tmp_path):
    with pytest.raises(ParseError):
        read_graph(tmp_path / "missing.txt")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ParseError):
        read_graph(broken)
    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text(json.dumps({"n": 3}))
    with pytest.raises(ParseError):
        read_graph(incomplete)


def test_edgelist_file_name_becomes_graph_name(tmp_path, square):
    path = write_graph(square, tmp_path / "nested" / "square.txt")
    assert read_graph(path).name == "square"


def test_format_dot(square):
    dot = format_dot(square)
    assert dot.startswith('graph "')
    assert "  0 -- 1;" in dot
    assert '  2 [label="2"];' in dot
    assert dot.rstrip().endswith("}")


def test_format_graph_rejects_unknown_format(square):
    with pytest.raises(PreconditionError):
        format_graph(square, "graphml")


def test_parse_int_list():
    assert parse_int_list("1, 2,3,") == [1, 2, 3]
    assert parse_int_list("-4") == [-4]
    with pytest.raises(ParseError):
        parse_int_list("1,x", "--params")


def test_group_from_spec():
    assert group_from_spec("split", [9, 3, 4], 6561).order == 27
    assert group_from_spec("xu-zhang", [3, 1, 0, 0, 0], 6561).order == 9
    assert group_from_spec("mp-cayley", [3, 3, 1, 4], 6561).order == 81
    with pytest.raises(PreconditionError):
        group_from_spec("dihedral", [4], 6561)
    with pytest.raises(ParseError):
        group_from_spec("split", [9, 3], 6561)
    with pytest.raises(CapExceeded):
        group_from_spec("cyclic", [100], 50)


def test_format_group():
    G = group_from_spec("cyclic", [5], 6561)
    data = json.loads(format_group(G, {"metacyclic": True}))
    assert data["order"] == 5
    assert data["presentation"] == {"kind": "cyclic", "params": {"n": 5}}
    assert data["metacyclic"] is True
    assert len(data["table"]) == 5
