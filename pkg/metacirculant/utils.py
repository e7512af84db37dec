import json
from pathlib import Path
from typing import Any, Dict, Hashable, List, Optional

from loguru import logger

from metacirculant.errors import ParseError, PreconditionError
from metacirculant.finite_groups import (
    FiniteGroup,
    XuZhangParams,
    cyclic_group,
    mp_cayley_group,
    split_metacyclic_group,
    xu_zhang_group,
)
from metacirculant.graphs import Graph

GRAPH_FORMATS = ("edgelist", "json", "dot")
SUFFIXES = {"edgelist": ".txt", "json": ".json", "dot": ".dot"}
GROUP_ARITY = {"cyclic": 1, "split": 3, "xu-zhang": 5, "mp-cayley": 4}


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(x) for x in value]
    return value


def _hashable(value: Any) -> Hashable:
    if isinstance(value, list):
        return tuple(_hashable(x) for x in value)
    return value


def format_edgelist(graph: Graph) -> str:
    lines = [f"n {graph.n} m {graph.edge_count}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges())
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str, name: str = "") -> Graph:
    """Parse the ``n <vertices> m <edges>`` format; every edge line is ``u v``."""
    lines = [
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    ]
    if not lines:
        raise ParseError("empty edge list")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "n" or header[2] != "m":
        raise ParseError(f"expected header 'n <vertices> m <edges>', got {lines[0]!r}")
    try:
        n, m = int(header[1]), int(header[3])
    except ValueError as e:
        raise ParseError(f"non-integer header {lines[0]!r}") from e
    edges = []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {number}: expected 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError as e:
            raise ParseError(f"line {number}: non-integer vertex in {line!r}") from e
    if len(edges) != m:
        raise ParseError(f"header announces {m} edges but {len(edges)} were read")
    try:
        graph = Graph.from_edges(n, edges, name=name)
    except PreconditionError as e:
        raise ParseError(str(e)) from e
    if graph.edge_count != m:
        raise ParseError(f"edge list contains duplicates: {m} lines, {graph.edge_count} edges")
    return graph


def graph_to_dict(graph: Graph) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": graph.name,
        "n": graph.n,
        "edges": [list(e) for e in graph.edges()],
    }
    if graph.labels is not None:
        data["labels"] = [_plain(x) for x in graph.labels]
    return data


def graph_from_dict(data: Dict[str, Any]) -> Graph:
    try:
        n = int(data["n"])
        edges = [(int(u), int(v)) for u, v in data["edges"]]
        labels: Optional[List[Hashable]] = (
            [_hashable(x) for x in data["labels"]] if "labels" in data else None
        )
        return Graph.from_edges(n, edges, labels=labels, name=str(data.get("name", "")))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed graph JSON: {e}") from e


def format_json(graph: Graph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2) + "\n"


def format_dot(graph: Graph) -> str:
    nxg = graph.to_networkx()
    lines = [f"graph \"{graph.name or 'G'}\" {{"]
    lines.extend(f'  {v} [label="{data["label"]}"];' for v, data in nxg.nodes(data=True))
    lines.extend(f"  {u} -- {v};" for u, v in sorted(nxg.edges()))
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_graph(graph: Graph, fmt: str) -> str:
    if fmt == "edgelist":
        return format_edgelist(graph)
    if fmt == "json":
        return format_json(graph)
    if fmt == "dot":
        return format_dot(graph)
    raise PreconditionError(f"unknown graph format {fmt!r}; choose from {', '.join(GRAPH_FORMATS)}")


def write_graph(graph: Graph, path: Path, fmt: str = "edgelist") -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_graph(graph, fmt), encoding="utf-8")
    logger.info(f"Wrote {graph!r} to {path}")
    return path


def read_graph(path: Path) -> Graph:
    """Read an edge-list or JSON graph, chosen by the ``.json`` suffix."""
    if not path.exists():
        raise ParseError(f"graph file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON ({e})") from e
        graph = graph_from_dict(data)
    else:
        graph = parse_edgelist(text, name=path.stem)
    logger.debug(f"Read {graph!r} from {path}")
    return graph


def parse_int_list(text: str, what: str = "value") -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise ParseError(f"{what}: expected comma-separated integers, got {text!r}") from e


def group_from_spec(kind: str, params: List[int], cap: int) -> FiniteGroup:
    """Build a group from a presentation kind and its integer parameters.

    ``cyclic: n``, ``split: M,N,e``, ``xu-zhang: p,r,s,t,u`` and ``mp-cayley: p,m,n,lambda``.
    """
    if kind not in GROUP_ARITY:
        choices = ", ".join(GROUP_ARITY)
        raise PreconditionError(f"unknown group kind {kind!r}; choose from {choices}")
    if len(params) != GROUP_ARITY[kind]:
        raise ParseError(f"{kind} takes {GROUP_ARITY[kind]} parameters, got {len(params)}")
    if kind == "cyclic":
        return cyclic_group(params[0], cap=cap)
    if kind == "split":
        return split_metacyclic_group(*params, cap=cap)
    if kind == "xu-zhang":
        return xu_zhang_group(XuZhangParams(*params), cap=cap)
    return mp_cayley_group(*params, cap=cap)


def format_group(G: FiniteGroup, extra: Optional[Dict[str, Any]] = None) -> str:
    data = G.to_dict()
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
