import json
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, TypeVar

import click
import numpy as np
from loguru import logger

from metacirculant.analysis import classify as classify_graph
from metacirculant.config import Config
from metacirculant.errors import (
    CapExceeded,
    MetacirculantError,
    NotFound,
    ParseError,
    PreconditionError,
    SearchBudgetExceeded,
)
from metacirculant.finite_groups import (
    closure,
    is_metacyclic,
    is_split_metacyclic,
    structure_report,
)
from metacirculant.graphs import (
    Graph,
    MPParams,
    cayley_connection_set_mp,
    cayley_graph,
    circulant,
    coset_graph_from_arc,
    generalized_petersen,
    lexicographic_product,
    multilayer_generalized_petersen,
    random_connection_set,
)
from metacirculant.scenarios import (
    ScenarioSettings,
    resolve_scenario,
    run_scenarios,
    scenario_ids,
    summary_table,
)
from metacirculant.utils import (
    GRAPH_FORMATS,
    GROUP_ARITY,
    SUFFIXES,
    format_dot,
    format_graph,
    format_group,
    group_from_spec,
    parse_int_list,
    read_graph,
    write_graph,
)

FAMILIES = ("circulant", "cayley", "coset", "petersen", "mp", "lex")
INPUT_ERRORS = (ParseError, PreconditionError, CapExceeded, NotFound)

T = TypeVar("T")


def configure_logging(debug: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if debug else "INFO")


def _fail(message: str, error: Exception, code: int = 1) -> NoReturn:
    logger.exception(message)
    click.echo(f"{message}: {str(error)}", err=True)
    sys.exit(code)


def _node_count(ctx: click.Context, param: click.Parameter, value: Any) -> int:
    """Accept ``50000000`` as well as ``5e7``."""
    try:
        count = float(value)
    except (TypeError, ValueError):
        raise click.BadParameter(f"{value!r} is not a number")
    if not count.is_integer() or count < 1:
        raise click.BadParameter(f"{value!r} is not a positive whole number")
    return int(count)


def _check_threads(threads: int) -> None:
    if threads <= 0:
        click.echo("Number of threads must be greater than 0", err=True)
        sys.exit(1)


def _table_cap(max_group_order: int) -> int:
    return min(max_group_order, Config.FINITE_GROUP_CAP)


seed_option = click.option("--seed", type=int, default=lambda: Config.SEED, show_default="0")
max_group_order_option = click.option(
    "--max-group-order",
    type=int,
    default=lambda: Config.MAX_GROUP_ORDER,
    show_default="2000000",
    help="Largest group enumerated; presentation tables stop at METACIRCULANT_FINITE_GROUP_CAP",
)
search_nodes_option = click.option(
    "--search-nodes",
    default=lambda: Config.SEARCH_NODES,
    callback=_node_count,
    show_default="5e7",
    help="Node budget per subgroup search, e.g. 5e7",
)
max_aut_degree_option = click.option(
    "--max-aut-degree", type=int, default=lambda: Config.MAX_AUT_DEGREE, show_default="512"
)
threads_option = click.option(
    "--threads", type=int, default=lambda: Config.THREADS, show_default="1"
)


@click.group()
def cli() -> None:
    """Metacirculant toolkit: build graphs and groups, classify graphs, verify results."""
    pass


def _need(value: Optional[T], flag: str, family: str) -> T:
    if value is None:
        raise PreconditionError(f"{family} needs {flag}")
    return value


def _build_graph(family: str, options: Dict[str, Any], seed: int, max_group_order: int) -> Graph:
    def get(key: str) -> Any:
        return _need(options.get(key), "--" + key.replace("_", "-"), family)

    if family == "circulant":
        return circulant(get("order"), parse_int_list(get("connection"), "--connection"))
    if family == "petersen":
        return generalized_petersen(get("n"), get("t"))
    if family == "mp":
        layers = options.get("layers") or _need(options.get("n"), "--layers or --n", family)
        params = MPParams(get("m"), layers, get("s"), get("t"))
        return multilayer_generalized_petersen(params)
    if family == "lex":
        first, second = read_graph(Path(get("first"))), read_graph(Path(get("second")))
        return lexicographic_product(first, second)

    kind = get("group")
    numbers = parse_int_list(get("params"), "--params")
    G = group_from_spec(kind, numbers, _table_cap(max_group_order))
    if family == "coset":
        H = closure(G, parse_int_list(get("subgroup"), "--subgroup"))
        return coset_graph_from_arc(G, H, get("arc"))
    if options.get("connection") is not None:
        S = parse_int_list(options["connection"], "--connection")
    elif options.get("random_valency") is not None:
        S = random_connection_set(G, options["random_valency"], np.random.default_rng(seed))
    elif kind == "mp-cayley":
        S = cayley_connection_set_mp(G, numbers[0])
    else:
        raise PreconditionError("cayley needs --connection or --random-valency")
    return cayley_graph(G, S, name=f"Cay({kind} {options['params']})")


@cli.command()
@click.argument("family", type=click.Choice(FAMILIES))
@click.option("--order", type=int, help="Circulant order")
@click.option("--connection", help="Comma-separated connection set (residues or element ids)")
@click.option("--group", type=click.Choice(list(GROUP_ARITY)), help="Group presentation kind")
@click.option("--params", help="Comma-separated presentation parameters")
@click.option("--subgroup", help="Comma-separated generators of H for coset graphs")
@click.option("--arc", type=int, help="Element g outside H for coset graphs")
@click.option("--n", "n", type=int, help="Generalized Petersen n, or MP layers")
@click.option("--t", "t", type=int, help="Petersen step or MP exponent base")
@click.option("--m", "m", type=int, help="MP layer size")
@click.option("--layers", type=int, help="MP number of layers")
@click.option("--s", "s", type=int, help="MP step s dividing m")
@click.option("--random-valency", type=int, help="Random generating connection set of this size")
@click.option("--first", help="First factor graph file for lex")
@click.option("--second", help="Second factor graph file for lex")
@click.option(
    "--format", "fmt", type=click.Choice(GRAPH_FORMATS), default="edgelist", show_default=True
)
@click.option("--output", type=click.Path(dir_okay=False), help="Write here instead of stdout")
@seed_option
@max_group_order_option
@click.option("--debug", is_flag=True, help="Enable debug logging")
def construct(
    family: str,
    order: Optional[int],
    connection: Optional[str],
    group: Optional[str],
    params: Optional[str],
    subgroup: Optional[str],
    arc: Optional[int],
    n: Optional[int],
    t: Optional[int],
    m: Optional[int],
    layers: Optional[int],
    s: Optional[int],
    random_valency: Optional[int],
    first: Optional[str],
    second: Optional[str],
    fmt: str,
    output: Optional[str],
    seed: int,
    max_group_order: int,
    debug: bool,
) -> None:
    """Construct a graph of the given FAMILY."""
    configure_logging(debug)
    try:
        options = {
            "order": order,
            "connection": connection,
            "group": group,
            "params": params,
            "subgroup": subgroup,
            "arc": arc,
            "n": n,
            "t": t,
            "m": m,
            "layers": layers,
            "s": s,
            "random_valency": random_valency,
            "first": first,
            "second": second,
        }
        graph = _build_graph(family, options, seed, max_group_order)
    except INPUT_ERRORS as e:
        _fail("Error during construction", e)
    if output:
        path = write_graph(graph, Path(output), fmt)
        click.echo(f"Wrote {graph.name}: {graph.n} vertices, {graph.edge_count} edges to {path}")
    else:
        click.echo(format_graph(graph, fmt), nl=False)


@cli.command()
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--p", "p", type=int, required=True, help="Odd prime with |V| a power of p")
@click.option("--output", type=click.Path(dir_okay=False), help="Also write the JSON report here")
@search_nodes_option
@max_aut_degree_option
@max_group_order_option
@seed_option
@threads_option
@click.option("--debug", is_flag=True, help="Enable debug logging")
def classify(
    graph_file: str,
    p: int,
    output: Optional[str],
    search_nodes: int,
    max_aut_degree: int,
    max_group_order: int,
    seed: int,
    threads: int,
    debug: bool,
) -> None:
    """Classify GRAPH_FILE (edge list or JSON); exit 2 when a flag is inconclusive."""
    configure_logging(debug)
    _check_threads(threads)
    try:
        graph = read_graph(Path(graph_file))
        report = classify_graph(
            graph,
            p,
            search_nodes=search_nodes,
            max_aut_degree=max_aut_degree,
            seed=seed,
            max_group_order=max_group_order,
            threads=threads,
        )
    except INPUT_ERRORS as e:
        _fail("Error during classification", e)
    except SearchBudgetExceeded as e:
        _fail("Classification inconclusive", e, code=2)
    except RuntimeError as e:
        _fail("Classification failed", e)
    text = report.to_json()
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text + "\n", encoding="utf-8")
    click.echo(text)
    if report.inconclusive:
        click.echo("Some flags are inconclusive; raise --search-nodes to settle them", err=True)
        sys.exit(2)


@cli.command()
@click.argument("kind", type=click.Choice(list(GROUP_ARITY)))
@click.option("--params", required=True, help="Comma-separated presentation parameters")
@max_group_order_option
@click.option("--output", type=click.Path(dir_okay=False), help="Write the JSON here")
@click.option("--debug", is_flag=True, help="Enable debug logging")
def group(kind: str, params: str, max_group_order: int, output: Optional[str], debug: bool) -> None:
    """Structure report of a group presentation of the given KIND."""
    configure_logging(debug)
    try:
        G = group_from_spec(kind, parse_int_list(params, "--params"), _table_cap(max_group_order))
        extra = {
            "structure": structure_report(G).to_dict(),
            "metacyclic": is_metacyclic(G).answer,
            "split_metacyclic": is_split_metacyclic(G).answer,
        }
    except INPUT_ERRORS as e:
        _fail("Error building group", e)
    text = format_group(G, extra)
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text, encoding="utf-8")
        click.echo(f"Wrote group of order {G.n} to {output}")
    else:
        click.echo(text, nl=False)


@cli.command("verify-paper")
@click.argument("scenario", default="all")
@threads_option
@click.option("--output", type=click.Path(dir_okay=False), help="Results as JSON, no timings")
@seed_option
@search_nodes_option
@max_aut_degree_option
@max_group_order_option
@click.option("--debug", is_flag=True, help="Enable debug logging")
def verify_paper(
    scenario: str,
    threads: int,
    output: Optional[str],
    seed: int,
    search_nodes: int,
    max_aut_degree: int,
    max_group_order: int,
    debug: bool,
) -> None:
    """Run one verification SCENARIO, or all of them. Descriptive aliases are accepted."""
    configure_logging(debug)
    valid = scenario_ids()
    names: List[str] = valid
    if scenario != "all":
        try:
            names = [resolve_scenario(scenario)]
        except NotFound:
            names = []
    if not names:
        click.echo(f"Unknown scenario {scenario!r}. Valid ids:", err=True)
        for name in valid:
            click.echo(f"  {name}", err=True)
        sys.exit(1)
    _check_threads(threads)

    settings = ScenarioSettings(
        seed=seed,
        search_nodes=search_nodes,
        max_aut_degree=max_aut_degree,
        max_group_order=max_group_order,
    )
    try:
        results = run_scenarios(names, settings, threads=threads)
    except MetacirculantError as e:
        _fail("Error during verification", e)
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        payload = [r.to_dict(timing=False) for r in results]
        Path(output).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    table = summary_table(results)
    click.echo(table.to_string(index=False))
    passed = int((table["status"] == "pass").sum())
    click.echo(f"{passed}/{len(results)} scenarios passed")
    if (table["status"] == "fail").any():
        sys.exit(1)
    if (table["status"] == "inconclusive").any():
        sys.exit(2)


@cli.command("export-dot")
@click.argument("graph_file", type=click.Path(dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False), help="DOT file, default beside input")
@click.option("--debug", is_flag=True, help="Enable debug logging")
def export_dot(graph_file: str, output: Optional[str], debug: bool) -> None:
    """Convert an edge-list or JSON graph file to Graphviz DOT."""
    configure_logging(debug)
    source = Path(graph_file)
    try:
        graph = read_graph(source)
    except INPUT_ERRORS as e:
        _fail("Error reading graph", e)
    target = Path(output) if output else source.with_suffix(SUFFIXES["dot"])
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_dot(graph), encoding="utf-8")
    click.echo(f"Wrote {target}")


if __name__ == "__main__":
    cli()
