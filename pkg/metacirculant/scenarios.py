"""The verification suite behind ``verify-paper``.

A scenario takes ``ScenarioSettings`` and returns its checks plus a one-line detail.
``run_scenario`` times it; a search that runs out of budget makes it inconclusive.
"""

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from sympy.ntheory import multiplicity
from tqdm import tqdm

from metacirculant.analysis import (
    classify,
    inner_arc_transitivity_check,
    is_metacirculant_definitional,
    iter_regular_subgroups,
    metacirculant_pair_search,
    mp_params_for,
    regular_subgroup_search,
    sylow_p_subgroup,
    trichotomy_case,
    verify_cayley_normalizer,
    verify_coset_arc_clauses,
    verify_mp_cayley_isomorphism,
    verify_mp_distance_claim,
)
from metacirculant.config import Config, SearchBudget, setting
from metacirculant.errors import MetacirculantError, NotFound, SearchBudgetExceeded
from metacirculant.finite_groups import (
    ISOMORPHISM_LIMIT,
    PK_ABELIAN_EXHAUSTIVE,
    FiniteGroup,
    XuZhangParams,
    center,
    closure,
    cyclic_group,
    derived_subgroup,
    find_isomorphism,
    find_order_pn_overgroup,
    from_permutation_group,
    invariant_vector,
    is_metacyclic,
    is_pk_abelian,
    is_split_metacyclic,
    mp_cayley_group,
    omega_s,
    split_metacyclic_group,
    xu_zhang_group,
    xu_zhang_split_decomposition,
)
from metacirculant.graph_aut import (
    are_isomorphic,
    automorphism_group,
    is_automorphism,
    is_block_system,
)
from metacirculant.graphs import (
    Graph,
    MPParams,
    cayley_graph,
    cycle_graph,
    empty_graph,
    generalized_petersen,
    induced_subgraph,
    lexicographic_product,
    mp_layer_shift,
    mp_layers,
    mp_rotation,
    multilayer_generalized_petersen,
    petersen_rotation,
    petersen_swap,
    quotient_graph,
    random_connection_set,
)
from metacirculant.models import Check, ClassificationReport, FlagStatus, ScenarioResult
from metacirculant.perm_core import Permutation, PermutationGroup, stabilizer, transitivity_profile

SWEEP_ORDER_LIMIT = 2187
COSET_INSTANCES = 24

ScenarioOutcome = Tuple[List[Check], str]


@dataclass(frozen=True)
class ScenarioSettings:
    seed: int = field(default_factory=lambda: Config.SEED)
    search_nodes: int = field(default_factory=lambda: Config.SEARCH_NODES)
    max_aut_degree: int = field(default_factory=lambda: Config.MAX_AUT_DEGREE)
    max_group_order: int = field(default_factory=lambda: Config.MAX_GROUP_ORDER)

    def budget(self, label: str) -> SearchBudget:
        return SearchBudget(self.search_nodes, label=label)

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


ScenarioFn = Callable[[ScenarioSettings], ScenarioOutcome]
SCENARIOS: Dict[str, ScenarioFn] = {}
SCENARIO_ALIASES: Dict[str, str] = {}


def scenario(name: str, aliases: Sequence[str] = ()) -> Callable[[ScenarioFn], ScenarioFn]:
    def register(fn: ScenarioFn) -> ScenarioFn:
        SCENARIOS[name] = fn
        for alias in aliases:
            SCENARIO_ALIASES[alias] = name
        return fn

    return register


def scenario_ids() -> List[str]:
    return list(SCENARIOS)


def resolve_scenario(name: str) -> str:
    """The registered id for ``name``, which may be an alias."""
    if name not in SCENARIOS and name not in SCENARIO_ALIASES:
        raise NotFound(f"unknown scenario {name!r}; valid ids: {', '.join(SCENARIOS)}")
    return SCENARIO_ALIASES.get(name, name)


def _tally(name: str, outcomes: Iterable[bool], provenance: str = "claim") -> Check:
    """``expected`` is the number of cases, ``observed`` the number that held."""
    outcomes = [bool(x) for x in outcomes]
    return Check(name, len(outcomes), sum(outcomes), provenance)


# -- shared corpora -------------------------------------------------------------------------


def xu_zhang_sweep(max_order: int = SWEEP_ORDER_LIMIT) -> Tuple[List[XuZhangParams], int]:
    """Parameters with p in {3, 5}, r + s + t + u <= 4, r >= 1 and r >= u.

    Returns the tuples of order at most ``max_order`` and the number left out.
    """
    kept, skipped = [], 0
    for p in (3, 5):
        for r, s, t, u in itertools.product(range(1, 5), range(4), range(4), range(4)):
            if r + s + t + u > 4 or u > r:
                continue
            params = XuZhangParams(p, r, s, t, u)
            if params.order > max_order:
                skipped += 1
            else:
                kept.append(params)
    return kept, skipped


def order_27_corpus(seed: Optional[int] = None) -> List[Graph]:
    """Connected Cayley graphs of C27, C9 x C3 and C9 : C3."""
    rng = np.random.default_rng([setting(seed, "SEED"), 27])
    groups = {
        "C27": cyclic_group(27),
        "C9xC3": split_metacyclic_group(9, 3, 1),
        "C9:C3": split_metacyclic_group(9, 3, 4),
    }
    graphs = [cayley_graph(groups["C27"], [1, 26], name="Cay(C27, +-1)")]
    for label, G in groups.items():
        for k, valency in enumerate((4, 4, 6, 6)):
            S = random_connection_set(G, valency, rng)
            graphs.append(cayley_graph(G, S, name=f"Cay({label}, v{valency}#{k})"))
    return graphs


def flagship_graph() -> Tuple[MPParams, Graph]:
    params = mp_params_for(3, 3, 1, 4)
    return params, multilayer_generalized_petersen(params)


def _classify(graph: Graph, settings: ScenarioSettings, **kwargs) -> ClassificationReport:
    report = classify(
        graph,
        3,
        search_nodes=settings.search_nodes,
        max_aut_degree=settings.max_aut_degree,
        seed=settings.seed,
        max_group_order=settings.max_group_order,
        **kwargs,
    )
    for name, flag in report.flags.items():
        if flag.status is FlagStatus.INCONCLUSIVE:
            raise SearchBudgetExceeded(
                f"{graph.name}: {name}",
                int(flag.certificate.get("nodes", 0)),
                int(flag.certificate.get("limit", settings.search_nodes)),
            )
    return report


# -- group scenarios ------------------------------------------------------------------------


@scenario("xu-zhang-invariants")
def _xu_zhang_invariants(settings: ScenarioSettings) -> ScenarioOutcome:
    sweep, skipped = xu_zhang_sweep()
    orders, exponents, derived, splits, centres, decompositions = [], [], [], [], [], []
    by_vector: Dict[Tuple[int, ...], List[Tuple[XuZhangParams, Optional[FiniteGroup]]]] = {}
    for params in sweep:
        p, r, s, t, u = params.p, params.r, params.s, params.t, params.u
        G = xu_zhang_group(params)
        orders.append(G.n == p ** (2 * (r + s) + u + t))
        exponents.append(G.exponent == p ** (r + s + t + u))
        derived.append(len(derived_subgroup(G)) == p ** (s + u))
        splits.append(is_split_metacyclic(G).answer == params.split)
        q = p ** (s + u)
        a, b = G.index_of((1, 0)), G.index_of((0, 1))
        centres.append(np.array_equal(center(G), closure(G, [G.power(a, q), G.power(b, q)])))
        if params.split:
            try:
                xu_zhang_split_decomposition(G, params)
                decompositions.append(True)
            except RuntimeError as e:
                logger.error(str(e))
                decompositions.append(False)
        kept = G if G.n <= ISOMORPHISM_LIMIT else None
        by_vector.setdefault(invariant_vector(G), []).append((params, kept))

    isomorphic, undecided = [], 0
    for members in by_vector.values():
        for (first, G1), (second, G2) in itertools.combinations(members, 2):
            if G1 is None or G2 is None:
                undecided += 1
                continue
            if find_isomorphism(G1, G2) is not None:
                logger.error(f"Xu-Zhang parameters {first} and {second} give isomorphic groups")
                isomorphic.append(False)
            else:
                isomorphic.append(True)

    checks = [
        _tally("order = p^(2(r+s)+u+t)", orders),
        _tally("exponent = p^(r+s+t+u)", exponents),
        _tally("|G'| = p^(s+u)", derived),
        _tally("split iff stu = 0", splits),
        _tally("Z(G) = <a^(p^(s+u)), b^(p^(s+u))>", centres),
        _tally("split decomposition is a complement pair", decompositions, "derived"),
        _tally("invariant collisions are non-isomorphic", isomorphic),
    ]
    detail = (
        f"{len(sweep)} parameter sets up to order {SWEEP_ORDER_LIMIT}, "
        f"{skipped} larger ones skipped; "
        f"{len(isomorphic)} invariant collisions settled, {undecided} above the isomorphism limit"
    )
    return checks, detail


@scenario("omega1-structure")
def _omega1_structure(settings: ScenarioSettings) -> ScenarioOutcome:
    sweep, _ = xu_zhang_sweep()
    sizes, elementary = [], []
    for params in sweep:
        G = xu_zhang_group(params)
        if G.is_cyclic:
            continue
        p = params.p
        omega = omega_s(G, p, 1)
        sizes.append(len(omega) == p * p)
        block = G.table[np.ix_(omega, omega)]
        elementary.append(
            bool(np.all(p % G.orders[omega] == 0)) and bool(np.array_equal(block, block.T))
        )
    C = cyclic_group(27)
    checks = [
        _tally("|Omega_1| = p^2 for noncyclic groups", sizes),
        _tally("Omega_1 is elementary abelian", elementary),
        Check("|Omega_1(C27)|", 3, len(omega_s(C, 3, 1)), "trivial"),
    ]
    return checks, f"{len(sizes)} noncyclic metacyclic groups"


@scenario("pk-abelian")
def _pk_abelian(settings: ScenarioSettings) -> ScenarioOutcome:
    sweep, _ = xu_zhang_sweep()
    exhaustive, sampled = [], []
    for params in sweep:
        G = xu_zhang_group(params)
        p = params.p
        ell = round(math.log(len(derived_subgroup(G)), p))
        holds = is_pk_abelian(G, p, ell, seed=settings.seed)
        (exhaustive if G.n <= PK_ABELIAN_EXHAUSTIVE else sampled).append(holds)
    checks = [
        _tally("p^l-abelian with l = log_p |G'|, all pairs", exhaustive),
        _tally("p^l-abelian with l = log_p |G'|, sampled pairs", sampled, "derived"),
    ]
    return checks, f"{len(exhaustive)} exhaustive, {len(sampled)} sampled"


@scenario("complement-existence")
def _complement_existence(settings: ScenarioSettings) -> ScenarioOutcome:
    found, complements, missing = 0, 0, []
    families = ((27, 9, range(1, 27, 3)), (9, 3, (1, 4, 7)))
    for M, N, exponents in families:
        for e in exponents:
            G = split_metacyclic_group(M, N, e)
            sigma = G.index_of((1, 0))
            S = closure(G, [sigma])
            for g in range(1, G.n):
                if len(np.intersect1d(closure(G, [g]), S)) != 1:
                    continue
                try:
                    witness = find_order_pn_overgroup(G, sigma, g)
                except NotFound:
                    missing.append((M, N, e, g))
                    continue
                found += 1
                complements += witness.complement
    if missing:
        logger.error(f"No overgroup for {missing[:5]}")
    checks = [
        Check("cases without a witness", 0, len(missing)),
        Check("witnesses found", found + len(missing), found),
    ]
    return checks, f"{found} witnesses, {complements} of them complements of <sigma>"


@scenario("coset-lemma", aliases=("coset-graph-clauses",))
def _coset_graph_clauses(settings: ScenarioSettings) -> ScenarioOutcome:
    rng = settings.rng(2)
    S4 = PermutationGroup(
        [Permutation.from_cycles(4, [(0, 1, 2, 3)]), Permutation.from_cycles(4, [(0, 1)])]
    )
    S5 = PermutationGroup(
        [Permutation.from_cycles(5, [(0, 1, 2, 3, 4)]), Permutation.from_cycles(5, [(0, 1)])]
    )
    pool = [
        split_metacyclic_group(9, 3, 4),
        split_metacyclic_group(7, 3, 2),
        split_metacyclic_group(13, 3, 3),
        split_metacyclic_group(5, 4, 2),
        split_metacyclic_group(25, 5, 6),
        cyclic_group(12),
        from_permutation_group(S4),
        from_permutation_group(S5),
        xu_zhang_group(XuZhangParams(3, 1, 1, 0, 0)),
        mp_cayley_group(3, 3, 1, 4),
    ]
    results = []
    while len(results) < COSET_INSTANCES:
        G = pool[len(results) % len(pool)]
        H = closure(G, [int(rng.integers(1, G.n))])
        if len(H) == G.n:
            continue
        g = int(rng.choice(np.setdiff1d(np.arange(G.n), H)))
        results.append(verify_coset_arc_clauses(G, H, g))
    checks = [
        _tally("edge-transitive", (c.edge_transitive for c in results)),
        _tally(
            "arc-transitive iff HgH = Hg^-1H", (c.arc_transitive_iff_self_paired for c in results)
        ),
        _tally("connected iff <H, g> = G", (c.connected_iff_generating for c in results)),
        _tally(
            "valency |H : H & H^g|, doubled when not self-paired",
            (c.valency_matches for c in results),
        ),
        _tally(
            "components = |G : <H, g>|", (c.components_match_index for c in results), "derived"
        ),
    ]
    return checks, f"{len(results)} random instances, seed {settings.seed}"


# -- multilayer generalized Petersen scenarios ----------------------------------------------


@scenario("mp-petersen-equivalence")
def _mp_petersen_equivalence(settings: ScenarioSettings) -> ScenarioOutcome:
    found = []
    for n in (5, 7, 9):
        mp = multilayer_generalized_petersen(MPParams(n, 2, n, 2))
        found.append(are_isomorphic(mp, generalized_petersen(n, 2)) is not None)
    checks = [_tally("MP_{n,2,n,2} = P(n,2) for n = 5, 7, 9", found)]
    return checks, f"{sum(found)} isomorphisms found"


@scenario("mp-blocks")
def _mp_blocks(settings: ScenarioSettings) -> ScenarioOutcome:
    checks, orders = [], []
    for params in (MPParams(27, 3, 9, 4), MPParams(9, 3, 3, 2)):
        graph = multilayer_generalized_petersen(params)
        A = automorphism_group(graph, max_degree=settings.max_aut_degree)
        orders.append(A.order)
        layers = mp_layers(params)
        parts = [[j for j in range(params.m) if j % params.s == c] for c in range(params.s)]
        layer = induced_subgraph(graph, layers[0])
        lex = lexicographic_product(cycle_graph(params.s), empty_graph(params.m // params.s))
        checks.extend(
            [
                Check(f"{params}: layers form a block system", True, is_block_system(A, layers)),
                Check(
                    f"{params}: layer quotient is a cycle",
                    True,
                    are_isomorphic(quotient_graph(graph, layers), cycle_graph(params.n))
                    is not None,
                    "derived",
                ),
                Check(
                    f"{params}: layer is C_s[(m/s)K1]",
                    True,
                    are_isomorphic(layer, lex) is not None,
                ),
                Check(
                    f"{params}: residue classes mod s give C_s",
                    True,
                    are_isomorphic(quotient_graph(layer, parts), cycle_graph(params.s)) is not None,
                    "derived",
                ),
            ]
        )
    return checks, f"|Aut| = {orders}"


@scenario("mp-distance-claim")
def _mp_distance_claim(settings: ScenarioSettings) -> ScenarioOutcome:
    report = verify_mp_distance_claim(3, 3, 1, 4)
    checks = [
        Check("pairs checked", 72, report.checked, "trivial"),
        Check("distance violations", 0, len(report.violations)),
        Check("inner-edge exponent reading", "layer", report.reading, "discrepancy"),
    ]
    return checks, f"{report.checked} pairs by breadth-first search; {report.discrepancy}"


@scenario("mp-cayley-iso")
def _mp_cayley_iso(settings: ScenarioSettings) -> ScenarioOutcome:
    checks = []
    for (p, m, n, lam), edges in (((3, 3, 1, 4), 324), ((3, 4, 2, 4), 2916)):
        report = verify_mp_cayley_isomorphism(p, m, n, lam)
        checks.append(Check(f"({p},{m},{n},{lam}) edges", edges, report.edges_checked, "derived"))
        checks.append(Check(f"({p},{m},{n},{lam}) violations", 0, len(report.violations)))
    return checks, "explicit map y^i x^j z^k -> (k p^(m-1) + j, i)"


@scenario("theorem-6-1-flagship", aliases=("flagship-cayley-not-metacyclic",))
def _flagship(settings: ScenarioSettings) -> ScenarioOutcome:
    params, graph = flagship_graph()
    rotation, shift = mp_rotation(params), mp_layer_shift(params, params.t)
    named = PermutationGroup([rotation, shift])
    A = automorphism_group(graph, max_degree=settings.max_aut_degree)
    P = sylow_p_subgroup(A, 3, seed=named)
    report = _classify(graph, settings, A=A, sylow=P)

    target = mp_cayley_group(3, 3, 1, 4)
    regular = PermutationGroup(report.flags["cayley"].witness, degree=graph.n)
    iso = find_isomorphism(from_permutation_group(regular), target)
    if iso is None:
        for R in iter_regular_subgroups(A, "any", sylow=P, budget=settings.budget("regular any")):
            iso = find_isomorphism(from_permutation_group(R), target)
            if iso is not None:
                break
    named_group = from_permutation_group(named)
    wmc = report.flags["weak_metacirculant_cayley"]
    witness_cert = report.flags["weak_metacirculant"].certificate
    witness_order = witness_cert.get("order")
    cayley_iso = verify_mp_cayley_isomorphism(3, 3, 1, 4)
    checks = [
        Check("vertices", 81, graph.n, "trivial"),
        Check("valency", 8, graph.valency, "trivial"),
        Check(
            "rotation and layer shift are automorphisms",
            True,
            is_automorphism(graph, rotation) and is_automorphism(graph, shift),
            "derived",
        ),
        Check("|<rotation, layer shift>|", 243, named.order),
        Check(
            "<rotation, layer shift> is transitive", True, transitivity_profile(named).transitive
        ),
        Check("<rotation, layer shift> is metacyclic", True, is_metacyclic(named_group).answer),
        Check(
            "vertex stabilizer in <rotation, layer shift>", 3, stabilizer(named, 0).order, "derived"
        ),
        Check("Sylow subgroup order", 3 ** multiplicity(3, A.order), P.order, "derived"),
        Check("vertex_transitive", True, report.value("vertex_transitive")),
        Check("cayley", True, report.value("cayley")),
        Check("weak_metacirculant", True, report.value("weak_metacirculant")),
        Check("split_weak_metacirculant", True, report.value("split_weak_metacirculant")),
        Check("metacirculant", True, report.value("metacirculant")),
        Check("weak_metacirculant_cayley", False, report.value("weak_metacirculant_cayley")),
        Check("transitive metacyclic witness order", 243, witness_order),
        Check("metacyclic regular search exhausted", 1, int(wmc.certificate.get("exhausted", 0))),
        Check("regular subgroup isomorphic to the MP Cayley group", True, iso is not None),
        Check("Cayley isomorphism edges", 324, cayley_iso.edges_checked, "derived"),
        Check("Cayley isomorphism violations", 0, len(cayley_iso.violations)),
        Check(
            "inner arcs form one arc orbit",
            True,
            inner_arc_transitivity_check(3, 3, 1, 4, A=A),
            "derived",
        ),
    ]
    detail = (
        f"|Aut| = {A.order}, |P| = {P.order}, "
        f"transitive metacyclic witness of order {witness_order}"
    )
    return checks, detail


@scenario("theorem-1-1-crossval", aliases=("split-witness-crossval",))
def _split_witness_crossval(settings: ScenarioSettings) -> ScenarioOutcome:
    rng = settings.rng(11)
    G = split_metacyclic_group(27, 3, 10)
    corpus = order_27_corpus(settings.seed) + [flagship_graph()[1]]
    for k, valency in enumerate((4, 4, 6, 6, 8)):
        S = random_connection_set(G, valency, rng)
        corpus.append(cayley_graph(G, S, name=f"Cay(C27:C3, v{valency}#{k})"))
    agree, positives = [], 0
    for graph in corpus:
        A = automorphism_group(graph, max_degree=settings.max_aut_degree)
        P = sylow_p_subgroup(A, 3)
        split_route = _classify(graph, settings, A=A, sylow=P).value("metacirculant")
        pair = metacirculant_pair_search(
            graph, 3, A=A, sylow=P, budget=settings.budget("pair search")
        )
        if pair is not None and not is_metacirculant_definitional(graph, *pair):
            raise RuntimeError(f"{graph.name}: pair search returned a non-witness")
        if split_route != (pair is not None):
            logger.error(
                f"{graph.name}: split route {split_route}, definitional {pair is not None}"
            )
        agree.append(split_route == (pair is not None))
        positives += bool(split_route)
    checks = [_tally("split route agrees with definitional search", agree)]
    return checks, f"{len(corpus)} graphs, {positives} metacirculants"


@scenario("lemma-4-1-bounds", aliases=("small-order-metacyclic-cayley",))
def _small_order_metacyclic_cayley(settings: ScenarioSettings) -> ScenarioOutcome:
    corpus = order_27_corpus(settings.seed)
    reports = [_classify(graph, settings) for graph in corpus]
    cycle = _classify(cayley_graph(cyclic_group(81), [1, 80], name="C81"), settings)
    checks = [
        Check("corpus size at least 10", True, len(corpus) >= 10, "trivial"),
        _tally(
            "weak_metacirculant_cayley", (r.value("weak_metacirculant_cayley") for r in reports)
        ),
        _tally("weak_metacirculant", (r.value("weak_metacirculant") for r in reports), "derived"),
        _tally("C81 cycle: every flag", (cycle.value(name) for name in cycle.flags), "trivial"),
    ]
    valencies = sorted({graph.valency for graph in corpus})
    return checks, f"{len(corpus)} Cayley graphs of order 27, valencies {valencies}"


@scenario("theorem-1-3-spotcheck", aliases=("order-p4-trichotomy",))
def _order_p4_trichotomy(settings: ScenarioSettings) -> ScenarioOutcome:
    rng = settings.rng(13)
    _, flagship = flagship_graph()
    graphs = [flagship, multilayer_generalized_petersen(mp_params_for(3, 3, 1, 7))]
    graphs.append(cayley_graph(cyclic_group(81), [1, 80, 3, 78, 9, 72, 27, 54], name="Circ(81)"))
    for label, G in (
        ("C27:C3", split_metacyclic_group(27, 3, 10)),
        ("C9xC9", split_metacyclic_group(9, 9, 1)),
    ):
        graphs.append(cayley_graph(G, random_connection_set(G, 8, rng), name=f"Cay({label}, v8)"))
    results = []
    reports = [_classify(graph, settings) for graph in graphs]
    metacirculant = _tally(
        "metacirculant before case split", (r.value("metacirculant") for r in reports)
    )
    if not metacirculant.passed:
        return [metacirculant], "case split needs every graph to be a metacirculant"
    for graph, report in zip(graphs, reports):
        case = trichotomy_case(graph, report, 3)
        logger.info(f"{graph.name}: {case.cases}")
        results.append((graph, case))
    flagship_case = results[0][1]
    checks = [
        metacirculant,
        _tally("valency 2p + 2", (g.valency == 8 for g, _ in results), "trivial"),
        _tally("exactly one case", (c.exactly_one for _, c in results)),
        Check("flagship case", ["mp"], flagship_case.cases),
        Check("flagship lambda has order p^2 mod p^3", True, flagship_case.mp_lambda is not None),
        Check("circulant case", ["metacyclic-cayley"], results[2][1].cases, "derived"),
        Check("stated third-case order", 3**5, MPParams(27, 9, 9, 4).order, "discrepancy"),
        Check("checked third-case order", 3**4, MPParams(27, 3, 9, 4).order, "discrepancy"),
    ]
    detail = "; ".join(f"{g.name}: {','.join(c.cases) or 'none'}" for g, c in results)
    detail += f"; {flagship_case.discrepancy}"
    return checks, detail


@scenario("cayley-normalizer")
def _cayley_normalizer(settings: ScenarioSettings) -> ScenarioOutcome:
    instances: List[Tuple[str, FiniteGroup, Sequence[int]]] = []
    instances.append(("C27, +-1", cyclic_group(27), [1, 26]))
    for label, G in (
        ("C3xC3", split_metacyclic_group(3, 3, 1)),
        ("C9:C3", split_metacyclic_group(9, 3, 4)),
        ("C7:C3", split_metacyclic_group(7, 3, 2)),
    ):
        sigma, tau = G.index_of((1, 0)), G.index_of((0, 1))
        instances.append((label, G, sorted({sigma, tau, int(G.inv[sigma]), int(G.inv[tau])})))
    checks, sizes = [], []
    for label, G, S in instances:
        report = verify_cayley_normalizer(G, S)
        checks.append(
            Check(
                f"{label}: |N(R(G))| = |G| |Aut(G,S)|",
                report.group_order * report.fixing_automorphisms,
                report.normalizer_order,
            )
        )
        sizes.append(f"{label} {report.normalizer_order}")
    return checks, ", ".join(sizes)


@scenario("petersen-non-cayley")
def _petersen_non_cayley(settings: ScenarioSettings) -> ScenarioOutcome:
    graph = generalized_petersen(5, 2)
    A = automorphism_group(graph, max_degree=settings.max_aut_degree)
    result = regular_subgroup_search(A, "any", budget=settings.budget("regular any"))
    checks = [
        Check("|Aut(P(5,2))|", 120, A.order, "oracle"),
        Check("vertex-transitive", True, transitivity_profile(A).transitive, "derived"),
        Check("regular subgroups", 0, len(result.witnesses)),
        Check("search exhausted", True, result.exhausted),
        Check(
            "rotation and swap are a metacirculant pair",
            True,
            is_metacirculant_definitional(graph, petersen_rotation(5), petersen_swap(5, 2)),
        ),
    ]
    return checks, f"{result.stats.get('nodes', 0)} search nodes"


# -- running --------------------------------------------------------------------------------


def run_scenario(name: str, settings: Optional[ScenarioSettings] = None) -> ScenarioResult:
    name = resolve_scenario(name)
    settings = settings or ScenarioSettings()
    logger.info(f"Running scenario {name}")
    start = time.perf_counter()
    try:
        checks, detail = SCENARIOS[name](settings)
        status = "pass" if all(c.passed for c in checks) else "fail"
    except SearchBudgetExceeded as e:
        logger.warning(f"Scenario {name} inconclusive: {e}")
        checks, detail, status = [], str(e), "inconclusive"
    except (MetacirculantError, RuntimeError) as e:
        logger.exception(f"Scenario {name} failed")
        checks, detail, status = [], f"{type(e).__name__}: {e}", "fail"
    elapsed = time.perf_counter() - start
    for check in checks:
        if not check.passed:
            logger.error(
                f"{name}: {check.name}: expected {check.expected}, observed {check.observed}"
            )
    logger.info(f"Scenario {name}: {status} in {elapsed:.1f}s")
    return ScenarioResult(name, status, checks, elapsed, detail)


def run_scenarios(
    names: Sequence[str], settings: Optional[ScenarioSettings] = None, threads: int = 1
) -> List[ScenarioResult]:
    """Run ``names`` on ``threads`` workers; results come back in the order given."""
    unknown = [name for name in names if name not in SCENARIOS and name not in SCENARIO_ALIASES]
    if unknown:
        raise NotFound(
            f"unknown scenario(s) {', '.join(unknown)}; valid ids: {', '.join(SCENARIOS)}"
        )
    worker = partial(run_scenario, settings=settings or ScenarioSettings())
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        return list(
            tqdm(pool.map(worker, names), total=len(names), desc="Scenarios", unit="scenario")
        )


def summary_table(results: Sequence[ScenarioResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "scenario": r.scenario,
                "status": r.status,
                "checks": len(r.checks),
                "passed": r.passed_checks,
                "wall_time": round(r.wall_time, 2),
            }
            for r in results
        ],
        columns=["scenario", "status", "checks", "passed", "wall_time"],
    )
