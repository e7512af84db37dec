"""Classification predicates for vertex-transitive graphs of prime-power order.

Searches never report a negative answer without exhausting their search space:
budget overruns surface as ``SearchBudgetExceeded`` and become inconclusive flags.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger
from sympy.ntheory import n_order

from metacirculant.config import Config, SearchBudget, setting
from metacirculant.errors import (
    AdjacencyMismatch,
    CapExceeded,
    NotFound,
    PreconditionError,
    SearchBudgetExceeded,
)
from metacirculant.finite_groups import (
    FiniteGroup,
    closure,
    find_order_pn_overgroup,
    from_permutation_group,
    group_automorphisms,
    is_metacyclic,
    is_split_metacyclic,
    iter_split_decompositions,
    mp_cayley_group,
    prime_power,
    regular_representation,
)
from metacirculant.graph_aut import (
    UnionFind,
    are_isomorphic,
    arc_orbits,
    automorphism_group,
    is_automorphism,
)
from metacirculant.graphs import (
    Graph,
    MPParams,
    bfs_distances,
    cayley_connection_set_mp,
    cayley_graph,
    coset_action_group,
    coset_graph_from_arc,
    component_count,
    double_coset,
    induced_subgraph,
    mp_layers,
    multilayer_generalized_petersen,
)
from metacirculant.models import ClassificationReport, FlagResult, FlagStatus
from metacirculant.perm_core import (
    ElementIndex,
    Permutation,
    PermutationGroup,
    normalizer_in,
    normalizes,
    orbits,
    p_part,
    schreier_sims,
    transitivity_profile,
)

Predicate = Literal["any", "metacyclic", "cyclic"]


# -- vectorised permutation rows ------------------------------------------------------------


def _then(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Row-wise composition: apply ``first`` then ``second``."""
    return np.take_along_axis(second, first, axis=1)


def _conjugates(block: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``c^-1 x c`` for every row ``c`` of ``block``."""
    inverse = np.argsort(block, axis=1)
    return np.take_along_axis(block, x[inverse], axis=1)


def _conjugate_all(rows: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``c^-1 g c`` for every row ``g``."""
    return c[rows[:, np.argsort(c)]]


def _semiregular_mask(rows: np.ndarray) -> np.ndarray:
    n = rows.shape[1]
    points = np.arange(n)
    ok = np.zeros(len(rows), dtype=bool)
    decided = np.zeros(len(rows), dtype=bool)
    cur = rows
    for _ in range(n):
        fixed = cur == points
        some = fixed.any(axis=1)
        fresh = some & ~decided
        ok[fresh] = fixed.all(axis=1)[fresh]
        decided |= some
        if decided.all():
            break
        cur = _then(cur, rows)
    return ok


def _orbit_length_of_zero(rows: np.ndarray) -> np.ndarray:
    length = np.ones(len(rows), dtype=np.int64)
    pos = rows[:, 0].copy()
    idx = np.arange(len(rows))
    for k in range(2, rows.shape[1] + 2):
        open_ = pos != 0
        if not open_.any():
            break
        pos[open_] = rows[idx[open_], pos[open_]]
        length[open_] = k
    return length


def _sorted_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) <= 1:
        return rows
    return rows[np.lexsort(rows.T[::-1])]


def _power_rows(x: np.ndarray) -> np.ndarray:
    powers = [np.arange(len(x), dtype=np.int32)]
    cur = x.astype(np.int32)
    while not np.array_equal(cur, powers[0]):
        powers.append(cur)
        cur = x[cur]
    return np.array(powers, dtype=np.int32)


def _has_cycle_of_length(rows: np.ndarray, m: int, p: int) -> np.ndarray:
    """Rows with a cycle of length exactly ``m`` (a power of ``p``)."""
    points = np.arange(rows.shape[1])
    powers = {1: rows}

    def power(k: int) -> np.ndarray:
        if k == 0:
            return np.broadcast_to(points, rows.shape)
        if k not in powers:
            half = power(k // 2)
            sq = _then(half, half)
            powers[k] = _then(sq, rows) if k % 2 else sq
        return powers[k]

    fixed_m = power(m) == points
    if m == 1:
        return fixed_m.any(axis=1)
    fixed_sub = power(m // p) == points
    return (fixed_m & ~fixed_sub).any(axis=1)


def _conjugacy_representatives(
    cands: np.ndarray, gens: Sequence[np.ndarray]
) -> np.ndarray:
    """Indices of the least row in each orbit of ``<gens>`` acting by conjugation."""
    if not gens or len(cands) <= 1:
        return np.arange(len(cands))
    index = ElementIndex(cands)
    graph = nx.Graph()
    graph.add_nodes_from(range(len(cands)))
    for c in gens:
        images = index.lookup(_conjugate_all(cands, c))
        if (images < 0).any():
            raise RuntimeError("conjugating group does not preserve the candidate set")
        graph.add_edges_from(zip(range(len(cands)), images.tolist()))
    return np.array(sorted(min(comp) for comp in nx.connected_components(graph)))


def _generators_of(elements: np.ndarray, rng: np.random.Generator) -> List[np.ndarray]:
    """A small generating set of the group whose full element list is ``elements``."""
    if len(elements) <= 1:
        return []
    n = elements.shape[1]
    gens: List[np.ndarray] = []
    order = 1
    picks = rng.permutation(len(elements))
    for i in picks:
        g = elements[i]
        if np.array_equal(g, np.arange(n)):
            continue
        trial = schreier_sims(
            [Permutation(tuple(int(x) for x in row)) for row in gens + [g]], degree=n
        )
        if trial.order > order:
            gens.append(g)
            order = trial.order
            if order == len(elements):
                break
    return gens


def _p_part_of_order(order: int, p: int) -> int:
    q = 1
    while order % p == 0:
        order //= p
        q *= p
    return q


def _is_p_power(k: int, p: int) -> bool:
    while k % p == 0:
        k //= p
    return k == 1


def _require_p_power_degree(degree: int, p: int) -> None:
    pp = prime_power(degree)
    if pp is None or pp[0] != p or p == 2:
        raise PreconditionError(f"degree {degree} is not a power of the odd prime {p}")


# -- Sylow subgroups ------------------------------------------------------------------------


def _p_element_mask(rows: np.ndarray, exponent: int) -> np.ndarray:
    """Rows whose order divides ``exponent``."""
    points = np.arange(rows.shape[1])
    result = np.broadcast_to(points, rows.shape)
    base = rows
    k = exponent
    while k:
        if k & 1:
            result = _then(result, base)
        k >>= 1
        if k:
            base = _then(base, base)
    return np.all(result == points, axis=1)


def _as_perm(row: np.ndarray) -> Permutation:
    return Permutation(tuple(int(v) for v in row))


def _is_p_group(gens: Sequence[Permutation], degree: int, p: int) -> Optional[PermutationGroup]:
    group = PermutationGroup(gens, degree=degree)
    if not all(_is_p_power(len(cell), p) for cell in orbits(group)):
        return None
    return group if _is_p_power(group.order, p) else None


def sylow_p_subgroup(
    A: PermutationGroup,
    p: int,
    seed: Optional[PermutationGroup] = None,
    trials: Optional[int] = None,
    rng_seed: Optional[int] = None,
    enumeration_limit: Optional[int] = None,
) -> PermutationGroup:
    """A Sylow p-subgroup of ``A`` by ascent from ``seed`` (or the trivial group).

    A candidate p-element is adjoined when it normalizes the current subgroup or the
    enlarged group is still a p-group. Groups of order at most ``enumeration_limit`` are
    scanned exhaustively, larger ones by ``trials`` random elements.
    """
    trials = setting(trials, "SYLOW_TRIALS")
    enumeration_limit = min(
        setting(enumeration_limit, "MAX_GROUP_ORDER"), Config.STABILIZER_ENUMERATION_LIMIT
    )
    target = _p_part_of_order(A.order, p)
    if target == 1:
        return PermutationGroup.trivial(A.degree)
    if target == A.order:
        return A
    gens: List[Permutation] = []
    Q = PermutationGroup.trivial(A.degree)
    if seed is not None:
        if not all(A.contains(g) for g in seed.generators) or not _is_p_power(seed.order, p):
            raise PreconditionError("seed must be a p-subgroup of A")
        gens, Q = list(seed.generators), seed

    def offer(e: Permutation) -> bool:
        nonlocal gens, Q
        if e.is_identity or Q.contains(e):
            return False
        if normalizes(e, Q):
            bigger = PermutationGroup(gens + [e], degree=A.degree)
        else:
            bigger = _is_p_group(gens + [e], A.degree, p)
            if bigger is None:
                return False
        gens, Q = gens + [e], bigger
        logger.debug(f"Sylow ascent: order {Q.order} of {target}")
        return True

    strong = A.strong_generators()
    for g in strong:
        offer(p_part(g, p))
        if Q.order == target:
            return Q
    for g in strong:
        for h in strong:
            offer(p_part(g * h, p))
            if Q.order == target:
                return Q
    if A.order <= enumeration_limit:
        rows = _sorted_rows(A.chain.element_array())
        p_elements = [_as_perm(row) for row in rows[_p_element_mask(rows, target)]]
        progress = True
        while Q.order < target and progress:
            progress = any([offer(e) for e in p_elements if not Q.contains(e)])
        return Q
    rng = np.random.default_rng(setting(rng_seed, "SEED"))
    for _ in range(trials):
        offer(p_part(A.random_element(rng), p))
        if Q.order == target:
            return Q
    raise SearchBudgetExceeded("sylow", trials, trials, partial=Q.order)


# -- regular subgroups ----------------------------------------------------------------------


@dataclass
class _SearchFrame:
    """Point-stabilizer data shared by the subgroup searches inside a transitive group."""

    group: PermutationGroup
    transversal: Dict[int, np.ndarray]
    stabilizer: np.ndarray
    rng: np.random.Generator

    @classmethod
    def build(cls, group: PermutationGroup, rng_seed: Optional[int] = None) -> "_SearchFrame":
        chain = group.chain_with_base((0,))
        level = chain.levels[0]
        transversal = {v: np.asarray(u, dtype=np.int32) for v, u in level.transversal.items()}
        tail = chain.tail(1)
        stab_order = tail.order
        if stab_order > Config.STABILIZER_ENUMERATION_LIMIT:
            raise SearchBudgetExceeded(
                "point stabilizer enumeration", stab_order, Config.STABILIZER_ENUMERATION_LIMIT
            )
        stabilizer = _sorted_rows(tail.element_array())
        return cls(group, transversal, stabilizer, np.random.default_rng(setting(rng_seed, "SEED")))

    @property
    def degree(self) -> int:
        return self.group.degree

    def mapping_zero_to(self, v: int) -> np.ndarray:
        """Every element of the group sending ``0`` to ``v``, in lexicographic order."""
        return _sorted_rows(self.transversal[v][self.stabilizer])

    def fixing(self, v: int) -> np.ndarray:
        return self.stabilizer[self.stabilizer[:, v] == v]


def _subgroup_elements(gens: Sequence[Tuple[int, ...]], n: int, limit: int) -> Optional[np.ndarray]:
    """Elements of ``<gens>`` if it is semiregular of order at most ``limit``."""
    identity = tuple(range(n))
    seen = {identity}
    queue = [identity]
    for x in queue:
        for g in gens:
            y = tuple(map(g.__getitem__, x))
            if y in seen:
                continue
            if y[0] == 0 or any(i == v for i, v in enumerate(y)):
                return None
            seen.add(y)
            queue.append(y)
            if len(seen) > limit:
                return None
    return np.array(sorted(seen), dtype=np.int32)


def _satisfies(elements: np.ndarray, gens: Sequence[Tuple[int, ...]], predicate: Predicate) -> bool:
    if predicate == "any":
        return True
    if _orbit_length_of_zero(elements).max() == len(elements):
        return True
    if predicate == "cyclic":
        return False
    group = from_permutation_group(
        PermutationGroup([Permutation(g) for g in gens], degree=elements.shape[1]),
        cap=max(Config.FINITE_GROUP_CAP, len(elements)),
    )
    return is_metacyclic(group, cap=group.n).answer


@dataclass
class RegularSearchResult:
    witnesses: List[PermutationGroup]
    exhausted: bool
    stats: Dict[str, int] = field(default_factory=dict)


def _search_group(
    A: PermutationGroup, p: Optional[int], sylow: Optional[PermutationGroup]
) -> PermutationGroup:
    if sylow is not None:
        return sylow
    pp = prime_power(A.degree)
    if p is not None and pp is not None and pp[0] == p:
        return sylow_p_subgroup(A, p)
    return A


def iter_regular_subgroups(
    A: PermutationGroup,
    predicate: Predicate = "any",
    p: Optional[int] = None,
    sylow: Optional[PermutationGroup] = None,
    budget: Optional[SearchBudget] = None,
    stats: Optional[Dict[str, int]] = None,
    rng_seed: Optional[int] = None,
) -> Iterator[PermutationGroup]:
    """Regular subgroups of ``A`` satisfying ``predicate``, one per conjugacy class at most.

    For prime-power degree the search runs inside a Sylow p-subgroup. Each tree node
    holds a semiregular subgroup ``H``; it is extended by an element sending ``0`` to the
    least vertex outside ``0^H``, taken up to conjugacy by the elements of the point
    stabilizer that normalize ``H`` and fix that vertex.
    """
    budget = budget or SearchBudget(label="regular subgroups")
    stats = stats if stats is not None else {}
    for key in ("nodes", "candidates", "not_semiregular", "predicate_pruned", "witnesses"):
        stats.setdefault(key, 0)
    S = _search_group(A, p, sylow)
    n = A.degree
    if not transitivity_profile(S).transitive:
        return
    frame = _SearchFrame.build(S, rng_seed)

    def extend(elements: np.ndarray, gens: List[Tuple[int, ...]]) -> Iterator[PermutationGroup]:
        budget.tick()
        stats["nodes"] += 1
        if len(elements) == n:
            stats["witnesses"] += 1
            yield PermutationGroup([Permutation(g) for g in gens], degree=n)
            return
        reached = np.zeros(n, dtype=bool)
        reached[elements[:, 0]] = True
        v = int(np.flatnonzero(~reached)[0])
        cands = frame.mapping_zero_to(v)
        cands = cands[_semiregular_mask(cands)]
        stats["candidates"] += len(cands)
        budget.tick(len(cands))
        fixers = frame.fixing(v)
        if len(elements) > 1 and len(fixers):
            index = ElementIndex(elements)
            ok = np.ones(len(fixers), dtype=bool)
            for g in gens:
                ok &= index.lookup(_conjugates(fixers, np.asarray(g, dtype=np.int32))) >= 0
            fixers = fixers[ok]
        reps = _conjugacy_representatives(cands, _generators_of(fixers, frame.rng))
        for i in reps.tolist():
            g = tuple(int(x) for x in cands[i])
            bigger = _subgroup_elements(gens + [g], n, n)
            if bigger is None or n % len(bigger):
                stats["not_semiregular"] += 1
                continue
            if not _satisfies(bigger, gens + [g], predicate):
                stats["predicate_pruned"] += 1
                continue
            yield from extend(bigger, gens + [g])

    identity = np.arange(n, dtype=np.int32)[None, :]
    yield from extend(identity, [])


def regular_subgroup_search(
    A: PermutationGroup,
    predicate: Predicate = "any",
    p: Optional[int] = None,
    limit: Optional[int] = None,
    sylow: Optional[PermutationGroup] = None,
    budget: Optional[SearchBudget] = None,
    rng_seed: Optional[int] = None,
) -> RegularSearchResult:
    stats: Dict[str, int] = {}
    witnesses: List[PermutationGroup] = []
    exhausted = True
    regulars = iter_regular_subgroups(
        A, predicate, p=p, sylow=sylow, budget=budget, stats=stats, rng_seed=rng_seed
    )
    for R in regulars:
        witnesses.append(R)
        if limit is not None and len(witnesses) >= limit:
            exhausted = False
            break
    logger.debug(f"Regular subgroup search ({predicate}): {len(witnesses)} found, stats {stats}")
    return RegularSearchResult(witnesses, exhausted, stats)


# -- transitive metacyclic subgroups --------------------------------------------------------


@dataclass
class _Cyclic:
    """A semiregular element with the orbit data of the cyclic group it generates."""

    x: np.ndarray
    powers: np.ndarray
    index: ElementIndex
    block_of: np.ndarray
    reps: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray) -> "_Cyclic":
        powers = _power_rows(x)
        n = len(x)
        block_of = np.full(n, -1, dtype=np.int64)
        reps = []
        for v in range(n):
            if block_of[v] < 0:
                block_of[powers[:, v]] = len(reps)
                reps.append(v)
        return cls(x, powers, ElementIndex(powers), block_of, np.array(reps))

    @property
    def blocks(self) -> int:
        return len(self.reps)


def _semiregular_elements(frame: _SearchFrame, budget: SearchBudget) -> List[np.ndarray]:
    """Semiregular non-identity elements up to conjugacy in the group, by order descending."""
    found: List[Tuple[int, np.ndarray]] = []
    stab_orbit_reps = sorted(
        {min(cell) for cell in orbits(_stabilizer_group(frame)) if 0 not in cell}
    )
    for w in stab_orbit_reps:
        cands = frame.mapping_zero_to(w)
        cands = cands[_semiregular_mask(cands)]
        budget.tick(len(cands))
        if not len(cands):
            continue
        reps = _conjugacy_representatives(cands, _generators_of(frame.fixing(w), frame.rng))
        lengths = _orbit_length_of_zero(cands[reps])
        found.extend((int(k), cands[i]) for k, i in zip(lengths.tolist(), reps.tolist()))
    found.sort(key=lambda item: (-item[0], tuple(item[1].tolist())))
    return [x for _, x in found]


def _stabilizer_group(frame: _SearchFrame) -> PermutationGroup:
    gens = _generators_of(frame.stabilizer, frame.rng)
    return PermutationGroup(
        [Permutation(tuple(int(v) for v in g)) for g in gens], degree=frame.degree
    )


def _block_cycle_mask(cands: np.ndarray, cyc: _Cyclic) -> np.ndarray:
    """Rows permuting the orbits of ``<x>`` as a single cycle."""
    m = cyc.blocks
    bmap = cyc.block_of[cands[:, cyc.reps]]
    rows = np.arange(len(cands))
    cur = np.zeros(len(cands), dtype=np.int64)
    ok = np.ones(len(cands), dtype=bool)
    for _ in range(m - 1):
        cur = bmap[rows, cur]
        ok &= cur != 0
    return ok & (bmap[rows, cur] == 0)


def _normalizing_mask(cands: np.ndarray, cyc: _Cyclic) -> np.ndarray:
    return cyc.index.lookup(_conjugates(cands, cyc.x)) >= 0


def _y_candidates(frame: _SearchFrame, cyc: _Cyclic) -> Iterator[np.ndarray]:
    """Elements normalizing ``<x>`` that cycle its orbits, one orbit target at a time."""
    for b in range(1, cyc.blocks):
        cands = frame.mapping_zero_to(int(cyc.reps[b]))
        cands = cands[_block_cycle_mask(cands, cyc)]
        cands = cands[_normalizing_mask(cands, cyc)]
        if len(cands):
            yield cands


@dataclass
class MetacyclicWitnessResult:
    group: Optional[PermutationGroup]
    split: Optional[bool]
    exhausted: bool
    stats: Dict[str, int] = field(default_factory=dict)


def transitive_metacyclic_witness(
    A: PermutationGroup,
    p: int,
    require_split: bool = False,
    sylow: Optional[PermutationGroup] = None,
    budget: Optional[SearchBudget] = None,
    rng_seed: Optional[int] = None,
) -> MetacyclicWitnessResult:
    """A transitive metacyclic subgroup ``<x, y>`` of a Sylow p-subgroup of ``A``.

    ``x`` runs over semiregular elements (the normal cyclic factor of a transitive
    metacyclic group is semiregular) and ``y`` over elements normalizing ``<x>`` whose
    action on the orbits of ``<x>`` is a full cycle.
    """
    _require_p_power_degree(A.degree, p)
    budget = budget or SearchBudget(label="metacyclic witness")
    stats = {"x_candidates": 0, "y_candidates": 0, "groups_tested": 0, "skipped_large": 0}
    P = sylow or sylow_p_subgroup(A, p)
    if not transitivity_profile(P).transitive:
        return MetacyclicWitnessResult(None, None, True, stats)
    frame = _SearchFrame.build(P, rng_seed)
    xs = _semiregular_elements(frame, budget)
    stats["x_candidates"] = len(xs)
    for x in xs:
        cyc = _Cyclic.of(x)
        if cyc.blocks == 1:
            return MetacyclicWitnessResult(PermutationGroup([_as_perm(x)]), True, True, stats)
        for cands in _y_candidates(frame, cyc):
            stats["y_candidates"] += len(cands)
            budget.tick(len(cands))
            for row in cands:
                T = PermutationGroup([_as_perm(x), _as_perm(row)], degree=A.degree)
                stats["groups_tested"] += 1
                if not require_split:
                    split = _split_status(T)
                    return MetacyclicWitnessResult(T, split, True, stats)
                split = _split_status(T)
                if split is None:
                    stats["skipped_large"] += 1
                elif split:
                    return MetacyclicWitnessResult(T, True, True, stats)
    return MetacyclicWitnessResult(None, None, stats["skipped_large"] == 0, stats)


def _split_status(T: PermutationGroup) -> Optional[bool]:
    try:
        return is_split_metacyclic(from_permutation_group(T)).answer
    except CapExceeded:
        return None


# -- metacirculants -------------------------------------------------------------------------


def is_metacirculant_definitional(graph: Graph, sigma: Permutation, tau: Permutation) -> bool:
    """Check that ``sigma`` and ``tau`` witness that ``graph`` is a metacirculant.

    The conditions are that ``<sigma>`` is semiregular, that ``tau`` normalizes ``<sigma>``
    and cycles its ``m`` orbits, and that ``tau`` has an ``m``-cycle.
    """
    if not (is_automorphism(graph, sigma) and is_automorphism(graph, tau)):
        raise PreconditionError("sigma and tau must be automorphisms of the graph")
    cycles = sigma.cycles(include_fixed=True)
    if len({len(c) for c in cycles}) != 1:
        return False
    m = len(cycles)
    powers = {(sigma**k).images for k in range(sigma.order)}
    if sigma.conjugate(tau).images not in powers:
        return False
    orbit_of = {}
    for k, c in enumerate(cycles):
        for v in c:
            orbit_of[v] = k
    induced = [orbit_of[tau(c[0])] for c in cycles]
    k, steps = 0, 0
    while True:
        k = induced[k]
        steps += 1
        if k == 0:
            break
    if steps != m:
        return False
    return any(len(c) == m for c in tau.cycles(include_fixed=True))


def metacirculant_pair_search(
    graph: Graph,
    p: int,
    A: Optional[PermutationGroup] = None,
    sylow: Optional[PermutationGroup] = None,
    budget: Optional[SearchBudget] = None,
) -> Optional[Tuple[Permutation, Permutation]]:
    """Search ``(sigma, tau)`` inside a Sylow p-subgroup of ``Aut(graph)`` directly.

    Returns the first pair found. A miss only covers pairs generating a p-group; the
    split-witness route in ``classify`` is the one that certifies a negative answer.
    """
    _require_p_power_degree(graph.n, p)
    budget = budget or SearchBudget(label="metacirculant pair")
    A = A or automorphism_group(graph)
    P = sylow or sylow_p_subgroup(A, p)
    if not transitivity_profile(P).transitive:
        return None
    frame = _SearchFrame.build(P)
    for x in _semiregular_elements(frame, budget):
        cyc = _Cyclic.of(x)
        m = cyc.blocks
        if m == 1:
            return (_as_perm(x), Permutation.identity(graph.n))
        for cands in _y_candidates(frame, cyc):
            for power in cyc.powers:
                shifted = power[cands]
                budget.tick(len(shifted))
                hits = np.flatnonzero(_has_cycle_of_length(shifted, m, p))
                if len(hits):
                    return (_as_perm(x), _as_perm(shifted[hits[0]]))
    return None


def metacirculant_pair_from_split(
    graph: Graph, T: PermutationGroup
) -> Optional[Tuple[Permutation, Permutation]]:
    """Build ``(sigma, tau)`` from a transitive split metacyclic group ``T``.

    ``sigma`` generates the cyclic normal factor of a split decomposition. ``tau`` is
    first sought as an element containing a point-stabilizer generator, then as the
    complement generator, then among all elements of ``T``.
    """
    TG = from_permutation_group(T)
    perms = TG.permutations
    stab = np.flatnonzero(perms[:, 0] == 0)
    g = int(stab[np.argmax(TG.orders[stab])]) if len(stab) > 1 else 0
    seen = set()
    for witness in iter_split_decompositions(TG):
        if witness.normal_generator in seen:
            continue
        seen.add(witness.normal_generator)
        sigma = _as_perm(perms[witness.normal_generator])
        taus = [witness.complement_generator]
        if g:
            try:
                taus.insert(0, find_order_pn_overgroup(TG, witness.normal_generator, g).tau)
            except (PreconditionError, NotFound) as e:
                logger.debug(f"No stabilizer overgroup for this decomposition: {e}")
        for tau in taus + list(range(TG.n)):
            if is_metacirculant_definitional(graph, sigma, _as_perm(perms[tau])):
                return sigma, _as_perm(perms[tau])
    return None


# -- classification -------------------------------------------------------------------------


def _inconclusive(e: SearchBudgetExceeded) -> FlagResult:
    return FlagResult(
        FlagStatus.INCONCLUSIVE, certificate={"reason": str(e), "nodes": e.used, "limit": e.limit}
    )


def classify(
    graph: Graph,
    p: int,
    search_nodes: Optional[int] = None,
    max_aut_degree: Optional[int] = None,
    A: Optional[PermutationGroup] = None,
    sylow: Optional[PermutationGroup] = None,
    seed: Optional[int] = None,
    max_group_order: Optional[int] = None,
    threads: int = 1,
) -> ClassificationReport:
    """All six flags of ``graph``; ``A`` and ``sylow`` may be supplied when already known.

    With ``threads > 1`` the metacyclic regular search and the transitive metacyclic
    search run side by side. Each keeps its own budget and seed, so the flags match a
    single-threaded run.
    """
    search_nodes = setting(search_nodes, "SEARCH_NODES")
    seed = setting(seed, "SEED")
    _require_p_power_degree(graph.n, p)
    A = A or automorphism_group(graph, max_degree=max_aut_degree)
    report = ClassificationReport(order=graph.n, prime=p, aut_order=A.order)
    flags = report.flags
    logger.info(f"Classifying {graph.name or 'graph'}: order {graph.n}, |Aut| = {A.order}")

    if not transitivity_profile(A).transitive:
        no = {"reason": "Aut(graph) is intransitive", "orbits": len(orbits(A))}
        for name in (
            "vertex_transitive",
            "cayley",
            "weak_metacirculant",
            "split_weak_metacirculant",
            "metacirculant",
            "weak_metacirculant_cayley",
        ):
            flags[name] = FlagResult(FlagStatus.NO, certificate=dict(no))
        return report
    flags["vertex_transitive"] = FlagResult(FlagStatus.YES, witness=list(A.generators))

    try:
        P = sylow or sylow_p_subgroup(A, p, rng_seed=seed, enumeration_limit=max_group_order)
    except SearchBudgetExceeded as e:
        for name in (
            "cayley",
            "weak_metacirculant",
            "split_weak_metacirculant",
            "metacirculant",
            "weak_metacirculant_cayley",
        ):
            flags[name] = _inconclusive(e)
        return report

    def regular(predicate: Predicate) -> FlagResult:
        try:
            result = regular_subgroup_search(
                A,
                predicate,
                sylow=P,
                limit=1,
                budget=SearchBudget(search_nodes, label=predicate),
                rng_seed=seed,
            )
        except SearchBudgetExceeded as e:
            return _inconclusive(e)
        if result.witnesses:
            return FlagResult(FlagStatus.YES, list(result.witnesses[0].generators), result.stats)
        return FlagResult(FlagStatus.NO, certificate=dict(result.stats, exhausted=1))

    def witness(require_split: bool) -> Tuple[FlagResult, Optional[PermutationGroup]]:
        try:
            result = transitive_metacyclic_witness(
                A,
                p,
                require_split=require_split,
                sylow=P,
                budget=SearchBudget(search_nodes, label="metacyclic witness"),
                rng_seed=seed,
            )
        except SearchBudgetExceeded as e:
            return _inconclusive(e), None
        if result.group is not None:
            cert = dict(result.stats, order=result.group.order, split=int(bool(result.split)))
            return FlagResult(FlagStatus.YES, list(result.group.generators), cert), result.group
        status = FlagStatus.NO if result.exhausted else FlagStatus.INCONCLUSIVE
        cert = dict(result.stats, exhausted=int(result.exhausted))
        return FlagResult(status, certificate=cert), None

    with ThreadPoolExecutor(max_workers=2 if threads > 1 else 1) as pool:
        metacyclic_regular = pool.submit(regular, "metacyclic")
        transitive = pool.submit(witness, False)
        flags["weak_metacirculant_cayley"] = metacyclic_regular.result()
        flags["weak_metacirculant"], T = transitive.result()

    if flags["weak_metacirculant_cayley"].status is FlagStatus.YES:
        flags["cayley"] = FlagResult(
            FlagStatus.YES,
            flags["weak_metacirculant_cayley"].witness,
            {"from": "metacyclic regular"},
        )
    else:
        flags["cayley"] = regular("any")

    if T is not None and _split_status(T):
        flags["split_weak_metacirculant"] = FlagResult(
            FlagStatus.YES, list(T.generators), dict(flags["weak_metacirculant"].certificate)
        )
    elif flags["weak_metacirculant"].status is FlagStatus.NO:
        flags["split_weak_metacirculant"] = FlagResult(
            FlagStatus.NO, certificate={"reason": "no transitive metacyclic subgroup"}
        )
    else:
        flags["split_weak_metacirculant"], T = witness(True)

    split_flag = flags["split_weak_metacirculant"]
    if split_flag.status is FlagStatus.YES and T is not None:
        pair = metacirculant_pair_from_split(graph, T)
        if pair is not None:
            flags["metacirculant"] = FlagResult(
                FlagStatus.YES, list(pair), {"route": "split metacyclic witness", "confirmed": 1}
            )
        else:
            flags["metacirculant"] = FlagResult(
                FlagStatus.INCONCLUSIVE, certificate={"reason": "no pair built from split witness"}
            )
    elif split_flag.status is FlagStatus.NO:
        flags["metacirculant"] = FlagResult(
            FlagStatus.NO, certificate={"reason": "no split transitive metacyclic subgroup"}
        )
    else:
        flags["metacirculant"] = FlagResult(
            FlagStatus.INCONCLUSIVE, certificate=dict(split_flag.certificate)
        )

    violations = report.implication_violations()
    if violations:
        logger.error(f"Classification implications violated: {violations}")
        raise RuntimeError(f"inconsistent classification: {violations}")
    logger.info(
        "Flags: " + ", ".join(f"{k}={v.status.value}" for k, v in report.flags.items())
    )
    return report


# -- multilayer generalized Petersen checks -------------------------------------------------


def mp_params_for(p: int, m: int, n: int, lam: int) -> MPParams:
    """``MP_{p^m, p^n, p^(m-1), lam}``, validating the parameter constraints."""
    if not m >= n + 2 >= 3:
        raise PreconditionError(f"need m >= n + 2 >= 3, got m={m}, n={n}")
    if n_order(lam % p**m, p**m) != p ** (n + 1):
        raise PreconditionError(f"lambda={lam} must have order {p ** (n + 1)} modulo {p**m}")
    return MPParams(p**m, p**n, p ** (m - 1), lam)


DISTANCE_CLAIM_DISCREPANCY = (
    "the order-p^4 construction writes the inner-edge exponent of layer j as lambda^i; "
    "graphs are built and checked with the layer-indexed reading lambda^j"
)


@dataclass
class DistanceClaimReport:
    checked: int
    violations: List[Tuple[int, int, int, float]]
    reading: str = "layer"
    discrepancy: Optional[str] = None

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_mp_distance_claim(p: int, m: int, n: int, lam: int) -> DistanceClaimReport:
    """Within each layer ``i``, ``d((0,i), (j,i)) = min(t, p^(m-1) - t)`` where ``t lam^i = j``."""
    params = mp_params_for(p, m, n, lam)
    graph = multilayer_generalized_petersen(params)
    q = p ** (m - 1)
    checked = 0
    violations = []
    for i, layer in enumerate(mp_layers(params)):
        sub = induced_subgraph(graph, layer)
        dist = bfs_distances(sub, sub.vertex(graph.label(params.vertex(0, i))))
        inverse = pow(pow(lam, i, q), -1, q)
        for j in range(params.m):
            if j % q == 0:
                continue
            t = j * inverse % q
            expected = min(t, q - t)
            observed = dist[sub.vertex(graph.label(params.vertex(j, i)))]
            checked += 1
            if observed != expected:
                violations.append((i, j, expected, observed))
    logger.debug(f"Distance claim: {checked} pairs, {len(violations)} violations")
    return DistanceClaimReport(checked, violations, discrepancy=DISTANCE_CLAIM_DISCREPANCY)


@dataclass
class CayleyIsomorphismReport:
    mapping: List[int]
    edges_checked: int
    violations: List[Tuple[Tuple[int, int], str]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self) -> None:
        if self.violations:
            pair, message = self.violations[0]
            raise AdjacencyMismatch(pair, f"{message} ({len(self.violations)} violations)")


def verify_mp_cayley_isomorphism(p: int, m: int, n: int, lam: int) -> CayleyIsomorphismReport:
    """Check ``y^i x^j z^k -> (k p^(m-1) + j, i)`` is an isomorphism onto the MP graph."""
    params = mp_params_for(p, m, n, lam)
    G = mp_cayley_group(p, m, n, lam)
    cay = cayley_graph(G, cayley_connection_set_mp(G, p))
    mp = multilayer_generalized_petersen(params)
    q = p ** (m - 1)
    mapping = [params.vertex(k * q + j, i) for (i, j, k) in G.labels]
    violations: List[Tuple[Tuple[int, int], str]] = []
    if sorted(mapping) != list(range(mp.n)):
        violations.append(((-1, -1), "map is not a bijection"))
    for u, v in cay.edges():
        if not mp.has_edge(mapping[u], mapping[v]):
            violations.append(((u, v), "edge not preserved"))
    if cay.edge_count != mp.edge_count:
        violations.append(((cay.edge_count, mp.edge_count), "edge counts differ"))
    return CayleyIsomorphismReport(mapping, cay.edge_count, violations)


def inner_arc_orbits(
    graph: Graph, params: MPParams, A: Optional[PermutationGroup] = None
) -> Tuple[int, int, bool]:
    """Count ``Aut`` orbits meeting inner arcs and all arc orbits.

    The flag reports whether every orbit meeting an inner arc consists of inner arcs only.
    """
    A = A or automorphism_group(graph)
    orbits_all = arc_orbits(A, graph)
    meeting = [orb for orb in orbits_all if any(u // params.m == v // params.m for u, v in orb)]
    pure = all(all(u // params.m == v // params.m for u, v in orb) for orb in meeting)
    return len(meeting), len(orbits_all), pure


def inner_arc_transitivity_check(
    p: int, m: int, n: int, lam: int, A: Optional[PermutationGroup] = None
) -> bool:
    params = mp_params_for(p, m, n, lam)
    graph = multilayer_generalized_petersen(params)
    meeting, _, pure = inner_arc_orbits(graph, params, A)
    return meeting == 1 and pure


# -- coset graphs and Cayley normalizers ----------------------------------------------------


@dataclass
class CosetClauses:
    edge_transitive: bool
    arc_transitive_iff_self_paired: bool
    connected_iff_generating: bool
    valency_matches: bool
    components_match_index: bool

    @property
    def all_hold(self) -> bool:
        return all(
            (
                self.edge_transitive,
                self.arc_transitive_iff_self_paired,
                self.connected_iff_generating,
                self.valency_matches,
                self.components_match_index,
            )
        )


def verify_coset_arc_clauses(G: FiniteGroup, H: Sequence[int], g: int) -> CosetClauses:
    """Evaluate the structural clauses of ``Cos(G, H, H{g, g^-1}H)`` on the built graph."""
    H = np.asarray(H, dtype=np.int64)
    graph = coset_graph_from_arc(G, H, g)
    arcs = arc_orbits(coset_action_group(G, H), graph)
    orbit_of = {a: k for k, orb in enumerate(arcs) for a in orb}
    pairs = UnionFind(range(len(arcs)))
    for (u, v), k in orbit_of.items():
        pairs.union(k, orbit_of[(v, u)])
    self_paired = np.array_equal(double_coset(G, H, g), double_coset(G, H, int(G.inv[g])))
    sub = closure(G, np.concatenate([H, [g]]))
    components = component_count(graph)
    T, inv = G.table, G.inv
    conjugate = np.unique(T[T[inv[g], H], g])
    index = len(H) // len(np.intersect1d(H, conjugate))
    return CosetClauses(
        edge_transitive=len(pairs.classes()) == 1,
        arc_transitive_iff_self_paired=(len(arcs) == 1) == self_paired,
        connected_iff_generating=(components == 1) == (len(sub) == G.n),
        valency_matches=graph.valency == (index if self_paired else 2 * index),
        components_match_index=components == G.n // len(sub),
    )


@dataclass
class CayleyNormalizerReport:
    normalizer_order: int
    group_order: int
    fixing_automorphisms: int

    @property
    def ok(self) -> bool:
        return self.normalizer_order == self.group_order * self.fixing_automorphisms


def verify_cayley_normalizer(G: FiniteGroup, S: Sequence[int]) -> CayleyNormalizerReport:
    """Compare ``|N_Aut(R(G))|`` with ``|G| * |Aut(G, S)|`` for ``Cay(G, S)``."""
    graph = cayley_graph(G, S)
    A = automorphism_group(graph)
    R = regular_representation(G)
    N = normalizer_in(A, R)
    fixing = group_automorphisms(G, fixing=S)
    return CayleyNormalizerReport(N.order, G.n, len(fixing))


# -- order p^4 case analysis ----------------------------------------------------------------


def order_p4_mp_lambdas(p: int) -> List[int]:
    """Units of multiplicative order ``p^2`` modulo ``p^3``."""
    q = p**3
    return [lam for lam in range(2, q) if lam % p and n_order(lam, q) == p * p]


TRICHOTOMY_DISCREPANCY = (
    "the stated third case MP_{p^3,p^2,p^2,lambda} has order p^5, not p^4; "
    "the order-p^4 family MP_{p^3,p,p^2,lambda} is checked instead"
)


@dataclass
class TrichotomyResult:
    metacyclic_cayley: Optional[bool]
    non_cayley: Optional[bool]
    mp_isomorphic: bool
    mp_lambda: Optional[int] = None
    discrepancy: Optional[str] = None

    @property
    def cases(self) -> List[str]:
        out = []
        if self.metacyclic_cayley:
            out.append("metacyclic-cayley")
        if self.non_cayley:
            out.append("non-cayley")
        if self.mp_isomorphic:
            out.append("mp")
        return out

    @property
    def exactly_one(self) -> bool:
        return len(self.cases) == 1


def trichotomy_case(graph: Graph, report: ClassificationReport, p: int) -> TrichotomyResult:
    """Place an order-p^4 metacirculant in the three-way case split."""
    status = report.flags["metacirculant"].status
    if status is not FlagStatus.YES:
        raise PreconditionError(f"case split needs a metacirculant, flag is {status.value}")
    lam_hit = None
    for lam in order_p4_mp_lambdas(p):
        if are_isomorphic(graph, multilayer_generalized_petersen(MPParams(p**3, p, p * p, lam))):
            lam_hit = lam
            break
    cayley = report.value("cayley")
    return TrichotomyResult(
        metacyclic_cayley=report.value("weak_metacirculant_cayley"),
        non_cayley=None if cayley is None else not cayley,
        mp_isomorphic=lam_hit is not None,
        mp_lambda=lam_hit,
        discrepancy=TRICHOTOMY_DISCREPANCY,
    )
