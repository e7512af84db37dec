import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from metacirculant.errors import NotFound, PreconditionError
from metacirculant.finite_groups import (
    FiniteGroup,
    closure,
    is_core_free,
    is_subgroup_set,
    membership,
    right_cosets,
)
from metacirculant.perm_core import Permutation, PermutationGroup

Edge = Tuple[int, int]


def _bits(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``0..n-1`` stored as neighbour bitsets."""

    n: int
    adj: Tuple[int, ...]
    labels: Optional[Tuple[Hashable, ...]] = None
    name: str = ""

    def __post_init__(self) -> None:
        if len(self.adj) != self.n:
            raise PreconditionError(f"expected {self.n} adjacency rows, got {len(self.adj)}")
        for v, row in enumerate(self.adj):
            if row >> v & 1:
                raise PreconditionError(f"loop at vertex {v}")
            if row >> self.n:
                raise PreconditionError(f"vertex {v} has a neighbour out of range")
            for u in _bits(row):
                if not self.adj[u] >> v & 1:
                    raise PreconditionError(f"edge {v}-{u} is not symmetric")
        if self.labels is not None:
            if len(self.labels) != self.n or len(set(self.labels)) != self.n:
                raise PreconditionError("vertex labels must be a bijection")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Edge],
        labels: Optional[Sequence[Hashable]] = None,
        name: str = "",
    ) -> "Graph":
        adj = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise PreconditionError(f"edge ({u}, {v}) out of range for {n} vertices")
            if u == v:
                raise PreconditionError(f"loop at vertex {u}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return cls(n, tuple(adj), tuple(labels) if labels is not None else None, name)

    @classmethod
    def from_networkx(cls, graph: nx.Graph, name: str = "") -> "Graph":
        nodes = sorted(graph.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        edges = [(index[u], index[v]) for u, v in graph.edges()]
        return cls.from_edges(len(nodes), edges, labels=nodes, name=name)

    def neighbors(self, v: int) -> List[int]:
        return _bits(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    @property
    def degrees(self) -> List[int]:
        return [row.bit_count() for row in self.adj]

    @property
    def valency(self) -> Optional[int]:
        """Common degree, or ``None`` when the graph is not regular."""
        degrees = set(self.degrees)
        return degrees.pop() if len(degrees) == 1 else None

    def edges(self) -> List[Edge]:
        return [(u, v) for u in range(self.n) for v in _bits(self.adj[u] >> (u + 1) << (u + 1))]

    @property
    def edge_count(self) -> int:
        return sum(self.degrees) // 2

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges():
            A[u, v] = A[v, u] = 1
        return A

    @cached_property
    def label_index(self) -> Dict[Hashable, int]:
        labels = self.labels if self.labels is not None else range(self.n)
        return {label: i for i, label in enumerate(labels)}

    def vertex(self, label: Hashable) -> int:
        try:
            return self.label_index[label]
        except KeyError as e:
            raise PreconditionError(f"no vertex labelled {label!r}") from e

    def label(self, v: int) -> Hashable:
        return self.labels[v] if self.labels is not None else v

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """The isomorphic copy where vertex ``v`` becomes ``perm[v]``."""
        edges = ((perm[u], perm[v]) for u, v in self.edges())
        return Graph.from_edges(self.n, edges, name=self.name)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from((v, {"label": self.label(v)}) for v in range(self.n))
        graph.add_edges_from(self.edges())
        return graph

    def __repr__(self) -> str:
        return f"Graph({self.name or 'unnamed'}, n={self.n}, m={self.edge_count})"


def empty_graph(n: int) -> Graph:
    return Graph(n, (0,) * n, name=f"{n}K1")


def complete_graph(n: int) -> Graph:
    full = (1 << n) - 1
    return Graph(n, tuple(full ^ (1 << v) for v in range(n)), name=f"K{n}")


def cycle_graph(n: int) -> Graph:
    return circulant(n, [1, n - 1])


def circulant(n: int, S: Iterable[int]) -> Graph:
    S = sorted({s % n for s in S})
    if 0 in S:
        raise PreconditionError("0 may not be in the connection set")
    if set(S) != {(-s) % n for s in S}:
        raise PreconditionError("connection set is not closed under negation")
    edges = [(i, (i + s) % n) for i in range(n) for s in S]
    return Graph.from_edges(n, edges, name=f"Circ({n}, {S})")


def _check_connection_set(G: FiniteGroup, S: Sequence[int]) -> List[int]:
    S = sorted(set(int(s) for s in S))
    if 0 in S:
        raise PreconditionError("identity may not be in the connection set")
    if set(S) != {int(G.inv[s]) for s in S}:
        raise PreconditionError("connection set is not inverse-closed")
    return S


def random_connection_set(
    G: FiniteGroup, valency: int, rng: np.random.Generator, attempts: int = 1000
) -> List[int]:
    """An inverse-closed generating set of exactly ``valency`` elements."""
    for _ in range(attempts):
        S: set = set()
        for s in rng.permutation(np.arange(1, G.n)).tolist():
            pair = {s, int(G.inv[s])}
            if len(S | pair) <= valency:
                S |= pair
            if len(S) == valency:
                break
        if len(S) == valency and len(closure(G, sorted(S))) == G.n:
            return sorted(S)
    raise NotFound(f"no generating connection set of size {valency} in {attempts} attempts")


def cayley_graph(G: FiniteGroup, S: Sequence[int], name: str = "") -> Graph:
    """``Cay(G, S)``: ``g`` is adjacent to ``s g`` for ``s`` in ``S``."""
    S = _check_connection_set(G, S)
    edges = [(g, int(G.table[s, g])) for g in range(G.n) for s in S]
    labels = G.labels if G.labels is not None else None
    name = name or f"Cay(order {G.n}, |S|={len(S)})"
    return Graph.from_edges(G.n, edges, labels=labels, name=name)


def coset_graph(G: FiniteGroup, H: Sequence[int], D: Sequence[int], name: str = "") -> Graph:
    """``Cos(G, H, D)``: vertices are right cosets ``Hg``; ``Hg`` is adjacent to ``Hdg``."""
    H = np.unique(np.asarray(H, dtype=np.int64))
    D = np.unique(np.asarray(D, dtype=np.int64))
    if not is_subgroup_set(G, H):
        raise PreconditionError("H is not a subgroup")
    in_d = membership(G, D)
    if not in_d[G.inv[D]].all():
        raise PreconditionError("D is not inverse-closed")
    if in_d[H].any():
        raise PreconditionError("D meets H")
    T = G.table
    if not in_d[T[T[np.ix_(H, D)][:, :, None], H[None, None, :]]].all():
        raise PreconditionError("D is not a union of double cosets HgH")
    labels, reps = right_cosets(G, H)
    edges = [(k, int(labels[T[d, g]])) for k, g in enumerate(reps) for d in D]
    name = name or f"Cos(order {G.n}, |H|={len(H)})"
    return Graph.from_edges(len(reps), edges, labels=reps, name=name)


def double_coset(G: FiniteGroup, H: Sequence[int], g: int) -> np.ndarray:
    H = np.asarray(H, dtype=np.int64)
    T = G.table
    return np.unique(T[T[H, g][:, None], H[None, :]])


def coset_graph_from_arc(G: FiniteGroup, H: Sequence[int], g: int) -> Graph:
    """``Cos(G, H, H{g, g^-1}H)``; a nontrivial core is reported, not rejected."""
    H = np.asarray(H, dtype=np.int64)
    if membership(G, H)[g]:
        raise PreconditionError("g lies in H")
    if not is_core_free(G, H):
        logger.warning("H is not core-free: the coset action of G is unfaithful")
    D = np.union1d(double_coset(G, H, g), double_coset(G, H, int(G.inv[g])))
    return coset_graph(G, H, D)


def coset_action(G: FiniteGroup, H: Sequence[int], g: int) -> Permutation:
    """``R_H(g)``: ``Hx -> Hxg`` on the right cosets numbered as in ``coset_graph``."""
    labels, reps = right_cosets(G, H)
    return Permutation(tuple(int(labels[G.table[x, g]]) for x in reps))


def coset_action_group(G: FiniteGroup, H: Sequence[int]) -> PermutationGroup:
    labels, reps = right_cosets(G, H)
    gens = [Permutation(tuple(int(labels[G.table[x, g]]) for x in reps)) for g in G.generators]
    return PermutationGroup(gens, degree=len(reps))


def lexicographic_product(first: Graph, second: Graph) -> Graph:
    """``(x1, x2) ~ (y1, y2)`` iff ``x1 ~ y1``, or ``x1 = y1`` and ``x2 ~ y2``."""
    n2 = second.n
    edges = []
    for x1 in range(first.n):
        for y1 in first.neighbors(x1):
            edges.extend((x1 * n2 + a, y1 * n2 + b) for a in range(n2) for b in range(n2))
        edges.extend((x1 * n2 + a, x1 * n2 + b) for a, b in second.edges())
    labels = [(x1, x2) for x1 in range(first.n) for x2 in range(n2)]
    name = f"{first.name} o {second.name}"
    return Graph.from_edges(first.n * n2, edges, labels=labels, name=name)


def generalized_petersen(n: int, t: int) -> Graph:
    """``P(n, t)`` with outer vertices ``0..n-1`` and inner vertices ``n..2n-1``."""
    if n < 3 or not 1 <= t < n / 2:
        raise PreconditionError(f"P(n, t) needs n >= 3 and 1 <= t < n/2, got n={n}, t={t}")
    edges = []
    for i in range(n):
        edges.append((i, (i + 1) % n))
        edges.append((n + i, n + (i + t) % n))
        edges.append((i, n + i))
    return Graph.from_edges(2 * n, edges, name=f"P({n},{t})")


@dataclass(frozen=True)
class MPParams:
    m: int
    n: int
    s: int
    t: int

    def __post_init__(self) -> None:
        if self.m < 3:
            raise PreconditionError(f"m={self.m} must be at least 3")
        if self.n < 2:
            raise PreconditionError(f"n={self.n} must be at least 2")
        if self.s < 1 or self.m % self.s:
            raise PreconditionError(f"s={self.s} must divide m={self.m}")
        if math.gcd(self.t, self.m) != 1:
            raise PreconditionError(f"gcd(t, m) = gcd({self.t}, {self.m}) != 1")

    @property
    def canonical_t(self) -> int:
        t = self.t % self.m
        return min(t, self.m - t)

    @property
    def order(self) -> int:
        return self.m * self.n

    def vertex(self, j: int, i: int) -> int:
        return (i % self.n) * self.m + j % self.m

    def inner_differences(self, i: int) -> List[int]:
        base = pow(self.t, i, self.m)
        diffs = set()
        for k in range(self.m // self.s):
            d = (k * self.s + base) % self.m
            diffs.update({d, (-d) % self.m})
        diffs.discard(0)
        return sorted(diffs)

    def __str__(self) -> str:
        return f"MP_{{{self.m},{self.n},{self.s},{self.t}}}"


def multilayer_generalized_petersen(params: MPParams) -> Graph:
    """``n`` layers of ``m`` vertices; vertex ``(j, i)`` is numbered ``i*m + j``."""
    m, n = params.m, params.n
    edges = []
    for i in range(n):
        for d in params.inner_differences(i):
            edges.extend((params.vertex(j, i), params.vertex(j + d, i)) for j in range(m))
        edges.extend((params.vertex(j, i), params.vertex(j, i + 1)) for j in range(m))
    labels = [(j, i) for i in range(n) for j in range(m)]
    logger.debug(f"Built {params} with {len(labels)} vertices")
    return Graph.from_edges(m * n, edges, labels=labels, name=str(params))


def mp_layers(params: MPParams) -> List[List[int]]:
    return [[params.vertex(j, i) for j in range(params.m)] for i in range(params.n)]


def mp_rotation(params: MPParams) -> Permutation:
    """``R(h)``: ``(j, i) -> (j + 1, i)``."""
    return Permutation(
        tuple(params.vertex(j + 1, i) for i in range(params.n) for j in range(params.m))
    )


def mp_layer_shift(params: MPParams, lam: int) -> Permutation:
    """``(j, i) -> (j * lam, i + 1)``."""
    return Permutation(
        tuple(params.vertex(j * lam, i + 1) for i in range(params.n) for j in range(params.m))
    )


def mp_inversion(params: MPParams) -> Permutation:
    """``(j, i) -> (-j, i)``."""
    return Permutation(
        tuple(params.vertex(-j, i) for i in range(params.n) for j in range(params.m))
    )


def _check_partition(n: int, partition: Sequence[Sequence[int]]) -> List[List[int]]:
    cells = [sorted(int(v) for v in cell) for cell in partition]
    flat = [v for cell in cells for v in cell]
    if sorted(flat) != list(range(n)) or any(not cell for cell in cells):
        raise PreconditionError("cells do not partition the vertex set")
    return cells


def quotient_graph(graph: Graph, partition: Sequence[Sequence[int]]) -> Graph:
    cells = _check_partition(graph.n, partition)
    cell_of = [0] * graph.n
    for k, cell in enumerate(cells):
        for v in cell:
            cell_of[v] = k
    edges = {
        (min(cell_of[u], cell_of[v]), max(cell_of[u], cell_of[v]))
        for u, v in graph.edges()
        if cell_of[u] != cell_of[v]
    }
    labels = [tuple(cell) for cell in cells]
    return Graph.from_edges(len(cells), sorted(edges), labels=labels, name=f"{graph.name}/B")


def induced_subgraph(graph: Graph, vertices: Iterable[int]) -> Graph:
    keep = sorted(set(int(v) for v in vertices))
    for v in keep:
        if not 0 <= v < graph.n:
            raise PreconditionError(f"vertex {v} out of range")
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u in keep for v in graph.neighbors(u) if v in index and u < v]
    labels = [graph.label(v) for v in keep]
    return Graph.from_edges(len(keep), edges, labels=labels, name=f"{graph.name}[{len(keep)}]")


def bfs_distances(graph: Graph, source: int) -> List[float]:
    if not 0 <= source < graph.n:
        raise PreconditionError(f"vertex {source} out of range")
    dist: List[float] = [math.inf] * graph.n
    dist[source] = 0
    seen = 1 << source
    frontier = [source]
    depth = 0
    while frontier:
        depth += 1
        reach = 0
        for v in frontier:
            reach |= graph.adj[v]
        reach &= ~seen
        seen |= reach
        frontier = _bits(reach)
        for v in frontier:
            dist[v] = depth
    return dist


def bfs_distance(graph: Graph, u: int, v: int) -> float:
    if not 0 <= v < graph.n:
        raise PreconditionError(f"vertex {v} out of range")
    return bfs_distances(graph, u)[v]


def component_count(graph: Graph) -> int:
    return nx.number_connected_components(graph.to_networkx())


def cayley_connection_set_mp(G: FiniteGroup, p: int) -> List[int]:
    """``S u S^-1`` with ``S = {x, xz, ..., xz^(p-1), y}`` in ``mp_cayley_group``."""
    S = [G.index_of((0, 1, k)) for k in range(p)] + [G.index_of((1, 0, 0))]
    return sorted(set(S) | {int(G.inv[s]) for s in S})


def petersen_rotation(n: int) -> Permutation:
    """``x_i -> x_(i+1)``, ``y_i -> y_(i+1)`` on ``P(n, t)``."""
    outer = tuple((i + 1) % n for i in range(n))
    return Permutation(outer + tuple(n + v for v in outer))


def petersen_swap(n: int, t: int) -> Permutation:
    """``x_i -> y_(ti)``, ``y_i -> x_(ti)``.

    An automorphism of ``P(n, t)`` exactly when ``t^2 = +-1 mod n``.
    """
    if (t * t) % n not in (1, n - 1):
        raise PreconditionError(f"t^2 = {(t * t) % n} mod {n} is not +-1")
    scaled = tuple((t * i) % n for i in range(n))
    return Permutation(tuple(n + v for v in scaled) + scaled)
