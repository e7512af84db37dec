from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from metacirculant.config import SearchBudget, setting
from metacirculant.errors import CapExceeded, PreconditionError
from metacirculant.graphs import Graph
from metacirculant.perm_core import Permutation, PermutationGroup, orbits, schreier_sims


class UnionFind:
    def __init__(self, X: Iterable[Hashable]):
        self.parent = {x: x for x in X}
        self.rank = {x: 0 for x in X}

    def find(self, x: Hashable) -> Hashable:
        y = self.parent[x]
        if self.parent[y] != y:
            y = self.parent[x] = self.find(y)
        return y

    def union(self, x: Hashable, y: Hashable) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x
        del self.rank[y]
        return True

    def classes(self) -> List[List[Hashable]]:
        groups: Dict[Hashable, List[Hashable]] = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return sorted((sorted(c) for c in groups.values()), key=lambda c: c[0])


# -- partition refinement -------------------------------------------------------------------


def _refine(A: np.ndarray, colors: np.ndarray) -> Tuple[np.ndarray, List[bytes]]:
    """Colour refinement to an equitable partition.

    New colours are ordered by (old colour, neighbour counts per colour), so the
    result and its trace depend only on the isomorphism type of the coloured graph.
    """
    _, colors = np.unique(colors, return_inverse=True)
    colors = colors.reshape(-1)
    n = len(colors)
    trace: List[bytes] = []
    while True:
        k = int(colors.max()) + 1
        onehot = np.zeros((n, k), dtype=np.float32)
        onehot[np.arange(n), colors] = 1
        counts = (A @ onehot).astype(np.int64)
        keys = np.column_stack([colors, counts])
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        trace.append(uniq.tobytes())
        if len(uniq) == k:
            return inverse, trace
        colors = inverse


def _individualize(colors: np.ndarray, v: int) -> np.ndarray:
    split = colors * 2
    split[v] += 1
    return split


def _target_cell(colors: np.ndarray) -> Optional[np.ndarray]:
    """Vertices of the largest non-singleton cell (lowest colour on ties), or None."""
    sizes = np.bincount(colors)
    if sizes.max() <= 1:
        return None
    target = int(np.flatnonzero(sizes == sizes.max())[0])
    return np.flatnonzero(colors == target)


@dataclass
class _PathNode:
    colors: np.ndarray
    trace: List[bytes]
    cell: Optional[np.ndarray]


def _base_path(A: np.ndarray) -> Tuple[List[_PathNode], List[int], np.ndarray]:
    colors, trace = _refine(A, np.zeros(len(A), dtype=np.int64))
    nodes, base = [], []
    while True:
        cell = _target_cell(colors)
        nodes.append(_PathNode(colors, trace, cell))
        if cell is None:
            return nodes, base, np.argsort(colors)
        v = int(cell[0])
        base.append(v)
        colors, trace = _refine(A, _individualize(colors, v))


def _descend(
    A_base: np.ndarray,
    A: np.ndarray,
    path: List[_PathNode],
    depth: int,
    colors: np.ndarray,
    leaf0: np.ndarray,
    budget: SearchBudget,
) -> Optional[np.ndarray]:
    """DFS below ``colors`` at ``depth``, following traces of ``path``.

    Returns ``perm`` with ``A[perm][:, perm] == A_base`` mapping the base leaf onto a leaf here.
    """
    budget.tick()
    cell = _target_cell(colors)
    if cell is None:
        perm = np.empty(len(colors), dtype=np.int64)
        perm[leaf0] = np.argsort(colors)
        if np.array_equal(A[np.ix_(perm, perm)], A_base):
            return perm
        return None
    expected = path[depth].cell
    if expected is None or len(cell) != len(expected):
        return None
    for w in cell.tolist():
        child, trace = _refine(A, _individualize(colors, w))
        if trace != path[depth + 1].trace:
            continue
        found = _descend(A_base, A, path, depth + 1, child, leaf0, budget)
        if found is not None:
            return found
    return None


def _orbit_of(point: int, gens: Sequence[np.ndarray]) -> set:
    seen = {point}
    queue = [point]
    for x in queue:
        for g in gens:
            y = int(g[x])
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def _check_bound(graph: Graph, max_degree: Optional[int]) -> None:
    max_degree = setting(max_degree, "MAX_AUT_DEGREE")
    if graph.n > max_degree:
        raise CapExceeded(graph.n, max_degree, what="graph")


def automorphism_group(
    graph: Graph,
    max_degree: Optional[int] = None,
    budget: Optional[SearchBudget] = None,
) -> PermutationGroup:
    """``Aut(graph)`` by refinement and individualisation, certified through Schreier-Sims."""
    _check_bound(graph, max_degree)
    budget = budget or SearchBudget(label="automorphisms")
    if graph.n == 1:
        return PermutationGroup.trivial(1)
    A = graph.adjacency_matrix.astype(np.float32)
    path, base, leaf0 = _base_path(A)
    gens: List[np.ndarray] = []
    for level in range(len(base) - 1, -1, -1):
        orbit = _orbit_of(base[level], gens)
        parent = path[level]
        for v in parent.cell.tolist():
            if v in orbit:
                continue
            child, trace = _refine(A, _individualize(parent.colors, v))
            if trace != path[level + 1].trace:
                continue
            perm = _descend(A, A, path, level + 1, child, leaf0, budget)
            if perm is not None:
                gens.append(perm)
                orbit = _orbit_of(base[level], gens)
    perms = [Permutation(tuple(int(x) for x in g)) for g in gens]
    for g in perms:
        if not is_automorphism(graph, g):
            raise RuntimeError("automorphism search produced a non-automorphism")
    group = schreier_sims(perms, degree=graph.n, base=base)
    logger.debug(
        f"Aut({graph.name}): {len(perms)} generators, order {group.order}, {budget.used} nodes"
    )
    return group


def _triangle_profile(A: np.ndarray) -> np.ndarray:
    return np.sort(((A @ A) * A).sum(axis=1))


def are_isomorphic(
    first: Graph,
    second: Graph,
    max_degree: Optional[int] = None,
    budget: Optional[SearchBudget] = None,
) -> Optional[Permutation]:
    """A vertex bijection ``v -> perm(v)`` from ``first`` onto ``second``, or ``None``."""
    _check_bound(first, max_degree)
    _check_bound(second, max_degree)
    if first.n != second.n or sorted(first.degrees) != sorted(second.degrees):
        return None
    budget = budget or SearchBudget(label="isomorphism")
    A1 = first.adjacency_matrix.astype(np.float32)
    A2 = second.adjacency_matrix.astype(np.float32)
    if not np.array_equal(_triangle_profile(A1), _triangle_profile(A2)):
        return None
    path, _, leaf0 = _base_path(A1)
    colors, trace = _refine(A2, np.zeros(second.n, dtype=np.int64))
    if trace != path[0].trace:
        return None
    perm = _descend(A1, A2, path, 0, colors, leaf0, budget)
    if perm is None:
        return None
    return Permutation(tuple(int(x) for x in perm))


def is_automorphism(graph: Graph, perm: Permutation) -> bool:
    if perm.degree != graph.n:
        return False
    p = np.asarray(perm.images)
    A = graph.adjacency_matrix
    return bool(np.array_equal(A[np.ix_(p, p)], A))


# -- blocks ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSystem:
    cells: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        sizes = {len(c) for c in self.cells}
        if len(sizes) != 1:
            raise PreconditionError("block system cells must have a common size")

    @property
    def cell_size(self) -> int:
        return len(self.cells[0])

    def __len__(self) -> int:
        return len(self.cells)


def minimal_block(G: PermutationGroup, points: Sequence[int]) -> List[int]:
    """The class of ``points`` in the finest G-invariant partition that joins them."""
    points = sorted(set(int(x) for x in points))
    uf = UnionFind(range(G.degree))
    gens = [g.images for g in G.generators]
    queue = []
    for x in points[1:]:
        if uf.union(points[0], x):
            queue.append((points[0], x))
    while queue:
        x, y = queue.pop()
        for g in gens:
            if uf.union(g[x], g[y]):
                queue.append((g[x], g[y]))
    root = uf.find(points[0])
    return [x for x in range(G.degree) if uf.find(x) == root]


def is_block(G: PermutationGroup, delta: Iterable[int]) -> bool:
    delta = sorted(set(int(x) for x in delta))
    if not 1 < len(delta) < G.degree:
        return False
    return minimal_block(G, delta) == delta


def block_system_from_pair(G: PermutationGroup, alpha: int, beta: int) -> BlockSystem:
    if len(orbits(G)) != 1:
        raise PreconditionError("block systems from a pair need a transitive group")
    uf = UnionFind(range(G.degree))
    gens = [g.images for g in G.generators]
    queue = [(alpha, beta)] if uf.union(alpha, beta) else []
    while queue:
        x, y = queue.pop()
        for g in gens:
            if uf.union(g[x], g[y]):
                queue.append((g[x], g[y]))
    return BlockSystem(tuple(tuple(c) for c in uf.classes()))


def is_block_system(G: PermutationGroup, cells: Sequence[Sequence[int]]) -> bool:
    cell_of = {}
    for k, cell in enumerate(cells):
        for x in cell:
            cell_of[x] = k
    if sorted(cell_of) != list(range(G.degree)):
        return False
    for g in G.generators:
        for cell in cells:
            if len({cell_of[g(x)] for x in cell}) != 1:
                return False
    return True


def arc_orbits(G: PermutationGroup, graph: Graph) -> List[List[Tuple[int, int]]]:
    arcs = [(u, v) for u, v in graph.edges()] + [(v, u) for u, v in graph.edges()]
    uf = UnionFind(arcs)
    for g in G.generators:
        for u, v in arcs:
            uf.union((u, v), (g(u), g(v)))
    return uf.classes()
