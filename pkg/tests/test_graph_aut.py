import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metacirculant.errors import CapExceeded, PreconditionError
from metacirculant.graph_aut import (
    BlockSystem,
    UnionFind,
    are_isomorphic,
    arc_orbits,
    automorphism_group,
    block_system_from_pair,
    is_automorphism,
    is_block,
    is_block_system,
    minimal_block,
)
from metacirculant.graphs import (
    complete_graph,
    cycle_graph,
    empty_graph,
    generalized_petersen,
    lexicographic_product,
)
from metacirculant.perm_core import Permutation, PermutationGroup


@pytest.fixture
def petersen():
    return generalized_petersen(5, 2)


@pytest.fixture
def cyclic6():
    return PermutationGroup([Permutation.from_cycles(6, [(0, 1, 2, 3, 4, 5)])])


def test_union_find():
    uf = UnionFind(range(5))
    assert uf.union(0, 3)
    assert not uf.union(3, 0)
    uf.union(1, 4)
    assert sorted(sorted(c) for c in uf.classes()) == [[0, 3], [1, 4], [2]]


def test_petersen_automorphisms(petersen):
    A = automorphism_group(petersen)
    assert A.order == 120
    assert all(is_automorphism(petersen, g) for g in A.generators)
    with pytest.raises(CapExceeded):
        automorphism_group(petersen, max_degree=5)


@pytest.mark.parametrize("n", [5, 7, 9, 12])
def test_cycle_automorphisms_are_dihedral(n):
    assert automorphism_group(cycle_graph(n)).order == 2 * n


@pytest.mark.parametrize(
    "graph, order",
    [
        (complete_graph(5), 120),
        (generalized_petersen(4, 1), 48),
        (generalized_petersen(5, 1), 20),
        (lexicographic_product(cycle_graph(5), empty_graph(2)), 320),
        (lexicographic_product(cycle_graph(9), empty_graph(3)), 2 * 9 * 6**9),
    ],
)
def test_automorphism_group_orders(graph, order):
    assert automorphism_group(graph).order == order


def test_isomorphism_of_relabelled_copy(petersen):
    perm = [(3 * v + 1) % 10 for v in range(10)]
    moved = petersen.relabel(perm)
    iso = are_isomorphic(petersen, moved)
    assert iso is not None
    assert all(moved.has_edge(iso(u), iso(v)) for u, v in petersen.edges())


SMALL_GRAPHS = [
    generalized_petersen(5, 2),
    generalized_petersen(4, 1),
    cycle_graph(9),
    complete_graph(5),
    lexicographic_product(cycle_graph(5), empty_graph(2)),
]


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_automorphism_order_is_relabelling_invariant(data):
    graph = data.draw(st.sampled_from(SMALL_GRAPHS))
    perm = data.draw(st.permutations(list(range(graph.n))))
    moved = graph.relabel(perm)
    A = automorphism_group(moved)
    assert A.order == automorphism_group(graph).order
    assert all(is_automorphism(moved, g) for g in A.generators)


def test_non_isomorphic_pairs(petersen):
    assert are_isomorphic(petersen, generalized_petersen(5, 1)) is None
    assert are_isomorphic(cycle_graph(6), cycle_graph(7)) is None


def test_is_automorphism_checks_degree(petersen):
    assert not is_automorphism(petersen, Permutation.identity(9))


def test_blocks_of_cyclic_group(cyclic6):
    system = block_system_from_pair(cyclic6, 0, 3)
    assert sorted(system.cells) == [(0, 3), (1, 4), (2, 5)]
    assert system.cell_size == 2 and len(system) == 3
    assert is_block_system(cyclic6, system.cells)
    assert minimal_block(cyclic6, [0, 2]) == [0, 2, 4]
    assert is_block(cyclic6, [0, 2, 4])
    assert not is_block(cyclic6, [0, 1])
    assert not is_block_system(cyclic6, [(0, 1), (2, 3), (4, 5)])


def test_block_system_requires_transitivity():
    G = PermutationGroup([Permutation.from_cycles(4, [(0, 1)])])
    with pytest.raises(PreconditionError):
        block_system_from_pair(G, 0, 1)
    with pytest.raises(PreconditionError):
        BlockSystem(((0, 1), (2,)))


def test_arc_orbits(petersen):
    assert len(arc_orbits(automorphism_group(petersen), petersen)) == 1
    prism = generalized_petersen(5, 1)
    orbits = arc_orbits(automorphism_group(prism), prism)
    assert sorted(len(o) for o in orbits) == [10, 20]
