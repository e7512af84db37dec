import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.combinatorics import Permutation as SymPermutation
from sympy.combinatorics import PermutationGroup as SymPermutationGroup

from metacirculant.config import SearchBudget
from metacirculant.errors import (
    CapExceeded,
    DegreeMismatch,
    ParseError,
    PreconditionError,
    SearchBudgetExceeded,
)
from metacirculant.perm_core import (
    ElementIndex,
    Permutation,
    PermutationGroup,
    _check_normal_in_normalizer,
    centralizer_in,
    compose,
    element_order,
    enumerate_elements,
    is_subgroup,
    normalizer_in,
    orbit,
    orbits,
    p_part,
    schreier_sims,
    stabilizer,
    transitivity_profile,
)


def permutations(degree: int) -> st.SearchStrategy:
    return st.permutations(list(range(degree))).map(lambda xs: Permutation(tuple(xs)))


@st.composite
def group_with_subgroup(draw):
    degree = draw(st.integers(min_value=3, max_value=6))
    G = PermutationGroup(draw(st.lists(permutations(degree), min_size=1, max_size=3)))
    elements = enumerate_elements(G)
    H = PermutationGroup(draw(st.lists(st.sampled_from(elements), min_size=1, max_size=2)))
    return G, H, elements


@pytest.fixture
def s3():
    return PermutationGroup(
        [Permutation.from_cycles(3, [(0, 1, 2)]), Permutation.from_cycles(3, [(0, 1)])]
    )


@pytest.fixture
def s4():
    return PermutationGroup(
        [Permutation.from_cycles(4, [(0, 1, 2, 3)]), Permutation.from_cycles(4, [(0, 1)])]
    )


@pytest.fixture
def cyclic8():
    return PermutationGroup([Permutation.from_cycles(8, [tuple(range(8))])])


def test_permutation_rejects_non_bijection():
    with pytest.raises(PreconditionError):
        Permutation((0, 0, 1))
    with pytest.raises(PreconditionError):
        Permutation(())


def test_compose_applies_left_factor_first():
    p = Permutation((1, 2, 0))
    q = Permutation((0, 2, 1))
    # 0 -p-> 1 -q-> 2
    assert compose(p, q)(0) == 2
    assert (p * q).images == (2, 1, 0)


def test_compose_degree_mismatch():
    with pytest.raises(DegreeMismatch):
        Permutation((1, 0)) * Permutation((0, 1, 2))


def test_conjugate_is_c_inverse_p_c():
    p = Permutation.from_cycles(5, [(0, 1, 2)])
    c = Permutation.from_cycles(5, [(0, 3), (1, 4)])
    assert p.conjugate(c) == c.inverse() * p * c
    assert p.conjugate(c).cycles() == [(2, 3, 4)]


def test_cycles_and_cycle_type():
    p = Permutation.from_cycles(6, [(0, 1, 2), (3, 4)])
    assert p.cycles() == [(0, 1, 2), (3, 4)]
    assert p.cycles(include_fixed=True) == [(0, 1, 2), (3, 4), (5,)]
    assert p.cycle_type() == (3, 2, 1)
    assert element_order(p) == 6
    assert p.moved_points() == [0, 1, 2, 3, 4]


def test_p_part():
    p = Permutation.from_cycles(7, [(0, 1, 2), (3, 4, 5, 6)])
    three = p_part(p, 3)
    assert three.order == 3
    assert three.cycle_type() == (3, 1, 1, 1, 1)


def test_negative_power_is_inverse():
    p = Permutation.from_cycles(5, [(0, 1, 2, 3, 4)])
    assert p**-1 == p.inverse()
    assert (p**5).is_identity
    assert p**7 == p**2


def test_parse_round_trip_and_errors():
    p = Permutation.from_cycles(4, [(0, 2)])
    assert Permutation.parse(p.to_line()) == p
    with pytest.raises(ParseError):
        Permutation.parse("0,1,2")
    with pytest.raises(ParseError):
        Permutation.parse("[0,x,2]")


@settings(max_examples=50, deadline=None)
@given(permutations(7), permutations(7), permutations(7))
def test_composition_is_associative(p, q, r):
    assert (p * q) * r == p * (q * r)


@settings(max_examples=50, deadline=None)
@given(permutations(9))
def test_inverse_law(p):
    assert (p * p.inverse()).is_identity
    assert (p.inverse() * p).is_identity
    assert (p ** p.order).is_identity


def test_symmetric_group_order(s4):
    assert s4.order == 24
    assert transitivity_profile(s4).transitive
    assert not transitivity_profile(s4).semiregular


def test_cyclic_group_is_regular(cyclic8):
    profile = transitivity_profile(cyclic8)
    assert cyclic8.order == 8
    assert profile.regular


@settings(max_examples=25, deadline=None)
@given(st.lists(permutations(8), min_size=1, max_size=3))
def test_order_matches_sympy(gens):
    ours = schreier_sims(gens, degree=8)
    oracle = SymPermutationGroup([SymPermutation(list(g.images)) for g in gens])
    assert ours.order == oracle.order()


@settings(max_examples=25, deadline=None)
@given(st.lists(permutations(7), min_size=1, max_size=3), st.integers(min_value=0, max_value=6))
def test_orbit_stabilizer(gens, point):
    G = PermutationGroup(gens)
    assert len(orbit(G, point)) * stabilizer(G, point).order == G.order


def test_stabilizer_fixes_point(s4):
    H = stabilizer(s4, 2)
    assert H.order == 6
    assert all(g(2) == 2 for g in H.generators)


def test_orbits_partition():
    G = PermutationGroup([Permutation.from_cycles(6, [(0, 1), (2, 3, 4)])])
    assert orbits(G) == [[0, 1], [2, 3, 4], [5]]
    with pytest.raises(PreconditionError):
        orbit(G, 6)


def test_membership(s4):
    assert Permutation.from_cycles(4, [(1, 3)]) in s4
    A4 = PermutationGroup(
        [Permutation.from_cycles(4, [(0, 1, 2)]), Permutation.from_cycles(4, [(1, 2, 3)])]
    )
    assert A4.order == 12
    assert Permutation.from_cycles(4, [(0, 1)]) not in A4
    assert is_subgroup(A4, s4)
    assert not is_subgroup(s4, A4)


def test_element_array_is_sorted_and_capped(s4):
    rows = s4.element_array()
    assert len(rows) == 24
    assert rows[0].tolist() == [0, 1, 2, 3]
    assert [tuple(r) for r in rows.tolist()] == sorted(tuple(r) for r in rows.tolist())
    with pytest.raises(CapExceeded):
        s4.element_array(cap=10)
    assert len(enumerate_elements(s4)) == 24


def test_element_index_lookup(s4):
    rows = s4.element_array()
    index = ElementIndex(rows)
    assert index.index_of(rows[5]) == 5
    A4_rows = PermutationGroup(
        [Permutation.from_cycles(4, [(0, 1, 2)]), Permutation.from_cycles(4, [(1, 2, 3)])]
    ).element_array()
    odd = np.array([[1, 0, 2, 3]])
    assert ElementIndex(A4_rows).lookup(odd)[0] == -1


def test_same_group_and_exchange_lines(s4):
    lines = s4.to_lines()
    assert lines[0] == "degree: 4"
    again = PermutationGroup.from_lines(lines)
    assert again.same_group(s4)
    with pytest.raises(ParseError):
        PermutationGroup.from_lines(["[0,1,2,3]"])


def test_normalizer_of_cyclic_subgroup_in_s4(s4):
    C4 = PermutationGroup([Permutation.from_cycles(4, [(0, 1, 2, 3)])])
    N = normalizer_in(s4, C4)
    assert N.order == 8
    assert all(C4.contains(h.conjugate(g)) for g in N.generators for h in C4.generators)


def test_centralizer_in_s4(s4):
    C4 = PermutationGroup([Permutation.from_cycles(4, [(0, 1, 2, 3)])])
    assert centralizer_in(s4, C4).order == 4


def test_normalizer_requires_subgroup(s4):
    outside = PermutationGroup([Permutation.from_cycles(5, [(0, 1, 2, 3, 4)])])
    with pytest.raises(DegreeMismatch):
        normalizer_in(s4, outside)


def test_normalizer_of_transposition_in_s3(s3):
    swap = PermutationGroup([Permutation.from_cycles(3, [(0, 1)])])
    N = normalizer_in(s3, swap)
    assert N.order == 2
    assert N.same_group(swap)


def test_centralizer_of_three_cycle_in_s3(s3):
    rotation = PermutationGroup([Permutation.from_cycles(3, [(0, 1, 2)])])
    C = centralizer_in(s3, rotation)
    assert C.order == 3
    assert C.same_group(rotation)
    assert normalizer_in(s3, rotation).order == 6


@settings(max_examples=30, deadline=None)
@given(group_with_subgroup())
def test_normalizer_and_centralizer_match_brute_force(case):
    G, H, elements = case
    normalizing = [g for g in elements if all(H.contains(h.conjugate(g)) for h in H.generators)]
    commuting = [g for g in elements if all(g * h == h * g for h in H.generators)]
    N = normalizer_in(G, H)
    C = centralizer_in(G, H)
    assert N.order == len(normalizing)
    assert C.order == len(commuting)
    assert all(N.contains(g) for g in normalizing)
    assert all(C.contains(g) for g in commuting)
    assert is_subgroup(C, N)


def test_centralizer_budget_overrun_carries_partial_result(s4):
    C4 = PermutationGroup([Permutation.from_cycles(4, [(0, 1, 2, 3)])])
    with pytest.raises(SearchBudgetExceeded) as info:
        centralizer_in(s4, C4, SearchBudget(1, label="centralizer"))
    partial = info.value.partial
    assert info.value.complete is False
    assert isinstance(partial, PermutationGroup)
    assert is_subgroup(partial, s4)
    assert C4.generators[0] in partial


def test_normalizer_budget_overrun_carries_partial_result(s4):
    C4 = PermutationGroup([Permutation.from_cycles(4, [(0, 1, 2, 3)])])
    with pytest.raises(SearchBudgetExceeded) as info:
        normalizer_in(s4, C4, SearchBudget(1, label="normalizer"))
    assert info.value.complete is False
    assert is_subgroup(info.value.partial, s4)
    assert C4.generators[0] in info.value.partial


def test_centralizer_is_normal_in_normalizer(s4):
    swap = PermutationGroup([Permutation.from_cycles(4, [(0, 1)])])
    C = centralizer_in(s4, swap)
    assert C.order == 4
    _check_normal_in_normalizer(C, normalizer_in(s4, swap))
    with pytest.raises(RuntimeError):
        _check_normal_in_normalizer(swap, s4)
