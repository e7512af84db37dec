from unittest.mock import patch

import numpy as np
import pytest

from metacirculant.config import Config
from metacirculant.errors import CapExceeded, PreconditionError
from metacirculant.finite_groups import (
    FiniteGroup,
    XuZhangParams,
    all_subgroups,
    center,
    closure,
    core,
    cyclic_group,
    derived_subgroup,
    find_isomorphism,
    find_order_pn_overgroup,
    frattini_by_maximal_subgroups,
    frattini_subgroup,
    from_permutation_group,
    group_automorphisms,
    invariant_vector,
    is_core_free,
    is_metacyclic,
    is_normal,
    is_pk_abelian,
    is_split_metacyclic,
    mp_cayley_group,
    normal_closure,
    omega_s,
    prime_power,
    quotient_group,
    regular_representation,
    right_cosets,
    right_multiplication,
    split_metacyclic_group,
    structure_report,
    xu_zhang_group,
    xu_zhang_split_decomposition,
)
from metacirculant.perm_core import Permutation, PermutationGroup


def is_isomorphism(G: FiniteGroup, H: FiniteGroup, phi: np.ndarray) -> bool:
    return len(np.unique(phi)) == G.n and np.array_equal(phi[G.table], H.table[np.ix_(phi, phi)])


@pytest.fixture
def m27():
    return split_metacyclic_group(9, 3, 4)


@pytest.fixture
def s4():
    return from_permutation_group(
        PermutationGroup(
            [Permutation.from_cycles(4, [(0, 1, 2, 3)]), Permutation.from_cycles(4, [(0, 1)])]
        )
    )


def test_prime_power():
    assert prime_power(243) == (3, 5)
    assert prime_power(12) is None
    assert prime_power(1) is None


def test_table_validation():
    with pytest.raises(PreconditionError):
        FiniteGroup(np.zeros((2, 3), dtype=int))
    with pytest.raises(PreconditionError):
        FiniteGroup(np.array([[1, 0], [0, 1]]))
    with pytest.raises(PreconditionError):
        FiniteGroup(np.array([[0, 1, 2], [1, 0, 0], [2, 0, 0]]))


def test_cyclic_group_basics():
    G = cyclic_group(12)
    assert G.order == 12
    assert G.is_cyclic and G.is_abelian
    assert G.exponent == 12
    assert G.generators == [1]
    assert G.power(3, -1) == 9
    assert np.array_equal(G.power_map(-1), G.inv)
    with pytest.raises(CapExceeded):
        cyclic_group(100, cap=50)


def test_group_cap_is_read_at_call_time():
    with patch.object(Config, "FINITE_GROUP_CAP", 10):
        with pytest.raises(CapExceeded):
            cyclic_group(27)
        assert cyclic_group(27, cap=27).n == 27
    assert cyclic_group(27).n == 27


@pytest.mark.parametrize(
    "M, N, e",
    [(7, 3, 2), (9, 3, 4), (13, 3, 3), (5, 4, 2), (27, 9, 10)],
)
def test_split_relations(M, N, e):
    G = split_metacyclic_group(M, N, e)
    s, t = G.index_of((1, 0)), G.index_of((0, 1))
    assert G.order == M * N
    assert G.element_order(s) == M
    assert G.element_order(t) == N
    assert G.mul(G.mul(G.inverse(t), s), t) == G.power(s, e)
    assert is_split_metacyclic(G).answer


def test_split_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        split_metacyclic_group(7, 3, 3)
    with pytest.raises(PreconditionError):
        split_metacyclic_group(9, 3, 3)


def test_structure_of_order_27(m27):
    report = structure_report(m27).to_dict()
    assert report == {
        "order": 27,
        "exponent": 9,
        "derived_order": 3,
        "center_order": 3,
        "frattini_order": 3,
        "is_abelian": False,
        "is_cyclic": False,
    }
    assert invariant_vector(m27) == (27, 9, 3, 3, 9)


def test_frattini_agrees_with_maximal_subgroups(m27):
    assert np.array_equal(frattini_subgroup(m27), frattini_by_maximal_subgroups(m27))


def test_all_subgroups_cap():
    with pytest.raises(CapExceeded):
        all_subgroups(cyclic_group(100))
    # C9 has one subgroup per divisor
    assert len(all_subgroups(cyclic_group(9))) == 3


def test_symmetric_group_from_permutations(s4):
    assert s4.order == 24
    values, counts = np.unique(s4.orders, return_counts=True)
    assert dict(zip(values.tolist(), counts.tolist())) == {1: 1, 2: 9, 3: 8, 4: 6}
    assert len(derived_subgroup(s4)) == 12
    assert len(center(s4)) == 1
    assert len(frattini_subgroup(s4)) == 1
    assert not is_metacyclic(s4).answer


def test_quotient_by_klein_four(s4):
    double = [i for i, row in enumerate(s4.permutations.tolist()) if row == [1, 0, 3, 2]]
    V = normal_closure(s4, double)
    assert len(V) == 4 and is_normal(s4, V)
    Q = quotient_group(s4, V)
    assert Q.order == 6
    assert not Q.is_abelian
    with pytest.raises(PreconditionError):
        quotient_group(s4, closure(s4, double))


def test_core_and_cosets():
    G = split_metacyclic_group(7, 3, 2)
    s, t = G.index_of((1, 0)), G.index_of((0, 1))
    H = closure(G, [t])
    assert is_core_free(G, H)
    N = closure(G, [s])
    assert np.array_equal(core(G, N), N)
    labels, reps = right_cosets(G, H)
    assert len(reps) == 7
    assert all(labels[G.table[h, g]] == labels[g] for g in range(G.n) for h in H)


def test_regular_representation():
    G = split_metacyclic_group(7, 3, 2)
    R = regular_representation(G)
    assert R.order == 21
    g = G.index_of((2, 1))
    assert all(right_multiplication(G, g)(x) == G.mul(x, g) for x in range(G.n))


def test_omega_and_p_group_checks(m27):
    assert len(omega_s(m27, 3, 1)) == 9
    assert len(omega_s(m27, 3, 2)) == 27
    assert len(omega_s(cyclic_group(27), 3, 1)) == 3
    with pytest.raises(PreconditionError):
        omega_s(cyclic_group(12), 3, 1)


def test_pk_abelian(m27):
    assert is_pk_abelian(m27, 3, 1)
    assert is_pk_abelian(m27, 3, 0)
    s3 = split_metacyclic_group(3, 2, 2)
    assert not is_pk_abelian(s3, 2, 1)


@pytest.mark.parametrize(
    "params, order",
    [
        (XuZhangParams(3, 1, 0, 0, 0), 9),
        (XuZhangParams(3, 1, 1, 0, 0), 81),
        (XuZhangParams(3, 1, 1, 1, 0), 243),
        (XuZhangParams(5, 1, 0, 0, 1), 125),
    ],
)
def test_xu_zhang_relations(params, order):
    G = xu_zhang_group(params)
    p, r, s, t = params.p, params.r, params.s, params.t
    a, b = G.index_of((1, 0)), G.index_of((0, 1))
    assert G.order == order == params.order
    assert G.mul(G.mul(G.inverse(b), a), b) == G.power(a, 1 + p**r)
    assert G.power(b, p ** (r + s + t)) == G.power(a, p ** (r + s))
    normal, comp = xu_zhang_split_decomposition(G, params)
    assert len(closure(G, [normal])) * len(closure(G, [comp])) == G.order


@pytest.mark.parametrize(
    "args",
    [(2, 1, 0, 0, 0), (3, 0, 0, 0, 0), (3, 1, 0, 0, 2), (3, 1, -1, 0, 0)],
)
def test_xu_zhang_rejects_bad_parameters(args):
    with pytest.raises(PreconditionError):
        XuZhangParams(*args)


@pytest.mark.slow
def test_nonsplit_xu_zhang_group():
    params = XuZhangParams(3, 1, 1, 1, 1)
    assert not params.split
    G = xu_zhang_group(params)
    assert G.order == 729
    assert is_metacyclic(G).answer
    assert not is_split_metacyclic(G).answer
    with pytest.raises(PreconditionError):
        xu_zhang_split_decomposition(G, params)


def test_mp_cayley_group():
    G = mp_cayley_group(3, 3, 1, 4)
    assert G.order == 81
    x, y, z = G.index_of((0, 1, 0)), G.index_of((1, 0, 0)), G.index_of((0, 0, 1))
    assert G.mul(G.mul(G.inverse(y), x), y) == G.power(x, 4)
    assert all(G.mul(z, g) == G.mul(g, z) for g in range(G.n))
    with pytest.raises(PreconditionError):
        mp_cayley_group(3, 3, 1, 2)
    with pytest.raises(PreconditionError):
        mp_cayley_group(3, 2, 1, 4)


def test_overgroup_witness(m27):
    sigma, g = m27.index_of((1, 0)), m27.index_of((0, 1))
    witness = find_order_pn_overgroup(m27, sigma, g)
    assert m27.element_order(witness.tau) == 3
    assert g in closure(m27, [witness.tau])
    assert witness.complement


def test_overgroup_preconditions(m27):
    sigma = m27.index_of((1, 0))
    with pytest.raises(PreconditionError):
        find_order_pn_overgroup(m27, sigma, m27.index_of((3, 0)))
    with pytest.raises(PreconditionError):
        find_order_pn_overgroup(m27, sigma, 0)
    with pytest.raises(PreconditionError):
        find_order_pn_overgroup(m27, m27.index_of((0, 1)), sigma)


def test_isomorphism_search(m27):
    assert find_isomorphism(split_metacyclic_group(9, 3, 1), m27) is None
    other = split_metacyclic_group(9, 3, 7)
    phi = find_isomorphism(m27, other)
    assert phi is not None and is_isomorphism(m27, other, phi)
    elementary = xu_zhang_group(XuZhangParams(3, 1, 0, 0, 0))
    psi = find_isomorphism(split_metacyclic_group(3, 3, 1), elementary)
    assert psi is not None


def test_group_automorphisms():
    assert len(group_automorphisms(cyclic_group(9))) == 6
    assert len(group_automorphisms(split_metacyclic_group(3, 3, 1))) == 48
    assert len(group_automorphisms(cyclic_group(8), fixing=[1, 7])) == 2
