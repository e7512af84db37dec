import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from sympy.ntheory import factorint, isprime, n_order

from metacirculant.config import SearchBudget, setting
from metacirculant.errors import CapExceeded, NotFound, PreconditionError
from metacirculant.perm_core import ElementIndex, Permutation, PermutationGroup

Subgroup = np.ndarray

# Exhaustive checks below these orders, sampling above.
ASSOCIATIVITY_EXHAUSTIVE = 200
PK_ABELIAN_EXHAUSTIVE = 729
LATTICE_LIMIT = 81
ISOMORPHISM_LIMIT = 243


def _table_dtype(n: int) -> type:
    return np.int16 if n <= np.iinfo(np.int16).max else np.int32


def _build_table(n: int, rows: Callable[[np.ndarray], np.ndarray], block: int = 256) -> np.ndarray:
    table = np.empty((n, n), dtype=_table_dtype(n))
    for start in range(0, n, block):
        idx = np.arange(start, min(start + block, n))
        table[idx] = rows(idx)
    return table


def prime_power(n: int) -> Optional[Tuple[int, int]]:
    """Return ``(p, k)`` when ``n = p^k`` with ``k >= 1``."""
    if n < 2:
        return None
    factors = factorint(n)
    if len(factors) != 1:
        return None
    ((p, k),) = factors.items()
    return int(p), int(k)


class FiniteGroup:
    """A finite group on element ids ``0..n-1`` with identity ``0``, given by its table."""

    def __init__(
        self,
        table: np.ndarray,
        labels: Optional[Sequence[Tuple[int, ...]]] = None,
        presentation: Optional[Dict[str, Any]] = None,
        permutations: Optional[np.ndarray] = None,
        check: bool = True,
        seed: Optional[int] = None,
    ):
        table = np.asarray(table)
        n = table.shape[0]
        if table.ndim != 2 or table.shape != (n, n) or n == 0:
            raise PreconditionError("multiplication table must be a nonempty square array")
        self.table = table.astype(_table_dtype(n), copy=False)
        self.n = n
        self.labels = [tuple(x) for x in labels] if labels is not None else None
        self.presentation = presentation or {"kind": "table", "params": {}}
        self.permutations = permutations
        arange = np.arange(n)
        if not (np.array_equal(self.table[0], arange) and np.array_equal(self.table[:, 0], arange)):
            raise PreconditionError("element 0 is not the identity")
        self.inv = np.argmax(self.table == 0, axis=1).astype(self.table.dtype)
        if not np.all(self.table[arange, self.inv] == 0):
            raise PreconditionError("some element has no inverse")
        if check:
            self.check_associativity(seed=seed)

    def check_associativity(self, samples: int = 10_000, seed: Optional[int] = None) -> None:
        T = self.table
        if self.n <= ASSOCIATIVITY_EXHAUSTIVE:
            a = np.arange(self.n)
            left = T[T[a[:, None], a[None, :]][:, :, None], a[None, None, :]]
            right = T[a[:, None, None], T[a[:, None], a[None, :]][None, :, :]]
            ok = np.array_equal(left, right)
        else:
            rng = np.random.default_rng(setting(seed, "SEED"))
            a, b, c = rng.integers(0, self.n, size=(3, samples))
            ok = np.array_equal(T[T[a, b], c], T[a, T[b, c]])
        if not ok:
            raise PreconditionError("multiplication table is not associative")

    @property
    def order(self) -> int:
        return self.n

    @property
    def identity(self) -> int:
        return 0

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inv[a])

    def power(self, a: int, k: int) -> int:
        return int(self.power_map(k)[a])

    def power_map(self, k: int) -> np.ndarray:
        """Vector of ``x^k`` for every element ``x``."""
        base = np.arange(self.n) if k >= 0 else self.inv.astype(np.int64)
        k = abs(k)
        result = np.zeros(self.n, dtype=np.int64)
        while k:
            if k & 1:
                result = self.table[result, base].astype(np.int64)
            base = self.table[base, base].astype(np.int64)
            k >>= 1
        return result

    def commutator(self, a: int, b: int) -> int:
        T, inv = self.table, self.inv
        return int(T[T[T[inv[a], inv[b]], a], b])

    @cached_property
    def orders(self) -> np.ndarray:
        orders = np.zeros(self.n, dtype=np.int64)
        orders[0] = 1
        arange = np.arange(self.n)
        cur = arange.copy()
        for k in range(1, self.n + 1):
            hit = (cur == 0) & (orders == 0)
            orders[hit] = k
            if np.all(orders):
                break
            cur = self.table[cur, arange]
        return orders

    def element_order(self, a: int) -> int:
        return int(self.orders[a])

    @cached_property
    def exponent(self) -> int:
        return int(np.lcm.reduce(self.orders))

    @cached_property
    def generators(self) -> List[int]:
        """Greedy generating set, preferring elements of large order then small id."""
        gens: List[int] = []
        members = np.zeros(self.n, dtype=bool)
        members[0] = True
        for g in sorted(range(1, self.n), key=lambda x: (-int(self.orders[x]), x)):
            if members[g]:
                continue
            gens.append(g)
            members[:] = False
            members[closure(self, gens)] = True
            if members.all():
                break
        return gens

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.table, self.table.T))

    @property
    def is_cyclic(self) -> bool:
        return bool(self.orders.max() == self.n)

    @cached_property
    def label_index(self) -> Dict[Tuple[int, ...], int]:
        if self.labels is None:
            return {}
        return {label: i for i, label in enumerate(self.labels)}

    def index_of(self, label: Tuple[int, ...]) -> int:
        try:
            return self.label_index[tuple(label)]
        except KeyError as e:
            raise PreconditionError(f"no element labelled {label}") from e

    def to_dict(self, table_limit: Optional[int] = None) -> Dict[str, Any]:
        data: Dict[str, Any] = {"order": self.n, "presentation": self.presentation}
        if self.n <= setting(table_limit, "TABLE_EXPORT_LIMIT"):
            data["table"] = self.table.tolist()
        return data

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.n}, kind={self.presentation.get('kind')})"


# -- construction ---------------------------------------------------------------------------


def _check_cap(order: int, cap: Optional[int]) -> None:
    cap = setting(cap, "FINITE_GROUP_CAP")
    if order > cap:
        raise CapExceeded(order, cap)


def cyclic_group(n: int, cap: Optional[int] = None) -> FiniteGroup:
    if n < 1:
        raise PreconditionError("cyclic group order must be positive")
    _check_cap(n, cap)
    a = np.arange(n)
    return FiniteGroup(
        (a[:, None] + a[None, :]) % n,
        labels=[(i,) for i in range(n)],
        presentation={"kind": "cyclic", "params": {"n": n}},
        check=False,
    )


def _cyclic_extension(M: int, N: int, e: int, carry: int, cap: Optional[int]) -> np.ndarray:
    """Table of ``<s>.<t>`` on normal forms ``s^i t^j`` (id ``i + M*j``).

    Relations: ``s^M = 1``, ``t^-1 s t = s^e``, ``t^N = s^carry``.
    """
    _check_cap(M * N, cap)
    f = pow(e, -1, M) if M > 1 else 0
    fpow = np.array([pow(f, j, M) if M > 1 else 0 for j in range(N)], dtype=np.int64)
    ids = np.arange(M * N)
    i_all, j_all = ids % M, ids // M

    def rows(idx: np.ndarray) -> np.ndarray:
        i, j = i_all[idx][:, None], j_all[idx][:, None]
        jj = j + j_all[None, :]
        wrap = jj >= N
        ii = (i + i_all[None, :] * fpow[j] + wrap * carry) % M
        return ii + M * (jj % N)

    return _build_table(M * N, rows)


def split_metacyclic_group(
    M: int, N: int, e: int, cap: Optional[int] = None
) -> FiniteGroup:
    """``C_M : C_N`` with ``t^-1 s t = s^e``; elements ``s^i t^j`` labelled ``(i, j)``."""
    if M < 1 or N < 1:
        raise PreconditionError("orders must be positive")
    if math.gcd(e, M) != 1:
        raise PreconditionError(f"e={e} is not a unit modulo {M}")
    if pow(e, N, M) != 1 % M:
        raise PreconditionError(f"e^N = {e}^{N} is not 1 modulo {M}")
    table = _cyclic_extension(M, N, e % M if M > 1 else 0, 0, cap)
    labels = [(i % M, i // M) for i in range(M * N)]
    logger.debug(f"Built split metacyclic group C{M}:C{N} with e={e}")
    return FiniteGroup(
        table,
        labels=labels,
        presentation={"kind": "split", "params": {"M": M, "N": N, "e": e}},
    )


@dataclass(frozen=True)
class XuZhangParams:
    p: int
    r: int
    s: int
    t: int
    u: int

    def __post_init__(self) -> None:
        if self.p < 3 or not isprime(self.p):
            raise PreconditionError(f"p={self.p} must be an odd prime")
        if min(self.r, self.s, self.t, self.u) < 0:
            raise PreconditionError("r, s, t, u must be nonnegative")
        if self.r < 1:
            raise PreconditionError("r must be at least 1")
        if self.r < self.u:
            raise PreconditionError("r must be at least u")

    @property
    def order(self) -> int:
        return self.p ** (2 * (self.r + self.s) + self.u + self.t)

    @property
    def split(self) -> bool:
        return self.s * self.t * self.u == 0


def xu_zhang_group(params: XuZhangParams, cap: Optional[int] = None) -> FiniteGroup:
    """``<a, b | a^(p^(r+s+u)), b^(p^(r+s+t)) = a^(p^(r+s)), b^-1 a b = a^(1+p^r)>``.

    Elements are the normal forms ``a^i b^j``, labelled ``(i, j)``.
    """
    p, r, s, t, u = params.p, params.r, params.s, params.t, params.u
    M = p ** (r + s + u)
    N = p ** (r + s + t)
    _check_cap(M * N, cap)
    table = _cyclic_extension(M, N, (1 + p**r) % M, p ** (r + s) % M, cap)
    logger.debug(f"Built Xu-Zhang group {params} of order {M * N}")
    return FiniteGroup(
        table,
        labels=[(i % M, i // M) for i in range(M * N)],
        presentation={"kind": "xu-zhang", "params": {"p": p, "r": r, "s": s, "t": t, "u": u}},
    )


def mp_cayley_group(
    p: int, m: int, n: int, lam: int, cap: Optional[int] = None
) -> FiniteGroup:
    """``<x, y, z>`` with ``y^-1 x y = x^lam`` and ``z`` central.

    Elements are the normal forms ``y^i x^j z^k``.
    """
    if p < 3 or not isprime(p):
        raise PreconditionError(f"p={p} must be an odd prime")
    if not m >= n + 2 >= 3:
        raise PreconditionError(f"need m >= n + 2 >= 3, got m={m}, n={n}")
    if math.gcd(lam, p) != 1 or n_order(lam, p**m) != p ** (n + 1):
        raise PreconditionError(
            f"lambda={lam} must have multiplicative order {p ** (n + 1)} modulo {p ** m}"
        )
    Y, X, Z = p**n, p ** (m - 1), p
    order = X * Y * Z
    _check_cap(order, cap)
    ids = np.arange(order)
    i_all, j_all, k_all = ids % Y, (ids // Y) % X, ids // (X * Y)
    lam_pow = np.array([pow(lam, e, X) for e in range(Y)], dtype=np.int64)

    def rows(idx: np.ndarray) -> np.ndarray:
        i = (i_all[idx][:, None] + i_all[None, :]) % Y
        j = (j_all[idx][:, None] * lam_pow[i_all][None, :] + j_all[None, :]) % X
        k = (k_all[idx][:, None] + k_all[None, :]) % Z
        return i + Y * (j + X * k)

    table = _build_table(order, rows)
    labels = [(int(a), int(b), int(c)) for a, b, c in zip(i_all, j_all, k_all)]
    logger.debug(f"Built mp Cayley group (p={p}, m={m}, n={n}, lambda={lam}) of order {order}")
    return FiniteGroup(
        table,
        labels=labels,
        presentation={"kind": "mp-cayley", "params": {"p": p, "m": m, "n": n, "lambda": lam}},
    )


def from_permutation_group(G: PermutationGroup, cap: Optional[int] = None) -> FiniteGroup:
    """Abstract group of ``G``; element ids follow the lexicographic order of image arrays."""
    elements = G.element_array(setting(cap, "FINITE_GROUP_CAP"))
    index = ElementIndex(elements)
    n = len(elements)

    def rows(idx: np.ndarray) -> np.ndarray:
        return np.stack([index.lookup(elements[:, elements[a]]) for a in idx])

    table = _build_table(n, rows, block=64)
    return FiniteGroup(
        table,
        presentation={"kind": "permutation", "params": {"degree": G.degree}},
        permutations=elements,
        check=False,
    )


def regular_representation(G: FiniteGroup, cap: Optional[int] = None) -> PermutationGroup:
    """Right regular representation: ``R(g)`` maps ``x`` to ``xg``."""
    _check_cap(G.n, cap)
    gens = [Permutation(tuple(int(x) for x in G.table[:, g])) for g in G.generators]
    return PermutationGroup(gens, degree=G.n)


def right_multiplication(G: FiniteGroup, g: int) -> Permutation:
    return Permutation(tuple(int(x) for x in G.table[:, g]))


# -- subgroups ------------------------------------------------------------------------------


def closure(G: FiniteGroup, gens: Sequence[int]) -> Subgroup:
    """Sorted element ids of the subgroup generated by ``gens``."""
    gens = np.asarray(sorted(set(int(g) for g in gens)), dtype=np.int64)
    members = np.zeros(G.n, dtype=bool)
    members[0] = True
    frontier = np.array([0])
    while len(frontier) and len(gens):
        cand = np.unique(G.table[np.ix_(frontier, gens)].ravel())
        frontier = cand[~members[cand]]
        members[frontier] = True
    return np.flatnonzero(members)


def is_subgroup_set(G: FiniteGroup, elements: Sequence[int]) -> bool:
    S = np.asarray(elements, dtype=np.int64)
    if len(S) == 0 or 0 not in S:
        return False
    members = np.zeros(G.n, dtype=bool)
    members[S] = True
    return bool(members[G.table[np.ix_(S, S)]].all())


def _as_subgroup(G: FiniteGroup, elements: Sequence[int]) -> Subgroup:
    S = np.unique(np.asarray(elements, dtype=np.int64))
    if not is_subgroup_set(G, S):
        raise PreconditionError("element set is not a subgroup")
    return S


def membership(G: FiniteGroup, H: Sequence[int]) -> np.ndarray:
    mask = np.zeros(G.n, dtype=bool)
    mask[np.asarray(H, dtype=np.int64)] = True
    return mask


def is_normal(G: FiniteGroup, N: Sequence[int]) -> bool:
    N = np.asarray(N, dtype=np.int64)
    inside = membership(G, N)
    T, inv = G.table, G.inv
    return all(inside[T[T[inv[g], N], g]].all() for g in G.generators)


def normal_closure(G: FiniteGroup, gens: Sequence[int]) -> Subgroup:
    H = closure(G, gens)
    T, inv = G.table, G.inv
    while True:
        conj = np.concatenate([T[T[inv[g], H], g] for g in G.generators] or [H])
        extra = np.setdiff1d(conj, H)
        if len(extra) == 0:
            return H
        H = closure(G, np.concatenate([H, extra]))


def subgroup_generators(G: FiniteGroup, H: Sequence[int]) -> List[int]:
    """Greedy generating set of the subgroup ``H``."""
    H = np.asarray(H, dtype=np.int64)
    gens: List[int] = []
    members = np.zeros(G.n, dtype=bool)
    members[0] = True
    for g in sorted(H.tolist(), key=lambda x: (-int(G.orders[x]), x)):
        if members[g]:
            continue
        gens.append(g)
        members[closure(G, gens)] = True
        if members.sum() == len(H):
            break
    return gens


def coset_projection(G: FiniteGroup, N: Sequence[int]) -> np.ndarray:
    """Label of the right coset ``Nx`` for every ``x``; cosets numbered by least element."""
    N = np.asarray(N, dtype=np.int64)
    labels = np.full(G.n, -1, dtype=np.int64)
    k = 0
    for x in range(G.n):
        if labels[x] < 0:
            labels[G.table[N, x]] = k
            k += 1
    return labels


def quotient_group(G: FiniteGroup, N: Sequence[int]) -> FiniteGroup:
    N = _as_subgroup(G, N)
    if not is_normal(G, N):
        raise PreconditionError("N is not normal in G")
    labels = coset_projection(G, N)
    q = G.n // len(N)
    reps = np.array([np.flatnonzero(labels == k)[0] for k in range(q)])
    table = labels[G.table[np.ix_(reps, reps)]]
    return FiniteGroup(
        table,
        presentation={"kind": "quotient", "params": {"order": G.n, "normal_order": len(N)}},
        check=False,
    )


def is_core_free(G: FiniteGroup, H: Sequence[int]) -> bool:
    return len(core(G, H)) == 1


def core(G: FiniteGroup, H: Sequence[int]) -> Subgroup:
    inside = membership(G, H)
    T, inv = G.table, G.inv
    mask = inside.copy()
    arange = np.arange(G.n)
    for g in range(G.n):
        mask &= inside[T[T[g, arange], inv[g]]]
    return np.flatnonzero(mask)


def right_cosets(G: FiniteGroup, H: Sequence[int]) -> Tuple[np.ndarray, List[int]]:
    """Coset label of every element and the least element of each right coset ``Hx``."""
    labels = coset_projection(G, H)
    reps = [int(np.flatnonzero(labels == k)[0]) for k in range(int(labels.max()) + 1)]
    return labels, reps


# -- structure ------------------------------------------------------------------------------


def derived_subgroup(G: FiniteGroup) -> Subgroup:
    gens = G.generators
    comms = [G.commutator(a, b) for i, a in enumerate(gens) for b in gens[i + 1 :]]
    return normal_closure(G, comms)


def center(G: FiniteGroup) -> Subgroup:
    T = G.table
    mask = np.ones(G.n, dtype=bool)
    for g in G.generators:
        mask &= T[:, g] == T[g, :]
    return np.flatnonzero(mask)


def require_p_group(G: FiniteGroup, p: Optional[int] = None) -> int:
    if G.n == 1:
        if p is None:
            raise PreconditionError("trivial group has no defining prime")
        return p
    pp = prime_power(G.n)
    if pp is None or (p is not None and pp[0] != p):
        raise PreconditionError(f"group of order {G.n} is not a {p or 'p'}-group")
    return pp[0]


def frattini_subgroup(G: FiniteGroup) -> Subgroup:
    """``<G', g^p>`` for a p-group; intersection of maximal subgroups otherwise."""
    pp = prime_power(G.n)
    if pp is None:
        if G.n == 1:
            return np.array([0])
        return frattini_by_maximal_subgroups(G)
    powers = np.unique(G.power_map(pp[0]))
    return closure(G, np.concatenate([derived_subgroup(G), powers]))


def all_subgroups(G: FiniteGroup, limit: int = LATTICE_LIMIT) -> List[int]:
    """Every subgroup as a bitmask over element ids, by joining cyclic subgroups."""
    _check_cap(G.n, limit)

    def mask_of(elements: np.ndarray) -> int:
        return sum(1 << int(x) for x in elements)

    def elements_of(mask: int) -> List[int]:
        return [i for i in range(G.n) if mask >> i & 1]

    cyclic = sorted({mask_of(closure(G, [g])) for g in range(G.n)})
    found = set(cyclic)
    frontier = list(cyclic)
    while frontier:
        fresh = []
        for A in frontier:
            for B in cyclic:
                if A | B == A:
                    continue
                join = mask_of(closure(G, elements_of(A | B)))
                if join not in found:
                    found.add(join)
                    fresh.append(join)
        frontier = fresh
    return sorted(found)


def frattini_by_maximal_subgroups(G: FiniteGroup) -> Subgroup:
    whole = (1 << G.n) - 1
    proper = [m for m in all_subgroups(G) if m != whole]
    maximal = [A for A in proper if not any(A != B and A | B == B for B in proper)]
    result = whole
    for A in maximal:
        result &= A
    return np.array([i for i in range(G.n) if result >> i & 1])


def omega_s(G: FiniteGroup, p: int, s: int) -> Subgroup:
    require_p_group(G, p)
    return closure(G, np.flatnonzero(p**s % G.orders == 0))


def is_pk_abelian(
    G: FiniteGroup, p: int, k: int, samples: int = 100_000, seed: Optional[int] = None
) -> bool:
    q = p**k
    P = G.power_map(q)
    T = G.table
    if G.n <= PK_ABELIAN_EXHAUSTIVE:
        a = np.arange(G.n)
        return bool(np.array_equal(P[T], T[P[a][:, None], P[a][None, :]]))
    rng = np.random.default_rng(setting(seed, "SEED"))
    x, y = rng.integers(0, G.n, size=(2, samples))
    return bool(np.array_equal(P[T[x, y]], T[P[x], P[y]]))


@dataclass
class StructureReport:
    order: int
    exponent: int
    derived_subgroup: List[int]
    center: List[int]
    frattini: List[int]
    is_abelian: bool
    is_cyclic: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "exponent": self.exponent,
            "derived_order": len(self.derived_subgroup),
            "center_order": len(self.center),
            "frattini_order": len(self.frattini),
            "is_abelian": self.is_abelian,
            "is_cyclic": self.is_cyclic,
        }


def structure_report(G: FiniteGroup, cap: Optional[int] = None) -> StructureReport:
    _check_cap(G.n, cap)
    return StructureReport(
        order=G.n,
        exponent=G.exponent,
        derived_subgroup=derived_subgroup(G).tolist(),
        center=center(G).tolist(),
        frattini=frattini_subgroup(G).tolist(),
        is_abelian=G.is_abelian,
        is_cyclic=G.is_cyclic,
    )


# -- metacyclic predicates ------------------------------------------------------------------


@dataclass
class MetacyclicWitness:
    answer: bool
    normal: Optional[List[int]] = None
    normal_generator: Optional[int] = None
    quotient_generator: Optional[int] = None


@dataclass
class SplitWitness:
    answer: bool
    normal: Optional[List[int]] = None
    normal_generator: Optional[int] = None
    complement_generator: Optional[int] = None


def _cyclic_normal_candidates(
    G: FiniteGroup,
) -> Iterator[Tuple[int, Subgroup, np.ndarray, np.ndarray]]:
    """Cyclic normal ``N = <g>`` with ``G/N`` cyclic, by decreasing ``|N|`` then id.

    Yields ``(g, N, coset labels, order of each element modulo N)``.
    """
    seen = set()
    for g in sorted(range(G.n), key=lambda x: (-int(G.orders[x]), x)):
        N = closure(G, [g])
        key = N.tobytes()
        if key in seen:
            continue
        seen.add(key)
        if not is_normal(G, N):
            continue
        labels = coset_projection(G, N)
        q = G.n // len(N)
        inside = labels == 0
        rel = np.ones(G.n, dtype=np.int64)
        cur = np.arange(G.n)
        hit = inside.copy()
        for k in range(1, q + 1):
            if hit.all():
                break
            cur = G.table[cur, np.arange(G.n)]
            newly = ~hit & inside[cur]
            rel[newly] = k + 1
            hit |= newly
        if rel.max() == q:
            yield g, N, labels, rel


def is_metacyclic(G: FiniteGroup, cap: Optional[int] = None) -> MetacyclicWitness:
    _check_cap(G.n, cap)
    for g, N, _, rel in _cyclic_normal_candidates(G):
        q = G.n // len(N)
        h = int(np.flatnonzero(rel == q)[0])
        logger.debug(f"Metacyclic witness: |N| = {len(N)}, |G/N| = {q}")
        return MetacyclicWitness(True, N.tolist(), g, h)
    return MetacyclicWitness(False)


def iter_split_decompositions(G: FiniteGroup) -> Iterator[SplitWitness]:
    for g, N, _, rel in _cyclic_normal_candidates(G):
        q = G.n // len(N)
        for h in np.flatnonzero((rel == q) & (G.orders == q)).tolist():
            yield SplitWitness(True, N.tolist(), g, int(h))


def is_split_metacyclic(G: FiniteGroup, cap: Optional[int] = None) -> SplitWitness:
    _check_cap(G.n, cap)
    return next(iter_split_decompositions(G), SplitWitness(False))


def xu_zhang_split_decomposition(G: FiniteGroup, params: XuZhangParams) -> Tuple[int, int]:
    """Generators ``(n, h)`` of a cyclic normal subgroup and a cyclic complement when stu = 0."""
    if not params.split:
        raise PreconditionError("Xu-Zhang group with stu != 0 is not split")
    p = params.p
    a, b = G.index_of((1, 0)), G.index_of((0, 1))
    if params.s == 0:
        normal, comp = b, G.mul(a, G.power(b, -(p**params.t)))
    elif params.t == 0:
        normal, comp = a, G.mul(b, G.inverse(a))
    else:
        normal, comp = a, b
    N = closure(G, [normal])
    H = closure(G, [comp])
    if not (is_normal(G, N) and len(np.intersect1d(N, H)) == 1 and len(N) * len(H) == G.n):
        raise RuntimeError(f"split decomposition check failed for {params}")
    return normal, comp


@dataclass
class OvergroupWitness:
    tau: int
    complement: bool


def find_order_pn_overgroup(G: FiniteGroup, sigma: int, g: int) -> OvergroupWitness:
    """An element ``tau`` of order ``p^n`` with ``g`` in ``<tau>``, in ``G = C_{p^m} : C_{p^n}``.

    ``sigma`` generates the normal cyclic factor. Witnesses with ``<sigma> & <tau> = 1``
    are preferred; the flag reports which kind was returned.
    """
    pp = prime_power(G.n)
    if pp is None or pp[0] == 2:
        raise PreconditionError("G must be a p-group for an odd prime p")
    p, total = pp
    S = closure(G, [sigma])
    if not is_normal(G, S):
        raise PreconditionError("<sigma> is not normal in G")
    m = round(math.log(len(S), p))
    n = total - m
    if not m >= n >= 1:
        raise PreconditionError(f"need m >= n >= 1, got m={m}, n={n}")
    if g == 0:
        raise PreconditionError("g must be nontrivial")
    in_sigma = membership(G, S)
    if len(np.intersect1d(closure(G, [g]), S)) != 1:
        raise PreconditionError("<g> meets <sigma> nontrivially")
    target = p**n
    cands = np.flatnonzero(G.orders == target)
    cur = cands.copy()
    has_g = cur == g
    meets = np.zeros(len(cands), dtype=bool)
    for _ in range(target - 1):
        cur = G.table[cur, cands]
        has_g |= cur == g
        meets |= (cur != 0) & in_sigma[cur]
    for want_complement in (True, False):
        ok = has_g & (~meets if want_complement else np.ones_like(meets))
        if ok.any():
            tau = int(cands[np.flatnonzero(ok)[0]])
            return OvergroupWitness(tau, bool(not meets[np.flatnonzero(cands == tau)[0]]))
    raise NotFound(f"no element of order {target} contains g={g}")


# -- isomorphism ----------------------------------------------------------------------------


def invariant_vector(G: FiniteGroup) -> Tuple[int, int, int, int, int]:
    """``(order, exponent, |G'|, |Z|, |Omega_1|)``; the last entry is -1 unless G is a p-group."""
    pp = prime_power(G.n)
    omega1 = len(omega_s(G, pp[0], 1)) if pp else -1
    return (G.n, G.exponent, len(derived_subgroup(G)), len(center(G)), omega1)


def _order_profile(G: FiniteGroup) -> Tuple[Tuple[int, int], ...]:
    values, counts = np.unique(G.orders, return_counts=True)
    return tuple(zip(values.tolist(), counts.tolist()))


def _extend(
    G: FiniteGroup, H: FiniteGroup, gens: Sequence[int], images: Sequence[int]
) -> Optional[np.ndarray]:
    """The homomorphism on ``<gens>`` sending ``gens`` to ``images``.

    ``None`` when the assignment is inconsistent or not injective.
    """
    phi = np.full(G.n, -1, dtype=np.int64)
    phi[0] = 0
    queue = [0]
    for x in queue:
        for g, h in zip(gens, images):
            y = int(G.table[x, g])
            img = int(H.table[phi[x], h])
            if phi[y] < 0:
                phi[y] = img
                queue.append(y)
            elif phi[y] != img:
                return None
    if len(np.unique(phi[queue])) != len(queue):
        return None
    return phi


def _homomorphism_search(
    G: FiniteGroup,
    H: FiniteGroup,
    gens: Sequence[int],
    candidates: Sequence[np.ndarray],
    accept: Callable[[np.ndarray], bool],
    budget: SearchBudget,
    first_only: bool,
) -> List[np.ndarray]:
    found: List[np.ndarray] = []

    def descend(k: int, images: List[int]) -> bool:
        if k == len(gens):
            phi = _extend(G, H, gens, images)
            if phi is not None and (phi >= 0).all() and accept(phi):
                found.append(phi)
                return first_only
            return False
        for h in candidates[k].tolist():
            budget.tick()
            trial = images + [h]
            phi = _extend(G, H, gens[: k + 1], trial)
            if phi is None or not accept(phi):
                continue
            if descend(k + 1, trial):
                return True
        return False

    descend(0, [])
    return found


def find_isomorphism(
    G: FiniteGroup,
    H: FiniteGroup,
    limit: int = ISOMORPHISM_LIMIT,
    budget: Optional[SearchBudget] = None,
) -> Optional[np.ndarray]:
    """An isomorphism ``G -> H`` as an array of images, or ``None`` when none exists."""
    if G.n != H.n or _order_profile(G) != _order_profile(H):
        return None
    if invariant_vector(G) != invariant_vector(H):
        return None
    _check_cap(G.n, limit)
    gens = G.generators
    candidates = [np.flatnonzero(H.orders == G.orders[g]) for g in gens]
    result = _homomorphism_search(
        G, H, gens, candidates, lambda phi: True, budget or SearchBudget(label="isomorphism"), True
    )
    return result[0] if result else None


def group_automorphisms(
    G: FiniteGroup,
    fixing: Optional[Sequence[int]] = None,
    budget: Optional[SearchBudget] = None,
) -> List[np.ndarray]:
    """All automorphisms of ``G`` (mapping the set ``fixing`` onto itself when given)."""
    budget = budget or SearchBudget(label="automorphisms")
    S = membership(G, fixing) if fixing is not None else np.ones(G.n, dtype=bool)
    S_ids = np.flatnonzero(S)
    if fixing is not None and len(closure(G, S_ids)) == G.n:
        gens = subgroup_generators(G, S_ids)
        candidates = [S_ids[G.orders[S_ids] == G.orders[g]] for g in gens]
    else:
        gens = G.generators
        candidates = [np.flatnonzero(G.orders == G.orders[g]) for g in gens]

    def accept(phi: np.ndarray) -> bool:
        defined = phi >= 0
        return bool(np.all(S[phi[defined & S]]))

    return _homomorphism_search(G, G, gens, candidates, accept, budget, False)

