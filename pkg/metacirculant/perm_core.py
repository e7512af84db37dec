import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from metacirculant.config import Config, SearchBudget, setting
from metacirculant.errors import (
    CapExceeded,
    DegreeMismatch,
    ParseError,
    PreconditionError,
    SearchBudgetExceeded,
)

Images = Tuple[int, ...]

# Largest block of elements materialised at once by the coset searches.
CHUNK_ROWS = 1 << 15


def _compose(p: Images, q: Images) -> Images:
    return tuple(map(q.__getitem__, p))


def _invert(p: Images) -> Images:
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x] = i
    return tuple(inv)


def _is_identity(p: Images) -> bool:
    return all(i == x for i, x in enumerate(p))


@dataclass(frozen=True, order=True)
class Permutation:
    """A bijection of ``0..degree-1`` acting on the right: ``i^(pq) = (i^p)^q``."""

    images: Images

    def __post_init__(self) -> None:
        images = tuple(int(x) for x in self.images)
        if not images:
            raise PreconditionError("permutation degree must be positive")
        if sorted(images) != list(range(len(images))):
            raise PreconditionError(f"images are not a bijection on 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, degree: int) -> "Permutation":
        return cls(tuple(range(degree)))

    @classmethod
    def from_cycles(cls, degree: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        images = list(range(degree))
        for cycle in cycles:
            for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
                images[a] = b
        return cls(tuple(images))

    @classmethod
    def parse(cls, line: str) -> "Permutation":
        text = line.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise ParseError(f"permutation line must look like [i0,i1,...]: {line!r}")
        try:
            images = tuple(int(tok) for tok in text[1:-1].split(",") if tok.strip())
            return cls(images)
        except ValueError as e:
            raise ParseError(f"invalid permutation line {line!r}: {e}") from e

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, point: int) -> int:
        return self.images[point]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def __pow__(self, k: int) -> "Permutation":
        base = self.images if k >= 0 else _invert(self.images)
        k = abs(k)
        result = tuple(range(self.degree))
        while k:
            if k & 1:
                result = _compose(result, base)
            base = _compose(base, base)
            k >>= 1
        return Permutation(result)

    def inverse(self) -> "Permutation":
        return Permutation(_invert(self.images))

    def conjugate(self, c: "Permutation") -> "Permutation":
        """Return ``c^-1 * self * c``."""
        return c.inverse() * self * c

    @property
    def is_identity(self) -> bool:
        return _is_identity(self.images)

    @property
    def order(self) -> int:
        return element_order(self)

    def moved_points(self) -> List[int]:
        return [i for i, x in enumerate(self.images) if i != x]

    def cycles(self, include_fixed: bool = False) -> List[Tuple[int, ...]]:
        seen = [False] * self.degree
        result = []
        for start in range(self.degree):
            if seen[start]:
                continue
            cycle = []
            x = start
            while not seen[x]:
                seen[x] = True
                cycle.append(x)
                x = self.images[x]
            if len(cycle) > 1 or include_fixed:
                result.append(tuple(cycle))
        return result

    def cycle_type(self) -> Tuple[int, ...]:
        return tuple(sorted((len(c) for c in self.cycles(include_fixed=True)), reverse=True))

    def to_line(self) -> str:
        return "[" + ",".join(str(x) for x in self.images) + "]"

    def to_array(self) -> np.ndarray:
        return np.asarray(self.images, dtype=np.int32)

    def __repr__(self) -> str:
        cycles = self.cycles()
        if not cycles:
            return f"Permutation(id, degree={self.degree})"
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in cycles)
        return f"Permutation({body}, degree={self.degree})"


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Apply ``p`` then ``q``."""
    if p.degree != q.degree:
        raise DegreeMismatch(p.degree, q.degree)
    return Permutation(_compose(p.images, q.images))


def invert(p: Permutation) -> Permutation:
    return p.inverse()


def element_order(p: Permutation) -> int:
    return math.lcm(*(len(c) for c in p.cycles(include_fixed=True)))


def p_part(p: Permutation, prime: int) -> Permutation:
    """The p-part of ``p``: the power whose order is the largest p-power dividing o(p)."""
    order = element_order(p)
    while order % prime == 0:
        order //= prime
    return p**order


class ElementIndex:
    """Exact lookup of image rows among a fixed set of permutations.

    Rows are hashed with random 64-bit weights; every hit is confirmed against the
    stored row, so lookups never report a false match.
    """

    def __init__(self, elements: np.ndarray, seed: int = 0x5EED):
        self.elements = np.ascontiguousarray(elements)
        rng = np.random.default_rng(seed)
        self._weights = rng.integers(1, 2**63 - 1, size=self.elements.shape[1], dtype=np.uint64)
        keys = self._keys(self.elements)
        self._order = np.argsort(keys, kind="stable")
        self._sorted = keys[self._order]
        if len(self._sorted) > 1 and not np.all(np.diff(self._sorted) != 0):
            raise RuntimeError("element hash collision; choose another seed")

    def _keys(self, rows: np.ndarray) -> np.ndarray:
        return (rows.astype(np.uint64) * self._weights).sum(axis=1, dtype=np.uint64)

    def __len__(self) -> int:
        return len(self.elements)

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Return the index of each row, or -1 where the row is not present."""
        rows = np.atleast_2d(rows)
        keys = self._keys(rows)
        pos = np.searchsorted(self._sorted, keys)
        pos = np.clip(pos, 0, len(self._sorted) - 1)
        ids = self._order[pos]
        hit = self._sorted[pos] == keys
        hit &= np.all(self.elements[ids] == rows, axis=1)
        return np.where(hit, ids, -1)

    def index_of(self, images: Sequence[int]) -> int:
        return int(self.lookup(np.asarray(images, dtype=self.elements.dtype))[0])


@dataclass
class _Level:
    base_point: int
    generators: List[Images]
    transversal: Dict[int, Images]
    inverse_transversal: Dict[int, Images]


class StabilizerChain:
    """Base and strong generating set built by deterministic Schreier-Sims."""

    def __init__(self, degree: int, generators: Iterable[Images], base: Sequence[int] = ()):
        self.degree = degree
        identity = tuple(range(degree))
        self.levels: List[_Level] = [
            _Level(b, [], {b: identity}, {b: identity}) for b in base
        ]
        for g in generators:
            if not _is_identity(g):
                self._add(0, g)

    @classmethod
    def _from_levels(cls, degree: int, levels: List[_Level]) -> "StabilizerChain":
        chain = cls.__new__(cls)
        chain.degree = degree
        chain.levels = levels
        return chain

    def _new_level(self, g: Images) -> _Level:
        identity = tuple(range(self.degree))
        point = next(i for i, x in enumerate(g) if i != x)
        return _Level(point, [], {point: identity}, {point: identity})

    def _add(self, i: int, g: Images) -> None:
        if i == len(self.levels):
            self.levels.append(self._new_level(g))
        level = self.levels[i]
        level.generators.append(g)
        transversal = level.transversal
        queue = deque((a, g) for a in list(transversal))
        residues = []
        while queue:
            a, h = queue.popleft()
            b = h[a]
            u = _compose(transversal[a], h)
            if b not in transversal:
                transversal[b] = u
                level.inverse_transversal[b] = _invert(u)
                queue.extend((b, k) for k in level.generators)
            else:
                schreier = _compose(u, level.inverse_transversal[b])
                if not _is_identity(schreier):
                    residues.append(schreier)
        for s in residues:
            residue, _ = self.sift(s, i + 1)
            if not _is_identity(residue):
                self._add(i + 1, residue)

    def sift(self, g: Images, start: int = 0) -> Tuple[Images, int]:
        """Strip ``g`` through the levels; return the residue and the level reached."""
        for k in range(start, len(self.levels)):
            level = self.levels[k]
            inv = level.inverse_transversal.get(g[level.base_point])
            if inv is None:
                return g, k
            g = _compose(g, inv)
        return g, len(self.levels)

    def contains(self, g: Images) -> bool:
        if len(g) != self.degree:
            return False
        residue, depth = self.sift(g)
        return depth == len(self.levels) and _is_identity(residue)

    @property
    def base(self) -> Tuple[int, ...]:
        return tuple(level.base_point for level in self.levels)

    @property
    def order(self) -> int:
        return math.prod(len(level.transversal) for level in self.levels)

    def orbit_sizes(self) -> List[int]:
        return [len(level.transversal) for level in self.levels]

    def strong_generators(self) -> List[Images]:
        seen = set()
        result = []
        for level in self.levels:
            for g in level.generators:
                if g not in seen:
                    seen.add(g)
                    result.append(g)
        return result

    def tail(self, k: int) -> "StabilizerChain":
        """Chain of the pointwise stabilizer of the first ``k`` base points."""
        return StabilizerChain._from_levels(self.degree, self.levels[k:])

    def random_element(self, rng: np.random.Generator) -> Images:
        g = tuple(range(self.degree))
        for level in reversed(self.levels):
            points = sorted(level.transversal)
            g = _compose(g, level.transversal[points[int(rng.integers(len(points)))]])
        return g

    def element_array(self, right: Optional[Images] = None) -> np.ndarray:
        """All elements (times ``right``) as an array of image rows, unsorted."""
        rows = np.arange(self.degree, dtype=np.int32)[None, :]
        for level in reversed(self.levels):
            reps = [
                np.asarray(level.transversal[b], dtype=np.int32) for b in sorted(level.transversal)
            ]
            rows = np.concatenate([u[rows] for u in reps], axis=0)
        if right is not None:
            rows = np.asarray(right, dtype=np.int32)[rows]
        return rows

    def coset_chunks(self, right: Images, chunk_rows: int = CHUNK_ROWS) -> Iterator[np.ndarray]:
        """Yield the elements of ``G * right`` in blocks of bounded size."""
        split = len(self.levels)
        size = 1
        while split > 0 and size * len(self.levels[split - 1].transversal) <= chunk_rows:
            split -= 1
            size *= len(self.levels[split].transversal)
        low = StabilizerChain._from_levels(self.degree, self.levels[split:]).element_array()
        upper = [
            [self.levels[k].transversal[b] for b in sorted(self.levels[k].transversal)]
            for k in range(split - 1, -1, -1)
        ]
        for combo in itertools.product(*upper):
            w = right
            for u in reversed(combo):
                w = _compose(u, w)
            yield np.asarray(w, dtype=np.int32)[low]


def _sort_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) <= 1:
        return rows
    return rows[np.lexsort(rows.T[::-1])]


class PermutationGroup:
    """A permutation group given by generators, with a lazily built stabilizer chain."""

    def __init__(
        self,
        generators: Sequence[Permutation],
        degree: Optional[int] = None,
        base: Sequence[int] = (),
    ):
        generators = list(generators)
        if degree is None:
            if not generators:
                raise PreconditionError("degree required for a group without generators")
            degree = generators[0].degree
        for g in generators:
            if g.degree != degree:
                raise DegreeMismatch(degree, g.degree)
        self.degree = degree
        self.generators: Tuple[Permutation, ...] = tuple(generators)
        self._base_hint = tuple(base)
        self._chains: Dict[Tuple[int, ...], StabilizerChain] = {}

    @classmethod
    def _from_chain(
        cls, generators: Sequence[Images], chain: StabilizerChain
    ) -> "PermutationGroup":
        group = cls([Permutation(g) for g in generators], degree=chain.degree, base=chain.base)
        group.__dict__["chain"] = chain
        return group

    @classmethod
    def trivial(cls, degree: int) -> "PermutationGroup":
        return cls([], degree=degree)

    @cached_property
    def chain(self) -> StabilizerChain:
        chain = StabilizerChain(self.degree, (g.images for g in self.generators), self._base_hint)
        logger.debug(
            f"Schreier-Sims: degree {self.degree}, base length {len(chain.levels)}, "
            f"order {chain.order}"
        )
        return chain

    def chain_with_base(self, base: Sequence[int]) -> StabilizerChain:
        key = tuple(base)
        if self.chain.base[: len(key)] == key:
            return self.chain
        if key not in self._chains:
            gens = self.chain.strong_generators() or [g.images for g in self.generators]
            self._chains[key] = StabilizerChain(self.degree, gens, key)
        return self._chains[key]

    @property
    def order(self) -> int:
        return self.chain.order

    def __len__(self) -> int:
        return self.order

    @property
    def base(self) -> Tuple[int, ...]:
        return self.chain.base

    def strong_generators(self) -> List[Permutation]:
        return [Permutation(g) for g in self.chain.strong_generators()]

    def contains(self, p: Permutation) -> bool:
        return self.chain.contains(p.images)

    def __contains__(self, p: Permutation) -> bool:
        return self.contains(p)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    def orbit(self, point: int) -> List[int]:
        return orbit(self, point)

    def orbits(self) -> List[List[int]]:
        return orbits(self)

    def random_element(self, rng: np.random.Generator) -> Permutation:
        return Permutation(self.chain.random_element(rng))

    def element_array(self, cap: Optional[int] = None) -> np.ndarray:
        cap = setting(cap, "MAX_GROUP_ORDER")
        if self.order > cap:
            raise CapExceeded(self.order, cap)
        return _sort_rows(self.chain.element_array())

    def same_group(self, other: "PermutationGroup") -> bool:
        return (
            self.degree == other.degree
            and self.order == other.order
            and all(other.contains(g) for g in self.generators)
        )

    def to_lines(self) -> List[str]:
        return [f"degree: {self.degree}"] + [g.to_line() for g in self.generators]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "PermutationGroup":
        rows = [line.strip() for line in lines if line.strip()]
        if not rows or not rows[0].startswith("degree:"):
            raise ParseError("group text must start with a 'degree: <d>' header")
        try:
            degree = int(rows[0].split(":", 1)[1])
        except ValueError as e:
            raise ParseError(f"invalid degree header {rows[0]!r}") from e
        return cls([Permutation.parse(r) for r in rows[1:]], degree=degree)

    def __repr__(self) -> str:
        return f"PermutationGroup(degree={self.degree}, generators={len(self.generators)})"


def schreier_sims(
    gens: Sequence[Permutation], degree: Optional[int] = None, base: Sequence[int] = ()
) -> PermutationGroup:
    group = PermutationGroup(gens, degree=degree, base=base)
    _ = group.chain
    return group


def orbit(G: PermutationGroup, point: int) -> List[int]:
    if not 0 <= point < G.degree:
        raise PreconditionError(f"point {point} out of range for degree {G.degree}")
    gens = [g.images for g in G.generators]
    seen = {point}
    queue = [point]
    for x in queue:
        for g in gens:
            y = g[x]
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return sorted(seen)


def orbits(G: PermutationGroup) -> List[List[int]]:
    cells = []
    assigned = [False] * G.degree
    for start in range(G.degree):
        if assigned[start]:
            continue
        cell = orbit(G, start)
        for x in cell:
            assigned[x] = True
        cells.append(cell)
    return cells


def stabilizer(G: PermutationGroup, point: int) -> PermutationGroup:
    if not 0 <= point < G.degree:
        raise PreconditionError(f"point {point} out of range for degree {G.degree}")
    chain = G.chain_with_base((point,))
    tail = chain.tail(1)
    gens = tail.levels[0].generators if tail.levels else []
    return PermutationGroup._from_chain(gens, tail)


@dataclass(frozen=True)
class TransitivityProfile:
    transitive: bool
    semiregular: bool
    regular: bool


def transitivity_profile(G: PermutationGroup) -> TransitivityProfile:
    cells = orbits(G)
    order = G.order
    transitive = len(cells) == 1
    semiregular = all(len(c) == order for c in cells)
    return TransitivityProfile(transitive, semiregular, transitive and semiregular)


def enumerate_elements(G: PermutationGroup, cap: Optional[int] = None) -> List[Permutation]:
    return [Permutation(tuple(row)) for row in G.element_array(cap).tolist()]


def is_subgroup(H: PermutationGroup, G: PermutationGroup) -> bool:
    return H.degree == G.degree and all(G.contains(h) for h in H.generators)


def normalizes(g: Permutation, H: PermutationGroup) -> bool:
    return all(H.contains(h.conjugate(g)) for h in H.generators)


def _require_subgroup(H: PermutationGroup, G: PermutationGroup) -> None:
    if H.degree != G.degree:
        raise DegreeMismatch(G.degree, H.degree)
    if not is_subgroup(H, G):
        raise PreconditionError("H is not a subgroup of G")


def _subgroup_search(
    G: PermutationGroup,
    test: Callable[[np.ndarray], np.ndarray],
    seed: Sequence[Images],
    point_filter: Optional[Callable[[int, int], bool]],
    budget: SearchBudget,
) -> Tuple[List[Images], StabilizerChain]:
    """Find the subgroup ``{g in G : test(g)}`` level by level, deepest first.

    ``test`` must describe a subgroup containing ``seed``. At each level the points of
    the G-orbit not yet reached by the known subgroup are tried in ascending order.
    """
    chain = G.chain
    base = chain.base
    found = [g for g in seed if not _is_identity(g)]
    known = StabilizerChain(G.degree, found, base)
    for i in range(len(chain.levels) - 1, -1, -1):
        level = chain.levels[i]
        rest = chain.tail(i + 1)
        for gamma in sorted(level.transversal):
            if gamma in known.levels[i].transversal:
                continue
            if point_filter is not None and not point_filter(level.base_point, gamma):
                continue
            witness = None
            for block in rest.coset_chunks(level.transversal[gamma]):
                try:
                    budget.tick(len(block))
                except SearchBudgetExceeded as e:
                    e.partial = PermutationGroup._from_chain(found, known)
                    raise
                hits = np.flatnonzero(test(block))
                if len(hits):
                    witness = tuple(int(x) for x in block[hits[0]])
                    break
            if witness is not None:
                found.append(witness)
                known = StabilizerChain(G.degree, found, base)
    return found, known


def _orbit_length_filter(H: PermutationGroup) -> Callable[[int, int], bool]:
    lengths = {}
    for cell in orbits(H):
        for x in cell:
            lengths[x] = len(cell)
    return lambda b, gamma: lengths[b] == lengths[gamma]


def normalizer_in(
    G: PermutationGroup, H: PermutationGroup, budget: Optional[SearchBudget] = None
) -> PermutationGroup:
    """The normalizer of ``H`` in ``G`` by backtracking over the stabilizer chain of ``G``."""
    _require_subgroup(H, G)
    if all(normalizes(g, H) for g in G.generators):
        return G
    budget = budget or SearchBudget(label="normalizer")
    h_rows = [np.asarray(h.images, dtype=np.int32) for h in H.generators]
    index = ElementIndex(H.element_array(Config.STABILIZER_ENUMERATION_LIMIT))

    def test(block: np.ndarray) -> np.ndarray:
        inverse = np.argsort(block, axis=1)
        ok = np.ones(len(block), dtype=bool)
        for h in h_rows:
            conj = np.take_along_axis(block, h[inverse], axis=1)
            ok &= index.lookup(conj) >= 0
        return ok

    seed = [h.images for h in H.generators] + [
        g.images for g in G.generators if normalizes(g, H)
    ]
    gens, chain = _subgroup_search(G, test, seed, _orbit_length_filter(H), budget)
    logger.debug(f"Normalizer of order {chain.order} found after {budget.used} nodes")
    return PermutationGroup._from_chain(gens, chain)


def centralizer_in(
    G: PermutationGroup,
    H: PermutationGroup,
    budget: Optional[SearchBudget] = None,
    check_normal: bool = True,
) -> PermutationGroup:
    """The centralizer of ``H`` in ``G``.

    With ``check_normal`` the result is checked to be normal in the normalizer of ``H``.
    """
    _require_subgroup(H, G)
    h_perms = [h for h in H.generators if not h.is_identity]
    if all(g * h == h * g for g in G.generators for h in h_perms):
        return G
    budget = budget or SearchBudget(label="centralizer")
    h_rows = [np.asarray(h.images, dtype=np.int32) for h in h_perms]

    def test(block: np.ndarray) -> np.ndarray:
        ok = np.ones(len(block), dtype=bool)
        for h in h_rows:
            ok &= np.all(h[block] == block[:, h], axis=1)
        return ok

    seed = [
        x.images
        for x in list(G.generators) + list(H.generators)
        if all(x * h == h * x for h in h_perms)
    ]
    gens, chain = _subgroup_search(G, test, seed, _orbit_length_filter(H), budget)
    logger.debug(f"Centralizer of order {chain.order} found after {budget.used} nodes")
    C = PermutationGroup._from_chain(gens, chain)
    if check_normal:
        N = normalizer_in(G, H, SearchBudget(budget.max_nodes, label="normalizer"))
        _check_normal_in_normalizer(C, N)
    return C


def _check_normal_in_normalizer(C: PermutationGroup, N: PermutationGroup) -> None:
    if not is_subgroup(C, N) or not all(normalizes(n, C) for n in N.generators):
        raise RuntimeError(f"centralizer of order {C.order} is not normal in the normalizer")
    logger.debug(f"Centralizer of order {C.order} is normal in normalizer of order {N.order}")
