"""Finite-group model of sectors, second conjugate classes and relative normalizers.

A group acts on the right on a finite set of sectors.  For a vacuum sector
``x0`` with stabilizer ``G_x0`` and a background ``a`` the second conjugate
class of ``x`` is its orbit under ``a^{-1} G_x0 a``.  Clouds ``x0 . s``
(``s`` in a subgroup ``S``) are absorbed when their class equals that of
``x0``; membership of ``a`` in ``N_G(R, S) = {g : g S g^{-1} in R}`` with
``R`` inside ``G_x0`` is sufficient.  Everything is checked exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GroupError

MAX_ORDER = 64

Subset = FrozenSet[int]


class FiniteGroup:
    """Group given by a Cayley table ``table[a, b] = a b``; axioms checked exhaustively."""

    def __init__(self, table, name: str = "G", labels: Optional[Sequence[str]] = None):
        t = np.asarray(table)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise GroupError("Cayley table must be a non-empty square array")
        n = t.shape[0]
        if n > MAX_ORDER:
            raise GroupError(f"group order {n} exceeds the cap of {MAX_ORDER}")
        if not np.issubdtype(t.dtype, np.integer) or t.min() < 0 or t.max() >= n:
            raise GroupError("Cayley table entries must be element indices")
        self.table = t.astype(np.int64)
        self.name = name
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        self._verify()

    def _verify(self) -> None:
        t, n = self.table, self.order
        # associativity: (ab)c == a(bc)
        lhs = t[t[:, :, None], np.arange(n)[None, None, :]]
        rhs = t[np.arange(n)[:, None, None], t[None, :, :]]
        if not np.array_equal(lhs, rhs):
            raise GroupError(f"{self.name}: table is not associative")
        ids = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
        if not ids:
            raise GroupError(f"{self.name}: no identity element")
        self.identity = ids[0]
        inv = np.full(n, -1)
        for a in range(n):
            hits = np.nonzero(t[a] == self.identity)[0]
            if hits.size != 1 or t[hits[0], a] != self.identity:
                raise GroupError(f"{self.name}: element {a} has no two-sided inverse")
            inv[a] = hits[0]
        self.inverse = inv
        self._rows = t.tolist()
        self._subgroups: Optional[List[Subset]] = None

    @property
    def order(self) -> int:
        return self.table.shape[0]

    @property
    def elements(self) -> range:
        return range(self.order)

    def mul(self, *gs: int) -> int:
        rows = self._rows
        out = self.identity
        for g in gs:
            out = rows[out][g]
        return out

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    def conj(self, g: int, S: Iterable[int]) -> Subset:
        """g S g^{-1}."""
        gi = self.inv(g)
        return frozenset(self.mul(g, s, gi) for s in S)

    def is_subgroup(self, H: Iterable[int]) -> bool:
        H = frozenset(H)
        if self.identity not in H:
            return False
        return all(self.mul(a, self.inv(b)) in H for a in H for b in H)

    def require_subgroup(self, H: Iterable[int], what: str = "subset") -> Subset:
        H = frozenset(int(h) for h in H)
        if not H <= set(self.elements):
            raise GroupError(f"{what} contains elements outside {self.name}")
        if not self.is_subgroup(H):
            raise GroupError(f"{what} {sorted(H)} is not a subgroup of {self.name}")
        return H

    def generate(self, gens: Iterable[int]) -> Subset:
        """Subgroup generated by ``gens``."""
        H = {self.identity}
        frontier = list(H)
        gens = [int(g) for g in gens]
        while frontier:
            new = []
            for h in frontier:
                for g in gens:
                    x = self.mul(h, g)
                    if x not in H:
                        H.add(x)
                        new.append(x)
            frontier = new
        return frozenset(H)

    def subgroups(self) -> List[Subset]:
        """All subgroups, by closing cyclic subgroups under joins (memoized)."""
        if self._subgroups is not None:
            return list(self._subgroups)
        subs = {self.generate([g]) for g in self.elements}
        frontier = set(subs)
        while frontier:
            new = set()
            for A in frontier:
                for B in list(subs):
                    if A <= B or B <= A:
                        continue
                    J = self.generate(A | B)
                    if J not in subs and J not in new:
                        new.add(J)
            subs |= new
            frontier = new
        self._subgroups = sorted(subs, key=lambda H: (len(H), sorted(H)))
        return list(self._subgroups)

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name}, order={self.order})"


# ---------------------------------------------------------------------------
# Constructors


def from_permutations(gens: Sequence[Sequence[int]], name: str = "G") -> FiniteGroup:
    """Permutation group generated by ``gens``; product (p q)(i) = q[p[i]] (apply p first)."""
    gens = [tuple(int(x) for x in g) for g in gens]
    if not gens:
        raise GroupError("need at least one generator")
    deg = len(gens[0])
    ident = tuple(range(deg))
    elems = [ident]
    index = {ident: 0}
    k = 0
    while k < len(elems):
        p = elems[k]
        for g in gens:
            q = tuple(g[p[i]] for i in range(deg))
            if q not in index:
                if len(elems) >= MAX_ORDER:
                    raise GroupError(f"{name}: generated group exceeds {MAX_ORDER} elements")
                index[q] = len(elems)
                elems.append(q)
        k += 1
    n = len(elems)
    table = np.empty((n, n), dtype=np.int64)
    for a, p in enumerate(elems):
        for b, q in enumerate(elems):
            table[a, b] = index[tuple(q[p[i]] for i in range(deg))]
    G = FiniteGroup(table, name=name, labels=[str(p) for p in elems])
    G.perms = elems
    return G


def cyclic(n: int) -> FiniteGroup:
    return from_permutations([[(i + 1) % n for i in range(n)]], name=f"C{n}")


def dihedral(n: int) -> FiniteGroup:
    """Symmetries of the n-gon (order 2n)."""
    rot = [(i + 1) % n for i in range(n)]
    ref = [(-i) % n for i in range(n)]
    return from_permutations([rot, ref], name=f"D{n}")


def symmetric(n: int) -> FiniteGroup:
    gens = [[1, 0] + list(range(2, n)), [(i + 1) % n for i in range(n)]] if n > 1 else [[0]]
    return from_permutations(gens, name=f"S{n}")


def alternating(n: int) -> FiniteGroup:
    gens = [[(i + 1) % 3 if i < 3 else i for i in range(n)]]
    for k in range(3, n):
        g = list(range(n))
        g[0], g[1], g[k] = g[1], g[k], g[0]
        gens.append(g)
    return from_permutations(gens, name=f"A{n}")


def direct_product(G: FiniteGroup, H: FiniteGroup, name: Optional[str] = None) -> FiniteGroup:
    n, m = G.order, H.order
    if n * m > MAX_ORDER:
        raise GroupError(f"product order {n * m} exceeds {MAX_ORDER}")
    a = np.arange(n * m)
    g, h = a // m, a % m
    table = G.table[g[:, None], g[None, :]] * m + H.table[h[:, None], h[None, :]]
    return FiniteGroup(table, name=name or f"{G.name}x{H.name}")


def catalog() -> Dict[str, FiniteGroup]:
    """Small groups used by the demos and randomized checks."""
    groups = [
        cyclic(2), cyclic(4), cyclic(6), symmetric(3), dihedral(4), direct_product(cyclic(2), cyclic(4), "Z2xZ4"),
        direct_product(cyclic(2), direct_product(cyclic(2), cyclic(2)), "Z2^3"), alternating(4), dihedral(6),
        symmetric(4), direct_product(symmetric(3), cyclic(4), "S3xZ4"), direct_product(dihedral(4), cyclic(2), "D4xZ2"),
        direct_product(symmetric(4), cyclic(2), "S4xZ2"),
    ]
    return {G.name: G for G in groups}


# ---------------------------------------------------------------------------
# Actions


@dataclass
class SectorAction:
    """Right action ``x . g = act[x, g]`` of a group on points 0..n_points-1."""

    group: FiniteGroup
    act: np.ndarray
    x0: int = 0
    name: str = "action"

    def __post_init__(self):
        self.act = np.asarray(self.act, dtype=np.int64)
        G = self.group
        if self.act.ndim != 2 or self.act.shape[1] != G.order:
            raise GroupError("action table must have shape (n_points, |G|)")
        n = self.act.shape[0]
        if self.act.min() < 0 or self.act.max() >= n:
            raise GroupError("action table entries must be point indices")
        if not np.array_equal(self.act[:, G.identity], np.arange(n)):
            raise GroupError(f"{self.name}: x . e != x")
        # (x . g) . h == x . (g h)
        lhs = self.act[self.act[:, :, None], np.arange(G.order)[None, None, :]]
        rhs = self.act[:, G.table]
        if not np.array_equal(lhs, rhs):
            raise GroupError(f"{self.name}: not a right action")
        if not 0 <= self.x0 < n:
            raise GroupError(f"x0={self.x0} outside 0..{n - 1}")

    @property
    def n_points(self) -> int:
        return self.act.shape[0]

    def apply(self, x: int, g: int) -> int:
        return int(self.act[x, g])

    def orbit(self, x: int, H: Iterable[int]) -> Subset:
        return frozenset(int(self.act[x, h]) for h in H)


def coset_action(G: FiniteGroup, H: Iterable[int], name: Optional[str] = None) -> SectorAction:
    """G on right cosets H g, (H x) . g = H (x g); x0 is the coset H itself, so G_x0 = H."""
    H = G.require_subgroup(H, "H")
    cosets: List[Subset] = []
    index: Dict[int, int] = {}
    for g in G.elements:
        if g in index:
            continue
        c = frozenset(G.mul(h, g) for h in H)
        for y in c:
            index[y] = len(cosets)
        cosets.append(c)
    act = np.empty((len(cosets), G.order), dtype=np.int64)
    for x, c in enumerate(cosets):
        rep = min(c)
        for g in G.elements:
            act[x, g] = index[G.mul(rep, g)]
    return SectorAction(G, act, x0=index[G.identity], name=name or f"{G.name}/H{len(H)}")


def trivial_action(G: FiniteGroup, n_points: int = 1) -> SectorAction:
    return SectorAction(G, np.tile(np.arange(n_points)[:, None], (1, G.order)), name="trivial")


def regular_action(G: FiniteGroup) -> SectorAction:
    """Right multiplication on G itself (free)."""
    return SectorAction(G, G.table.copy(), x0=G.identity, name="regular")


# ---------------------------------------------------------------------------
# Operations


def _check_point(action: SectorAction, x: int) -> int:
    if not 0 <= int(x) < action.n_points:
        raise GroupError(f"point {x} outside 0..{action.n_points - 1}")
    return int(x)


def stabilizer(action: SectorAction, x0: Optional[int] = None) -> Subset:
    """{g : x0 . g = x0}, verified closed."""
    x0 = _check_point(action, action.x0 if x0 is None else x0)
    H = frozenset(g for g in action.group.elements if action.act[x0, g] == x0)
    if not action.group.is_subgroup(H):
        raise GroupError("stabilizer failed closure check")
    return H


def second_conjugate(action: SectorAction, x: int, a: int, x0: Optional[int] = None) -> Subset:
    """Orbit of x under a^{-1} G_x0 a."""
    G = action.group
    x = _check_point(action, x)
    Gx0 = stabilizer(action, x0)
    ai = G.inv(a)
    return action.orbit(x, (G.mul(ai, h, a) for h in Gx0))


def relative_normalizer(G: FiniteGroup, R: Iterable[int], S: Iterable[int]) -> Subset:
    """N_G(R, S) = {g : g S g^{-1} in R}, returned as a plain set."""
    R = G.require_subgroup(R, "R")
    S = G.require_subgroup(S, "S")
    return frozenset(g for g in G.elements if G.conj(g, S) <= R)


def is_closed(G: FiniteGroup, A: Subset) -> bool:
    return all(G.mul(a, b) in A for a in A for b in A)


def absorption_check(action: SectorAction, a: int, S: Iterable[int], x0: Optional[int] = None) -> Dict[int, bool]:
    """{s: second_conjugate(x0 . s, a) == second_conjugate(x0, a)} for every s in S."""
    x0 = action.x0 if x0 is None else x0
    base = second_conjugate(action, x0, a, x0)
    return {int(s): second_conjugate(action, action.apply(x0, s), a, x0) == base for s in sorted(S)}


# ---------------------------------------------------------------------------
# Randomized instances


@dataclass
class Instance:
    group: str
    order: int
    action: str
    n_points: int
    R: List[int]
    S: List[int]
    a: int
    a_in_normalizer: bool
    normalizer_size: int
    normalizer_closed: bool
    absorbed: bool
    failures: List[int] = field(default_factory=list)


def random_instance(rng: np.random.Generator, groups: Optional[Dict[str, FiniteGroup]] = None, prefer_normalizer: float = 0.75) -> Instance:
    """Draw (group, coset action, R in G_x0, S, a) and evaluate it exhaustively.

    With probability ``prefer_normalizer`` R is biased towards subgroups with
    a non-empty N_G(R, S) and, independently, the background is drawn from
    N_G(R, S) when that set is non-empty; otherwise uniformly from G.
    """
    groups = catalog() if groups is None else groups
    name = sorted(groups)[int(rng.integers(len(groups)))]
    G = groups[name]
    subs = G.subgroups()
    H = subs[int(rng.integers(len(subs)))]
    action = coset_action(G, H)
    Gx0 = stabilizer(action)
    S = subs[int(rng.integers(len(subs)))]
    R_choices = [K for K in subs if K <= Gx0]
    if rng.random() < prefer_normalizer:
        # bias towards R that admits some background
        useful = [K for K in R_choices if any(G.conj(g, S) <= K for g in G.elements)]
        R_choices = useful or R_choices
    R = R_choices[int(rng.integers(len(R_choices)))]
    N = relative_normalizer(G, R, S)
    if N and rng.random() < prefer_normalizer:
        Ns = sorted(N)
        a = Ns[int(rng.integers(len(Ns)))]
    else:
        a = int(rng.integers(G.order))
    verdict = absorption_check(action, a, S)
    return Instance(
        group=name, order=G.order, action=action.name, n_points=action.n_points,
        R=sorted(R), S=sorted(S), a=a, a_in_normalizer=a in N, normalizer_size=len(N),
        normalizer_closed=is_closed(G, N) if N else True, absorbed=all(verdict.values()),
        failures=[s for s, ok in verdict.items() if not ok],
    )


def sufficiency_scan(n_instances: int = 200, seed: int = 0, groups: Optional[Dict[str, FiniteGroup]] = None) -> Dict[str, object]:
    """Randomized test of 'a in N_G(R, S) implies absorption' with recorded failures outside N."""
    rng = np.random.default_rng(seed)
    groups = catalog() if groups is None else groups
    instances = [random_instance(rng, groups) for _ in range(n_instances)]
    in_N = [x for x in instances if x.a_in_normalizer]
    counter = [x for x in in_N if not x.absorbed]
    outside_fail = [x for x in instances if not x.a_in_normalizer and not x.absorbed]
    return {
        "n_instances": len(instances),
        "n_in_normalizer": len(in_N),
        "counterexamples": [x.__dict__ for x in counter],
        "n_outside_failures": len(outside_fail),
        "outside_failure_example": outside_fail[0].__dict__ if outside_fail else None,
        "n_normalizer_not_closed": sum(not x.normalizer_closed for x in instances),
        "max_order": max(x.order for x in instances),
        "instances": [x.__dict__ for x in instances],
        "passed": bool(not counter and outside_fail),
    }


def find_failure_witness(G: FiniteGroup) -> Optional[Dict[str, object]]:
    """Smallest (H, S, s) with a = e where S meets nothing of G_x0 = H but s moves x0 and absorption fails."""
    for H in G.subgroups():
        action = coset_action(G, H)
        Gx0 = stabilizer(action)
        for S in G.subgroups():
            if len(S & Gx0) != 1:
                continue
            verdict = absorption_check(action, G.identity, S)
            bad = [s for s, ok in verdict.items() if not ok]
            if bad:
                return {"H": sorted(H), "S": sorted(S), "s": bad[0], "a": G.identity,
                        "in_normalizer": G.identity in relative_normalizer(G, sorted(Gx0), S)}
    return None
