import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infravac.errors import GroupError
from infravac.sectors import (
    MAX_ORDER,
    FiniteGroup,
    SectorAction,
    absorption_check,
    alternating,
    catalog,
    coset_action,
    cyclic,
    dihedral,
    direct_product,
    find_failure_witness,
    from_permutations,
    is_closed,
    random_instance,
    regular_action,
    relative_normalizer,
    second_conjugate,
    stabilizer,
    sufficiency_scan,
    symmetric,
    trivial_action,
)

CATALOG = catalog()


# --- groups -----------------------------------------------------------------


def test_catalog_orders_and_subgroup_counts():
    orders = {name: G.order for name, G in CATALOG.items()}
    assert orders["S4"] == 24 and orders["D4"] == 8 and orders["S4xZ2"] == 48
    assert all(o <= MAX_ORDER for o in orders.values())
    # classical subgroup counts
    assert len(symmetric(3).subgroups()) == 6
    assert len(dihedral(4).subgroups()) == 10
    assert len(symmetric(4).subgroups()) == 30
    assert len(alternating(4).subgroups()) == 10


def test_group_errors():
    with pytest.raises(GroupError):
        FiniteGroup(np.array([[0, 1], [1, 1]]))  # no inverse for 1
    with pytest.raises(GroupError):
        symmetric(5)  # order 120 exceeds the cap
    G = symmetric(3)
    non_sub = frozenset({G.identity, next(g for g in G.elements if G.mul(g, g) != G.identity)})
    with pytest.raises(GroupError):
        G.require_subgroup(non_sub)
    with pytest.raises(GroupError):
        coset_action(G, non_sub)
    with pytest.raises(GroupError):
        stabilizer(regular_action(G), x0=99)


def test_action_validation():
    G = cyclic(3)
    bad = np.array([[0, 0, 0], [1, 2, 0], [2, 0, 1]])
    with pytest.raises(GroupError):
        SectorAction(G, bad)


def test_direct_product():
    P = direct_product(cyclic(2), cyclic(4))
    assert P.order == 8
    assert all(P.mul(a, b) == P.mul(b, a) for a in P.elements for b in P.elements)


# --- stabilizers ------------------------------------------------------------


def test_stabilizer_examples():
    G = symmetric(3)
    assert stabilizer(trivial_action(G)) == frozenset(G.elements)
    assert stabilizer(regular_action(G)) == frozenset({G.identity})
    for H in G.subgroups():
        if len(H) == 2:
            assert stabilizer(coset_action(G, H)) == H


# --- second conjugate classes ----------------------------------------------


def _brute_orbit(action, x, gens):
    seen, todo = {x}, [x]
    while todo:
        y = todo.pop()
        for g in gens:
            z = action.apply(y, g)
            if z not in seen:
                seen.add(z)
                todo.append(z)
    return frozenset(seen)


def test_second_conjugate_identity_background():
    G = dihedral(4)
    H = next(K for K in G.subgroups() if len(K) == 2)
    act = coset_action(G, H)
    for x in range(act.n_points):
        assert second_conjugate(act, x, G.identity) == act.orbit(x, stabilizer(act))
    for a in stabilizer(act):
        assert act.x0 in second_conjugate(act, act.x0, a)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(CATALOG)), data=st.data())
def test_second_conjugate_vs_brute_force(name, data):
    G = CATALOG[name]
    subs = G.subgroups()
    H = subs[data.draw(st.integers(0, len(subs) - 1))]
    act = coset_action(G, H)
    x = data.draw(st.integers(0, act.n_points - 1))
    a = data.draw(st.integers(0, G.order - 1))
    gens = [G.mul(G.inv(a), h, a) for h in stabilizer(act)]
    assert second_conjugate(act, x, a) == _brute_orbit(act, x, gens)


# --- relative normalizer ----------------------------------------------------


def test_relative_normalizer_examples():
    G = symmetric(3)
    full = frozenset(G.elements)
    A3 = next(K for K in G.subgroups() if len(K) == 3)
    for R in G.subgroups():
        assert relative_normalizer(G, R, {G.identity}) == full
    for S in G.subgroups():
        assert relative_normalizer(G, full, S) == full
    assert relative_normalizer(G, A3, A3) == full
    with pytest.raises(GroupError):
        relative_normalizer(G, {0, 1, 2, 3}, A3)


def test_relative_normalizer_may_be_open():
    # N_G(R, S) is a union of cosets, not necessarily a subgroup; record that it happens
    scan = sufficiency_scan(n_instances=120, seed=7)
    assert scan["n_normalizer_not_closed"] > 0


# --- absorption -------------------------------------------------------------


def test_absorption_inside_stabilizer():
    for name in ("S3", "D4", "Z2xZ4"):
        G = CATALOG[name]
        for H in G.subgroups():
            act = coset_action(G, H)
            Gx0 = stabilizer(act)
            assert all(absorption_check(act, G.identity, Gx0).values())


def test_absorption_exhaustive_small_groups():
    for name in ("S3", "D4", "Z2xZ4"):
        G = CATALOG[name]
        for H in G.subgroups():
            act = coset_action(G, H)
            Gx0 = stabilizer(act)
            for S in G.subgroups():
                for a in relative_normalizer(G, Gx0, S):
                    assert all(absorption_check(act, a, S).values()), (name, sorted(H), sorted(S), a)


def test_failure_witness():
    w = find_failure_witness(symmetric(3))
    assert w is not None and not w["in_normalizer"]
    G = symmetric(3)
    act = coset_action(G, w["H"])
    assert not absorption_check(act, w["a"], w["S"])[w["s"]]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_normalizer_implies_absorption(seed):
    inst = random_instance(np.random.default_rng(seed))
    if inst.a_in_normalizer:
        assert inst.absorbed, inst


def test_sufficiency_scan():
    scan = sufficiency_scan(n_instances=200, seed=0)
    assert scan["n_instances"] == 200
    assert scan["counterexamples"] == []
    assert scan["n_in_normalizer"] > 0
    assert scan["outside_failure_example"] is not None
    assert scan["max_order"] <= MAX_ORDER
    assert scan["passed"]


def test_is_closed():
    G = symmetric(3)
    assert is_closed(G, frozenset(G.elements))
    assert is_closed(G, frozenset({G.identity}))
    t = next(g for g in G.elements if g != G.identity and G.mul(g, g) == G.identity)
    u = next(g for g in G.elements if g not in (G.identity, t) and G.mul(g, g) == G.identity)
    assert not is_closed(G, frozenset({G.identity, t, u}))


def test_from_permutations_composition_order():
    # apply p first, then q
    G = from_permutations([[1, 0, 2], [0, 2, 1]], name="S3")
    assert G.order == 6
