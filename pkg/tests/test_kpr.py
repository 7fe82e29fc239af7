import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infravac.errors import ConfigError
from infravac.grid import GridConfig, SectorVector, build_grid
from infravac.kpr import KprMap, algebra_check, band_norm_sq, build_T, kpr_band, projector_Q
from infravac.oper import SectorOperator, apply, compose, norm


def test_kpr_band_values(grid):
    eps, b, xi = kpr_band(1.0, 3, grid)
    assert eps == 0.25 and b == pytest.approx(1 / 3)
    assert kpr_band(1.0, 1, grid)[1] == 1.0
    # normalized in the quadrature norm, supported exactly on the band
    assert np.sum(grid.k_weights * xi**2) == pytest.approx(1.0, abs=1e-14)
    assert np.all(xi[~grid.band_mask(3)] == 0)


def test_band_norms_ln2(grid):
    for i in range(1, grid.n_bands + 1):
        assert abs(band_norm_sq(1.0, i, grid) - math.log(2)) <= 1e-8


def test_band_norm_independent_of_kappa():
    g = build_grid(GridConfig(kappa=2.0, n_bands=6, pts_per_band=12, k_max=20.0, ell_max=4, r_pts=96))
    for i in range(1, 7):
        assert abs(band_norm_sq(2.0, i, g) - math.log(2)) <= 1e-8


def test_unresolved_band(grid):
    with pytest.raises(IndexError):
        kpr_band(1.0, grid.n_bands + 1, grid)
    with pytest.raises(IndexError):
        kpr_band(1.0, 0, grid)


def test_projectors(small_grid):
    g = small_grid
    Qs = {i: projector_Q(i, g) for i in range(1, 6)}
    for i, Q in Qs.items():
        assert norm(compose(Q, Q) - Q) <= 1e-12
        assert norm(Q - Q.adjoint()) <= 1e-12
        assert round(norm(Q, "trace")) == (i + 1) ** 2
        for j, P in Qs.items():
            if j != i:
                assert norm(compose(Q, P)) <= 1e-12
    with pytest.raises(ConfigError):
        projector_Q(g.ell_max + 1, g)


def test_map_validation(small_grid):
    with pytest.raises(ConfigError):
        KprMap(small_grid, small_grid.ell_max + 1)
    with pytest.raises(ConfigError):
        KprMap(small_grid, 0)


def test_identity_map(small_grid):
    T = KprMap.identity(small_grid)
    assert T.is_identity
    for j in (1, 2):
        assert all(b.ndim == 1 and np.all(b == 1.0) for b in T.operator(j).blocks)


def test_algebra_default(kmap):
    alg = algebra_check(kmap)
    assert alg["T1T2_residual"] <= 1e-10
    assert alg["projector_defect"] <= 1e-12
    assert alg["ranks_ok"]
    assert abs(alg["inf_spec_T1_sq"] - 1 / 64) <= 1e-10


def test_inf_spec_n10(grid):
    T = KprMap(grid, 10)
    sq = T.operator(1, squared=True)
    bottom = min(np.linalg.eigvalsh(b)[0] for b in sq.blocks if b.ndim == 2)
    assert abs(bottom - 0.01) <= 1e-10


def test_self_adjoint_and_real(kmap):
    for j in (1, 2):
        T = kmap.operator(j)
        assert norm(T - T.adjoint()) <= 1e-12
        assert all(not np.iscomplexobj(b) for b in T.blocks)


def test_spectrum_of_square(small_grid):
    n = 5
    T = KprMap(small_grid, n)
    sq = T.operator(1, squared=True)
    evs = []
    for ell, b in enumerate(sq.blocks):
        ev = np.linalg.eigvalsh(b) if b.ndim == 2 else b
        evs.extend(list(ev) * (2 * ell + 1))
    evs = np.array(evs)
    for i in range(2, n + 1):
        assert int(np.sum(np.isclose(evs, 1 / i**2, atol=1e-10))) == (i + 1) ** 2
    distinct = {1.0} | {1 / i**2 for i in range(2, n + 1)}
    assert all(min(abs(e - d) for d in distinct) <= 1e-10 for e in evs)


def test_duality(small_grid, rng):
    g = small_grid
    T = KprMap(g, 5)
    worst = 0.0
    for _ in range(100):
        f1 = SectorVector(g, {k: rng.standard_normal(g.nk) for k in [(0, 0), (2, 1), (4, -3)]})
        f2 = SectorVector(g, {k: rng.standard_normal(g.nk) for k in [(0, 0), (2, 1), (5, 0)]})
        lhs = apply(T.operator(1), f1).inner(apply(T.operator(2), f2))
        worst = max(worst, abs(lhs - f1.inner(f2)) / (f1.norm() * f2.norm()))
    assert worst <= 1e-10


def test_bandwise_matches_dense(small_grid, rng):
    g = small_grid
    T = KprMap(g, 4)
    v = SectorVector(g, {(1, 0): rng.standard_normal(g.nk), (3, 2): rng.standard_normal(g.nk)})
    for j in (1, 2):
        for sq in (False, True):
            a = apply(T.operator(j, sq), v)
            b = T.apply_bandwise(j, v, sq)
            assert (a - b).norm() <= 1e-12 * v.norm()


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 6), j=st.sampled_from([1, 2]))
def test_T_inverse_pair_property(small_grid, n, j):
    T = KprMap(small_grid, n)
    eye = SectorOperator.identity(small_grid.sqrt_w, small_grid.ell_max)
    assert norm(compose(T.operator(j), T.operator(3 - j)) - eye) <= 1e-10


def test_strong_stabilization(grid):
    # ||(T_{1,n+1} - T_{1,n}) f|| for a fixed f with finite band weights decays like |1 - b_{n+1}| |<xi_{n+1}, f>|
    f = SectorVector(grid, {(0, 0): np.exp(-grid.k_nodes)})
    diffs = []
    prev = KprMap(grid, 2).apply_bandwise(1, f)
    for n in range(3, 11):
        cur = KprMap(grid, n).apply_bandwise(1, f)
        diffs.append((cur - prev).norm())
        prev = cur
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    # the band weight of f is ~ eps^{3/2}, so successive differences shrink by about 2^{-3/2}
    ratios = np.array(diffs[1:]) / np.array(diffs[:-1])
    assert np.all(ratios < 0.5)
