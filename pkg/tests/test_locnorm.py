import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import spherical_jn

from infravac.bounds import scaling_fit
from infravac.errors import AlignmentError
from infravac.grid import GridConfig, build_grid
from infravac.kpr import KprMap
from infravac.locnorm import (
    BasisData,
    LocalizationOps,
    antisymmetry_defect,
    ay_direct_check,
    commutation_defect,
    condition1_check,
    condition2_check,
    covariance_fock,
    covariance_gram,
    cut_projector_norms,
    lower_bound_scan,
    majorant_partial,
    majorant_tail,
    majorant_total,
    metric_gram,
)
from infravac.symp import TestFunctionPair, bump_profile, localized_basis, random_pair


def _oversampled_transform(k, q, power=6, n_panels=40):
    """sqrt(2/pi) int_0^1 s^(2q) (1-s^2)^power j_0(ks) s^2 ds on a dense composite rule."""
    x, w = np.polynomial.legendre.leggauss(40)
    edges = np.linspace(0, 1, n_panels + 1)
    s = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    prof = s ** (2 * q) * (1 - s * s) ** power
    return math.sqrt(2 / math.pi) * (spherical_jn(0, np.outer(k, s)) @ (ws * s * s * prof))


def _k_rule(k_max=80.0, n_panels=400):
    x, w = np.polynomial.legendre.leggauss(24)
    edges = np.linspace(0, k_max, n_panels + 1)
    k = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    wk = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return k, wk


# --- majorant series ------------------------------------------------------


def test_majorant_total():
    assert abs(majorant_total(1.0) - 212 / 27) <= 1e-8
    assert abs(majorant_total(2.0) - 4 * 212 / 27) <= 1e-8
    brute = sum((i + 1) ** 2 * 4.0 ** (-(i - 1)) for i in range(1, 200))
    assert abs(brute - 212 / 27) <= 1e-12


@pytest.mark.parametrize("N", [0, 1, 3, 7, 15])
def test_majorant_tail_closed_form(N):
    assert abs(majorant_partial(1.0, N) + majorant_tail(1.0, N) - 212 / 27) <= 1e-12
    brute = sum((i + 1) ** 2 * 4.0 ** (-(i - 1)) for i in range(N + 1, N + 200))
    assert abs(majorant_tail(1.0, N) - brute) <= 1e-12 * max(1.0, brute)


# --- localization operators -----------------------------------------------


def test_localization_ops(grid, loc):
    assert loc.plateau_defect <= 1e-10
    assert loc.check_truncation() <= 1e-4
    norms = loc.norms()
    assert all(np.isfinite(v) for v in norms.values())
    assert norms["chi_r"] <= 1 + 1e-8
    # chi_2r is the adjoint of chi_1r in orthonormal coordinates
    assert np.allclose(loc.block("chi2", 3), loc.block("chi1", 3).T)
    with pytest.raises(AlignmentError):
        LocalizationOps(grid, 0.7)


# --- Gram matrices ---------------------------------------------------------


def test_metric_gram_identity_vs_quadrature(grid):
    s = grid.r_nodes
    G = TestFunctionPair(grid, {(0, 0): bump_profile(s, 1.0, 0, 0)}, {(0, 0): bump_profile(s, 1.0, 0, 1)}, 1.0)
    m = metric_gram(None, [G])[0, 0].real
    k, wk = _k_rule()
    a, b = _oversampled_transform(k, 0), _oversampled_transform(k, 1)
    ref = np.sum(wk * (a * a * k + b * b * k**3))
    assert abs(m - ref) <= 1e-6 * ref


def test_vacuum_covariance_vs_quadrature(grid):
    s = grid.r_nodes
    G = TestFunctionPair(grid, {(0, 0): bump_profile(s, 1.0, 0, 0)}, {(0, 0): 1j * bump_profile(s, 1.0, 0, 1)}, 1.0)
    S = covariance_gram(None, [G])["S"][0, 0]
    k, wk = _k_rule()
    a, b = _oversampled_transform(k, 0), _oversampled_transform(k, 1)
    # f = F1 + i F2 = a/sqrt(k) - b sqrt(k)
    ref = 0.5 * np.sum(wk * k * k * (a / np.sqrt(k) - b * np.sqrt(k)) ** 2)
    assert abs(S.imag) <= 1e-10 * abs(S)
    assert abs(S.real - ref) <= 1e-6 * ref


@pytest.fixture(scope="module")
def basis_data(grid):
    return BasisData.from_basis(localized_basis(grid, 1.0, ell_cut=3, n_radial=4), 1.0)


def test_metric_gram_positive_and_hermitian(kmap, basis_data):
    for T in (None, kmap):
        g = metric_gram(T, basis_data)
        assert np.max(np.abs(g - g.conj().T)) <= 1e-12 * np.max(np.abs(g))
        assert np.linalg.eigvalsh(g)[0] > 0


def test_covariance_identities(kmap, basis_data):
    cov = covariance_gram(kmap, basis_data)
    S, sig = cov["S"], cov["sigma"]
    norms = np.sqrt(np.real(np.diag(metric_gram(None, basis_data))))
    assert np.all(np.real(np.diag(S)) >= -1e-10 * norms**2)
    defect = antisymmetry_defect(S, sig)
    assert np.all(defect <= 1e-8 * np.outer(norms, norms))
    # agrees with the Fock-space route 1/2 <f, f'>
    fock = covariance_fock(kmap, basis_data)
    assert np.max(np.abs(fock - S)) <= 1e-10 * np.max(np.abs(S))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_covariance_positive_random(small_grid, seed):
    rng = np.random.default_rng(seed)
    T = KprMap(small_grid, 5)
    pairs = [random_pair(small_grid, 1.0, rng, ell_cut=3, real=False) for _ in range(4)]
    S = covariance_gram(T, pairs)["S"]
    assert np.max(np.abs(S - S.conj().T)) <= 1e-10 * np.max(np.abs(S))
    assert np.linalg.eigvalsh(S)[0] >= -1e-10 * np.max(np.abs(S))


# --- condition 1 -----------------------------------------------------------


def test_condition1_identity(grid, loc):
    c = condition1_check(KprMap(grid, 1), 1.0, loc)
    assert c == {1: (1.0, 1.0), 2: (1.0, 1.0)}


def test_condition1_kpr(kmap, loc, normality):
    c = condition1_check(kmap, 1.0, loc)
    assert c[1][0] > 0 and c[2][0] > 0
    assert c[2][0] >= 1 - 1e-8
    assert np.isfinite(c[1][1]) and np.isfinite(c[2][1])
    for key in ("c_lower_1", "c_lower_2", "c_upper_1", "c_upper_2"):
        assert normality.drift[key] <= 0.02


def test_lower_bound_scan(kmap, loc):
    scan = lower_bound_scan(kmap, 1.0, N_range=range(1, 11), loc=loc)
    rows = scan["rows"]
    assert rows[9]["inv_N2"] == 0.01
    tails = [row["tail"] for row in rows]
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    assert scan["first_positive_N"] is not None


def test_cut_projector_scaling(kmap, loc):
    i = np.arange(1, kmap.grid.n_bands + 1)
    eps = 2.0 ** (-(i - 1.0))
    sel = (i >= 3) & (i <= 9)
    q1 = cut_projector_norms(kmap, 1.0, 1, loc)
    q2 = cut_projector_norms(kmap, 1.0, 2, loc)
    # the operator norm falls like eps^2 for j = 1 and at least that fast for j = 2
    assert abs(scaling_fit(eps[sel], q1[sel])[0] - 2.0) <= 0.15
    assert scaling_fit(eps[sel], q2[sel])[0] >= 2.0 - 0.15
    # the (i+1)^2 eps^2 majorant dominates with a constant fixed at the first band
    for q in (q1, q2):
        ratio = q / ((i + 1) ** 2 * eps**2)
        assert np.all(ratio <= ratio[0] * (1 + 1e-12))


def test_commutation_identity(kmap, loc):
    for j in (1, 2):
        assert commutation_defect(kmap, 1.0, j, loc)["localized"] <= 1e-8


# --- condition 2 -----------------------------------------------------------


def test_condition2_identity(grid, loc):
    c = condition2_check(KprMap(grid, 1), 1.0, loc=loc)
    assert c[1]["total"] == 0.0 and c[2]["total"] == 0.0


def test_condition2_kpr(kmap, loc, normality):
    c = condition2_check(kmap, 1.0, loc=loc)
    for j in (1, 2):
        assert abs(c[j]["total_svd"] - c[j]["total"]) <= 1e-8 * c[j]["total"]
        tails = np.array(c[j]["tails"])
        assert np.all(np.diff(tails) <= 0)
        assert c[j]["decay_exponent"] >= 0.5
        assert normality.drift[f"trace_{j}"] <= 0.02


# --- direct check ----------------------------------------------------------


def test_ay_direct_identity(grid):
    basis = localized_basis(grid, 1.0, ell_cut=2, n_radial=4, power=2)
    rep = ay_direct_check(None, 1.0, basis)
    assert rep["hs_sqrt_diff"] <= 1e-10
    assert rep["trace_norm_diff"] <= 1e-10
    rep1 = ay_direct_check(KprMap(grid, 1), 1.0, basis)
    assert rep1["hs_sqrt_diff"] <= 1e-10


def test_normality_report(normality):
    assert normality.passed, normality.verdicts
    assert np.isfinite(normality.hs_sqrt_diff) and normality.hs_sqrt_diff > 0
    assert normality.drift["hs_basis"] <= 0.05
    assert normality.gram_min_eig > 0
    d = normality.to_dict()
    assert set(d["c_r_lower"]) == {"1", "2"}
