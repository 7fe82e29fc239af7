"""Acceptance suite on the default grid (kappa = 1, 10 bands, 16 points per band, ell_max = 14, r = 1).

Every criterion prints one ``criterion N: PASS|FAIL`` line, both inline
(visible with ``-s``) and in the terminal summary.
"""

import math

import numpy as np
import pytest
from scipy import linalg

from infravac import cache as ivcache
from infravac.cli import dumps, run
from infravac.config import RunConfig
from infravac.kpr import algebra_check
from infravac.locnorm import (
    BasisData,
    antisymmetry_defect,
    ay_direct_check,
    covariance_fock,
    covariance_gram,
    majorant_total,
    metric_gram,
)
from infravac.sectors import MAX_ORDER, sufficiency_scan
from infravac.symp import LN2, coherent_vector, ir_contrast, localized_basis, position_symplectic


def record(log, number, title, checks):
    """checks: list of (label, ok, detail)."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{label} {'ok' if good else 'FAILED'} ({info})" for label, good, info in checks)
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    log[number] = line
    print(line)
    assert ok, line


def test_criterion_01_exact_algebra(kmap, acceptance_log):
    alg = algebra_check(kmap)
    ranks = [(row["rank"], row["expected_rank"]) for row in alg["projectors"]]
    record(acceptance_log, 1, "exact algebra", [
        ("T1 T2 = I", alg["T1T2_residual"] <= 1e-10, f"residual {alg['T1T2_residual']:.2e}"),
        ("Q_i projectors", alg["projector_defect"] <= 1e-12, f"defect {alg['projector_defect']:.2e}"),
        ("rank Q_i = (i+1)^2", alg["ranks_ok"] and len(ranks) == kmap.n, f"ranks {[r for r, _ in ranks]}"),
    ])


def test_criterion_02_analytic_values(grid, kmap, acceptance_log):
    alg = algebra_check(kmap)
    w = {(0, 0): 0.6, (2, 1): -0.8, (4, -3): 0.5}
    v = coherent_vector(w, grid.kappa, grid)
    rows = ir_contrast(v, kmap, len(v.bands))
    wn = sum(c * c for c in w.values())
    cum = max(abs(row["cumulative_v"] - m * LN2 * wn) for m, row in enumerate(rows, start=1))
    inc = max(abs(row["increment_v"] - LN2 * wn) for row in rows)
    spec = abs(alg["inf_spec_T1_sq"] - kmap.n**-2)
    record(acceptance_log, 2, "analytic values", [
        ("||xi_i||^2 = ln 2", alg["band_norm_defect"] <= 1e-8 and len(alg["band_norm_sq"]) == grid.n_bands,
         f"max defect {alg['band_norm_defect']:.2e} over {len(alg['band_norm_sq'])} bands"),
        ("inf spec T1^2 = n^-2", spec <= 1e-10, f"defect {spec:.2e}"),
        ("cumulative ||v||^2", max(cum, inc) <= 1e-8, f"max defect {max(cum, inc):.2e}"),
    ])


def test_criterion_03_infravacuum(infravacuum, acceptance_log):
    rep = infravacuum
    target = math.pi**2 / 6 * LN2
    rel = abs(rep["t1v_norm_sq"] - target) / target
    record(acceptance_log, 3, "infravacuum pairing", [
        ("pairing residual (50 F2)", rep["pairing_residual"] <= 1e-8, f"{rep['pairing_residual']:.2e}"),
        ("||T1 v||^2 vs (pi^2/6) ln 2", rel <= 0.01,
         f"{rep['t1v_norm_sq']:.6f} vs {target:.6f}, tail {rep['t1v_tail']:.2e}, rel {rel:.2e}"),
    ])


def test_criterion_04_symplectic(infravacuum, acceptance_log):
    d = infravacuum["symplectic_defect"]
    record(acceptance_log, 4, "symplectic preservation", [
        ("100 random pairs", d <= 1e-8, f"max relative defect {d:.2e}"),
    ])


def _position_gram(basis):
    """<G_a, G_b> in L^2 x L^2 on the r-quadrature."""
    w = basis[0].grid.r_weights

    def part(a, b):
        return sum(float(np.sum(w * a[k] * b[k])) for k in set(a) & set(b))

    return np.array([[part(a.G1, b.G1) + part(a.G2, b.G2) for b in basis] for a in basis])


def test_criterion_05_covariance(grid, kmap, acceptance_log):
    basis = localized_basis(grid, 1.0, ell_cut=4, n_radial=4)
    data = BasisData.from_basis(basis, 1.0)
    S = covariance_gram(kmap, data)["S"]
    P = _position_gram(basis)
    norms = np.sqrt(np.diag(P))
    # S_T(G,G) over the whole span: generalized eigenvalues of (S_T, position Gram)
    pos = float(linalg.eigh(0.5 * (S + S.conj().T), P, eigvals_only=True)[0])
    # antisymmetry with S_T from the Fock route and sigma computed in position space
    S_fock = covariance_fock(kmap, data)
    sigma = np.array([[position_symplectic(a, b) for b in basis] for a in basis])
    anti = float(np.max(antisymmetry_defect(S_fock, sigma) / np.outer(norms, norms)))
    g = metric_gram(kmap, data)
    ev = np.linalg.eigvalsh(g)
    record(acceptance_log, 5, "covariance identities", [
        ("S_T(G,G) >= -1e-10 ||G||^2 on the span", pos >= -1e-10, f"min S_T(G,G)/||G||^2 {pos:.3e}"),
        ("antisymmetry identity", anti <= 1e-8, f"max relative defect {anti:.2e}"),
        ("(.|.)_T Gram positive definite", ev[0] > 0,
         f"eigenvalues in [{ev[0]:.3e}, {ev[-1]:.3e}], {len(basis)} elements"),
    ])


def test_criterion_06_condition1(normality, acceptance_log):
    rep = normality
    drift = max(rep.drift[k] for k in ("c_lower_1", "c_lower_2", "c_upper_1", "c_upper_2"))
    N = rep.lower_bound["first_positive_N"]
    record(acceptance_log, 6, "norm equivalence (condition 1)", [
        ("c_lower > 0", rep.c_r_lower[1] > 0 and rep.c_r_lower[2] > 0,
         f"c_lower = {rep.c_r_lower[1]:.4f}, {rep.c_r_lower[2]:.4f}"),
        ("refinement drift <= 2%", drift <= 0.02, f"max drift {drift:.2e}"),
        ("j = 2 lower extremum >= 1", rep.c_r_lower[2] >= 1 - 1e-8, f"{rep.c_r_lower[2]:.10f}"),
        ("lower-bound scan margin", N is not None, f"first N with positive margin {N}"),
    ])


def test_criterion_07_condition2(normality, acceptance_log):
    rep = normality
    checks = []
    for j in (1, 2):
        partials = np.array(rep.trace_partials[j])
        tails = partials[-1] - partials
        cauchy = bool(np.all(np.diff(partials) >= 0) and np.all(np.diff(tails) <= 0))
        checks.append((f"K_{j} partial sums Cauchy", cauchy, f"total {partials[-1]:.4e}"))
        checks.append((f"K_{j} tail exponent >= 0.5", rep.trace_decay[j] >= 0.5, f"{rep.trace_decay[j]:.3f} per band"))
        drift = rep.drift[f"trace_{j}"]
        checks.append((f"K_{j} total refinement drift", drift <= 0.02, f"{drift:.2e}"))
    series = sum((i + 1) ** 2 * 4.0 ** (-(i - 1)) for i in range(1, 400))
    maj = majorant_total(1.0)
    checks.append(("majorant 212/27", abs(maj - 212 / 27) <= 1e-8 and abs(series - 212 / 27) <= 1e-8,
                   f"closed form {maj:.12f}, series {series:.12f}"))
    record(acceptance_log, 7, "trace class (condition 2)", checks)


def test_criterion_08_direct(grid, normality, acceptance_log):
    rep = normality
    ident = ay_direct_check(None, 1.0, localized_basis(grid, 1.0, 4, 6, 2))["hs_sqrt_diff"]
    drift = rep.drift["hs_basis"]
    record(acceptance_log, 8, "direct Hilbert-Schmidt check", [
        ("HS norm finite", bool(np.isfinite(rep.hs_sqrt_diff) and np.isfinite(rep.hs_sqrt_diff_large)),
         f"{rep.hs_sqrt_diff:.5f} / {rep.hs_sqrt_diff_large:.5f}"),
        ("basis-size drift <= 5%", drift <= 0.05, f"{drift:.2e}"),
        ("zero for T = id", ident <= 1e-10, f"{ident:.1e}"),
    ])


def test_criterion_09_scalings(smoothing, acceptance_log):
    rep = smoothing
    sl = rep.slopes[0]
    nominal = (1, 1, 2, 2)
    slopes_ok = all(abs(s - p) <= 0.15 for s, p in zip(sl, nominal))
    C, Cp = rep.schur_slopes["C"], rep.schur_slopes["C_prime"]
    dom = [d["bound"] >= d["realized"] for d in rep.domination]
    ratio = min(d["bound"] / d["realized"] for d in rep.domination)
    record(acceptance_log, 9, "smoothing scalings", [
        ("four norm slopes (i = 3..9)", slopes_ok and rep.fit_bands == list(range(3, 10)),
         "slopes " + ", ".join(f"{s:.3f}" for s in sl)),
        ("Schur C slope 5/2", abs(C - 2.5) <= 0.2, f"{C:.3f}"),
        ("Schur C' slope -1/2", abs(Cp + 0.5) <= 0.2, f"{Cp:.3f}"),
        ("Schur bound dominates", all(dom), f"{len(dom)} cases, min bound/realized {ratio:.3f}"),
    ])


def test_criterion_10_sectors(acceptance_log):
    scan = sufficiency_scan(n_instances=300, seed=0)
    ex = scan["outside_failure_example"]
    record(acceptance_log, 10, "sector model", [
        (">= 200 instances, |G| <= 64", scan["n_instances"] >= 200 and scan["max_order"] <= MAX_ORDER,
         f"{scan['n_instances']} instances, max order {scan['max_order']}"),
        ("zero counterexamples", not scan["counterexamples"],
         f"{scan['n_in_normalizer']} with a in N_G(R,S), {len(scan['counterexamples'])} counterexamples"),
        ("failure outside N_G(R,S) recorded", ex is not None,
         f"{scan['n_outside_failures']} failures, e.g. {ex['group']} a={ex['a']} s={ex['failures'][:1]}" if ex else "none"),
    ])


def test_criterion_11_reproducibility(grid, kmap, tmp_path, acceptance_log):
    cfg = RunConfig(cache=str(tmp_path / "cache"))
    texts = []
    for _ in range(2):
        code, report, _, _ = run("kpr-build", cfg)
        texts.append(dumps(report).encode())
    texts_inf = [dumps(run("check-infravacuum", cfg)[1]).encode() for _ in range(2)]
    exact = True
    for j in (1, 2):
        op = kmap.operator(j)
        back = ivcache.decode(ivcache.encode(op, grid.fingerprint), grid)
        exact &= all(a.dtype == b.dtype and np.array_equal(a, b) for a, b in zip(op.blocks, back.blocks))
    record(acceptance_log, 11, "reproducibility", [
        ("byte-identical reports", texts[0] == texts[1] and texts_inf[0] == texts_inf[1],
         f"{len(texts[0])} and {len(texts_inf[0])} bytes"),
        ("cache roundtrip bit-exact", exact, "T1, T2 on the default grid"),
    ])
