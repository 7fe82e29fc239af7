"""Local normality checks for quasi-free representations built from a KPR map.

Two routes are implemented and cross-reported:

* sufficient conditions on the one-particle level (norm equivalence of the
  localized forms, trace class of ``K_{j,r}``);
* the Araki-Yamagami conditions checked directly on a finite basis of
  localized test functions (metric equivalence and Hilbert-Schmidt
  difference of covariance square roots).

Localization operators (orthonormal sector coordinates)::

    chi_1r  = mu^{-1/2} chi mu^{1/2}     chi_2r  = mu^{1/2} chi mu^{-1/2} = chi_1r^*
    chi0_1r = chi mu^{-1/2}              chi0_2r = chi mu^{1/2}

Covariance on test-function pairs, with F = F(G)::

    (G|G')_T = <F1, T1^2 F1'> + <F2, T2^2 F2'>
    S_T(G,G') = 1/2 [ (G|G')_T + i sigma(G,G') ] = 1/2 <f, f'>,   f = T1 F1 + i T2 F2
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import AlignmentError, ConfigError, NotPSDError, NumericalError
from .grid import GridConfig, SectorGrid, build_grid, mult_radial, radial_mult_block, sb_transform, smooth_cutoff
from .kpr import KprMap, kpr_band
from .oper import SectorOperator, cholesky_whitener, gen_eig_extrema, norm, sqrt_psd
from .symp import TestFunctionPair, f_map, localized_basis, position_symplectic

TRUNCATION_MASS_MAX = 1e-4


def majorant_partial(kappa: float, N: int) -> float:
    """sum_{i=1}^{N} (i+1)^2 eps_i^2."""
    return float(sum((i + 1) ** 2 * (kappa * 2.0 ** (-(i - 1))) ** 2 for i in range(1, N + 1)))


def majorant_tail(kappa: float, N: int) -> float:
    """sum_{i>N} (i+1)^2 eps_i^2 in closed form.

    With x = 1/4 and j = i - N - 1 >= 0 the summand is kappa^2 x^N (M+j)^2 x^j,
    M = N + 2, and sum_j (M+j)^2 x^j = M^2 S0 + 2 M S1 + S2.
    """
    x = 0.25
    M = N + 2
    s0 = 1.0 / (1.0 - x)
    s1 = x / (1.0 - x) ** 2
    s2 = x * (1.0 + x) / (1.0 - x) ** 3
    return float(kappa**2 * x**N * (M * M * s0 + 2.0 * M * s1 + s2))


def majorant_total(kappa: float) -> float:
    """sum_{i>=1} (i+1)^2 eps_i^2 = 212/27 kappa^2."""
    return majorant_tail(kappa, 0)


class LocalizationOps:
    """Realized cutoffs chi_r (plateau r) and chi'_r (plateau 5r/4) and their mu-dressings."""

    def __init__(self, grid: SectorGrid, r: float):
        if not grid.is_aligned(r):
            raise AlignmentError(f"position grid has no panel breaks at r={r}, 5r/4, 25r/16")
        if 1.5625 * r > grid.config.R_max * (1 + 1e-12):
            raise ConfigError(f"chi'_r support 25r/16={1.5625 * r} exceeds R_max={grid.config.R_max}")
        self.grid = grid
        self.r = float(r)
        s = grid.r_nodes
        self.chi_profile = smooth_cutoff(s, r)
        self.chi_prime_profile = smooth_cutoff(s, r, plateau=1.25 * r)
        k = grid.k_nodes
        self._kp = np.sqrt(k)
        self._km = 1.0 / np.sqrt(k)

    @property
    def plateau_defect(self) -> float:
        """max |chi' chi - chi| on the r-nodes."""
        return float(np.max(np.abs(self.chi_prime_profile * self.chi_profile - self.chi_profile)))

    def truncation_mass(self) -> float:
        """Fraction of ||chi_r^||^2 lying above k_max (Parseval against position quadrature)."""
        g = self.grid
        total = float(np.sum(g.r_weights * self.chi_profile**2))
        hat = sb_transform(g, 0, self.chi_profile)
        captured = float(np.sum(g.k_weights * hat**2))
        return max(total - captured, 0.0) / total

    def check_truncation(self) -> float:
        m = self.truncation_mass()
        if m > TRUNCATION_MASS_MAX:
            raise NumericalError(f"chi_r^ loses {m:.2e} of its mass above k_max (limit {TRUNCATION_MASS_MAX})")
        return m

    # per-ell dense blocks -------------------------------------------------
    def block(self, name: str, ell: int) -> np.ndarray:
        prof = self.chi_prime_profile if name.endswith("p") else self.chi_profile
        M = radial_mult_block(self.grid, ell, prof)
        kind = name.rstrip("p")
        kp, km = self._kp, self._km
        if kind == "chi":
            return M
        if kind == "chi1":
            return km[:, None] * M * kp[None, :]
        if kind == "chi2":
            return kp[:, None] * M * km[None, :]
        if kind == "chi10":
            return M * km[None, :]
        if kind == "chi20":
            return M * kp[None, :]
        raise KeyError(name)

    def operator(self, name: str) -> SectorOperator:
        blocks = [self.block(name, ell) for ell in range(self.grid.ell_max + 1)]
        return SectorOperator(blocks, self.grid.sqrt_w, label=name)

    @cached_property
    def chi_r(self) -> SectorOperator:
        return mult_radial(self.grid, self.chi_profile, "chi_r")

    @cached_property
    def chi_r_prime(self) -> SectorOperator:
        return mult_radial(self.grid, self.chi_prime_profile, "chi'_r")

    @cached_property
    def chi_1r(self) -> SectorOperator:
        return self.operator("chi1")

    @cached_property
    def chi_2r(self) -> SectorOperator:
        return self.operator("chi2")

    @cached_property
    def chi_1r0(self) -> SectorOperator:
        return self.operator("chi10")

    @cached_property
    def chi_2r0(self) -> SectorOperator:
        return self.operator("chi20")

    def norms(self) -> Dict[str, float]:
        return {
            name: norm(getattr(self, name), "operator")
            for name in ("chi_r", "chi_r_prime", "chi_1r", "chi_2r", "chi_1r0", "chi_2r0")
        }


def _band_columns(T: KprMap, ell: int, squared: bool, j: int) -> Tuple[np.ndarray, np.ndarray]:
    """Columns sqrt(w) xi~_i for the bands acting on sector ell, and their T-coefficients."""
    c = T.coefficients(j, squared)
    idx = [i for i in range(max(ell, 1), T.n + 1) if c[i - 1] != 0.0]
    if not idx:
        return np.zeros((T.grid.nk, 0)), np.zeros(0)
    U = np.stack([T.grid.sqrt_w * T.profile(i) for i in idx], axis=1)
    return U, np.array([c[i - 1] for i in idx])


# ---------------------------------------------------------------------------
# Gram matrices on a test-function basis


def _stack(vecs, keys) -> np.ndarray:
    """Rows sqrt(w) * coefficients over ``keys``: Euclidean rows for the L^2 inner product."""
    grid = vecs[0].grid
    sw = grid.sqrt_w
    out = np.zeros((len(vecs), len(keys) * grid.nk), dtype=complex)
    for a, v in enumerate(vecs):
        for b, key in enumerate(keys):
            if key in v.coeffs:
                out[a, b * grid.nk:(b + 1) * grid.nk] = sw * v.coeffs[key]
    return out


def _gram(vecs_a, vecs_b) -> np.ndarray:
    """Matrix of <a, b> (antilinear in a)."""
    keys = sorted({k for v in list(vecs_a) + list(vecs_b) for k in v.keys()})
    return _stack(vecs_a, keys).conj() @ _stack(vecs_b, keys).T


@dataclass
class BasisData:
    """F-images of a basis together with the grid they live on."""

    grid: SectorGrid
    F: List[Tuple[object, object]]
    sigma: np.ndarray  # sigma(G_a, G_b)

    @classmethod
    def from_basis(cls, basis: Sequence[TestFunctionPair], r: Optional[float] = None) -> "BasisData":
        if not basis:
            raise ConfigError("empty basis")
        grid = basis[0].grid
        if r is not None:
            for G in basis:
                if G.radius > r * (1 + 1e-12):
                    raise ConfigError(f"basis element supported in radius {G.radius} > r={r}")
        F = [f_map(G, grid) for G in basis]
        F1 = [f[0] for f in F]
        F2 = [f[1] for f in F]
        sig = _gram(F1, F2) - _gram(F2, F1)
        return cls(grid, F, sig)


def metric_gram(T: Optional[KprMap], basis) -> np.ndarray:
    """Matrix of (G_a|G_b)_T; T=None is the identity map."""
    data = basis if isinstance(basis, BasisData) else BasisData.from_basis(basis)
    F1 = [f[0] for f in data.F]
    F2 = [f[1] for f in data.F]
    if T is None or T.is_identity:
        T1F1, T2F2 = F1, F2
    else:
        T1F1 = [T.apply_bandwise(1, x, squared=True) for x in F1]
        T2F2 = [T.apply_bandwise(2, x, squared=True) for x in F2]
    g = _gram(F1, T1F1) + _gram(F2, T2F2)
    return 0.5 * (g + g.conj().T)


def covariance_gram(T: Optional[KprMap], basis) -> Dict[str, np.ndarray]:
    """S_T(G_a, G_b) and the metric (.|.)_T; S_T = (metric_T + i sigma)/2.

    The same matrix is the matrix of S~_T = 1/2 [[T1^2, i], [-i, T2^2]]
    (F-coordinates) in the (.|.) metric, which is how the direct check uses it.
    """
    data = basis if isinstance(basis, BasisData) else BasisData.from_basis(basis)
    m = metric_gram(T, data)
    return {"S": 0.5 * (m + 1j * data.sigma), "metric": m, "sigma": data.sigma}


def covariance_fock(T: Optional[KprMap], basis) -> np.ndarray:
    """S_T via the Fock-space route: 1/2 <f_a, f_b> with f = T1 F1 + i T2 F2."""
    data = basis if isinstance(basis, BasisData) else BasisData.from_basis(basis)
    f = []
    for F1, F2 in data.F:
        if T is not None and not T.is_identity:
            F1, F2 = T.apply_bandwise(1, F1), T.apply_bandwise(2, F2)
        f.append(F1 + F2 * 1j)
    return 0.5 * _gram(f, f)


def antisymmetry_defect(S: np.ndarray, sigma: np.ndarray, conj_index: Optional[np.ndarray] = None) -> np.ndarray:
    """|S(G_a,G_b) - S(conj G_b, conj G_a) - i sigma(G_a,G_b)| for a real basis.

    For real basis elements conj G = G, so S(conj G_b, conj G_a) = S[b, a].
    """
    if conj_index is None:
        conj_index = np.arange(S.shape[0])
    return np.abs(S - S[np.ix_(conj_index, conj_index)].T - 1j * sigma)


# ---------------------------------------------------------------------------
# Theorem-level checks


def condition1_check(T: KprMap, r: float, loc: Optional[LocalizationOps] = None, tau_rng: float = 1e-10) -> Dict[int, Tuple[float, float]]:
    """(c_lower_j, c_upper_j): extrema of chi_j^* T_j^2 chi_j relative to chi_j^* chi_j.

    Evaluated as 1 + extrema of the pencil (chi_j^*(T_j^2 - I) chi_j, chi_j^* chi_j):
    the difference is assembled from its exact low-rank band structure, which
    keeps its sign exactly and avoids cancellation in near-null directions
    of chi_j^* chi_j.  Sectors with ell > n see T_j^2 = I and contribute 1.
    """
    loc = LocalizationOps(T.grid, r) if loc is None else loc
    out = {}
    for j in (1, 2):
        name = "chi1" if j == 1 else "chi2"
        D_blocks, B_blocks = [], []
        for ell in range(T.grid.ell_max + 1):
            U, c = _band_columns(T, ell, True, j)
            if c.size == 0:
                continue
            C = loc.block(name, ell)
            W = C.T @ U
            D_blocks.append((W * c[None, :]) @ W.T)
            B_blocks.append(C.T @ C)
        if not D_blocks:
            out[j] = (1.0, 1.0)
            continue
        sw = T.grid.sqrt_w
        lo, hi = gen_eig_extrema(
            SectorOperator(D_blocks, sw), SectorOperator(B_blocks, sw), tau_rng=tau_rng
        )
        has_trivial = T.grid.ell_max > T.n
        lo, hi = 1.0 + lo, 1.0 + hi
        if has_trivial:
            lo, hi = min(lo, 1.0), max(hi, 1.0)
        out[j] = (float(lo), float(hi))
    return out


def cut_projector_norms(T: KprMap, r: float, j: int, loc: Optional[LocalizationOps] = None, bands=None) -> np.ndarray:
    """||Q_{i,j,r}|| = max_{ell<=i} ||chi'_{j,r}^* xi~_i||^2 for i in ``bands``.

    With the chi^* T^2 chi ordering of the localized forms the cut projector
    is Q_{i,j,r} = chi'_{j,r}^* Q_i chi'_{j,r}; chi'_{1,r}^* = chi'_{2,r}.
    """
    loc = LocalizationOps(T.grid, r) if loc is None else loc
    grid = T.grid
    bands = range(1, grid.n_bands + 1) if bands is None else bands
    name = "chi2p" if j == 1 else "chi1p"
    blocks = {}
    out = []
    for i in bands:
        u = grid.sqrt_w * kpr_band(T.kappa, i, grid)[2]
        best = 0.0
        for ell in range(0, min(i, grid.ell_max) + 1):
            if ell not in blocks:
                blocks[ell] = loc.block(name, ell)
            best = max(best, float(np.sum((blocks[ell] @ u) ** 2)))
        out.append(best)
    return np.array(out)


def commutation_defect(T: KprMap, r: float, j: int = 1, loc: Optional[LocalizationOps] = None, basis=None) -> Dict[str, float]:
    """chi_j^* T_j^2 chi_j vs chi_j^* (T_j^2)_r chi_j.

    ``localized``: operator-norm defect of the two forms compressed to the
    span of F(G)_j, G in ``basis`` (default: localized bumps ell <= 4).
    ``full``: the same on the whole discretized space, which is limited by the
    UV truncation of the realized cutoff products.
    """
    grid = T.grid
    loc = LocalizationOps(grid, r) if loc is None else loc
    name = "chi1" if j == 1 else "chi2"
    pname = "chi2p" if j == 1 else "chi1p"
    basis = localized_basis(grid, r, ell_cut=min(4, grid.ell_max), n_radial=6) if basis is None else basis
    F = [f_map(G)[j - 1] for G in basis]
    full = loc_def = 0.0
    for ell in range(min(T.n, grid.ell_max) + 1):
        U, c = _band_columns(T, ell, True, j)
        if c.size == 0:
            continue
        C = loc.block(name, ell)
        Cp = loc.block(pname, ell)
        W = C.T @ U
        Wr = C.T @ (Cp @ U)
        D = (W * c) @ W.T - (Wr * c) @ Wr.T
        full = max(full, float(np.linalg.norm(D, 2)))
        cols = [grid.sqrt_w * np.real(x[k]) for x in F for k in x.keys() if k[0] == ell]
        if cols:
            Q, _ = np.linalg.qr(np.array(cols).T)
            loc_def = max(loc_def, float(np.linalg.norm(Q.T @ D @ Q, 2)))
    return {"localized": loc_def, "full": full}


def lower_bound_scan(
    T: KprMap, r: float, N_range=None, j: int = 1, loc: Optional[LocalizationOps] = None
) -> Dict[str, object]:
    """margin(N) = N^{-2} - tail(N), tail(N) = sum_{i>N} |b_i^2 - 1| ||Q_{i,j,r}||.

    Realized cut-projector norms are used for i <= n_bands; the unresolved
    remainder is bounded with the fitted constant C = max_i ||Q_i|| / ((i+1)^2 eps_i^2)
    times the closed-form majorant tail, and reported separately.
    """
    grid = T.grid
    nb = grid.n_bands
    N_range = list(range(1, nb)) if N_range is None else list(N_range)
    qn = cut_projector_norms(T, r, j, loc)
    i = np.arange(1, nb + 1)
    eps = T.kappa * 2.0 ** (-(i - 1.0))
    b2 = 1.0 / i**2
    w = np.abs(b2 - 1.0) if j == 1 else np.abs(1.0 / b2 - 1.0)
    c_fit = float(np.max(qn / ((i + 1) ** 2 * eps**2)))
    remainder = c_fit * majorant_tail(T.kappa, nb)
    rows = []
    for N in N_range:
        realized = float(np.sum((w * qn)[i > N]))
        tail = realized + remainder
        rows.append(
            {
                "N": int(N),
                "inv_N2": 1.0 / N**2,
                "tail_realized": realized,
                "tail_remainder": remainder,
                "tail": tail,
                "margin": 1.0 / N**2 - tail,
            }
        )
    positive = [row["N"] for row in rows if row["margin"] > 0]
    return {
        "rows": rows,
        "q_norms": qn.tolist(),
        "c_fit": c_fit,
        "first_positive_N": positive[0] if positive else None,
    }


def condition2_check(
    T: KprMap, r: float, N_max: Optional[int] = None, loc: Optional[LocalizationOps] = None, full_svd: bool = True
) -> Dict[str, object]:
    """Trace norms of K_{j,r} = chi0_j (T_j^2 - 1) chi0_j^*, band by band.

    Each band contributes |b_i^{+-2} - 1| sum_{ell<=i} (2 ell + 1) ||chi0_j xi~_i||^2
    (all terms share a sign, so K_j is semidefinite and its trace norm is the
    sum).  ``partials[N-1]`` sums bands i <= N and ``tails[N-1]`` the rest.
    With ``full_svd`` the assembled K_j is also passed through the singular
    value trace norm as a cross-check.
    """
    grid = T.grid
    loc = LocalizationOps(grid, r) if loc is None else loc
    N_max = T.n if N_max is None else min(N_max, T.n)
    out = {}
    for j in (1, 2):
        name = "chi10" if j == 1 else "chi20"
        c = T.coefficients(j, True)
        contrib = np.zeros(N_max)
        K_blocks = []
        for ell in range(grid.ell_max + 1):
            U, cc = _band_columns(T, ell, True, j)
            if cc.size == 0:
                K_blocks.append(np.zeros(grid.nk))
                continue
            C = loc.block(name, ell)
            V = C @ U
            if full_svd:
                K_blocks.append((V * cc) @ V.T)
            idx = [i for i in range(max(ell, 1), T.n + 1) if c[i - 1] != 0.0]
            for col, i in enumerate(idx):
                if i <= N_max:
                    contrib[i - 1] += (2 * ell + 1) * abs(cc[col]) * float(np.sum(V[:, col] ** 2))
        partials = np.cumsum(contrib)
        total = float(partials[-1]) if N_max else 0.0
        tails = total - partials
        res = {"contributions": contrib.tolist(), "partials": partials.tolist(), "tails": tails.tolist(), "total": total}
        if full_svd:
            res["total_svd"] = norm(SectorOperator(K_blocks, grid.sqrt_w), "trace")
        res["decay_exponent"] = tail_decay_exponent(tails)
        out[j] = res
    return out


def tail_decay_exponent(tails: Sequence[float]) -> float:
    """Slope of -log2 tail(N) vs N over the strictly positive tails."""
    t = np.asarray(tails, dtype=float)
    N = np.arange(1, t.size + 1, dtype=float)
    keep = t > 0
    if np.count_nonzero(keep) < 2:
        return float("inf")
    return float(-np.polyfit(N[keep], np.log2(t[keep]), 1)[0])


def ay_direct_check(T: Optional[KprMap], r: float, basis, rtol: float = 1e-12) -> Dict[str, float]:
    """Araki-Yamagami check on a finite localized basis.

    The basis is orthonormalized in (.|.) (T = id) with a pivoted Cholesky;
    in that frame the matrices of S~_T and S~ are the compressed S-forms.
    Reports ||S~_T^{1/2} - S~^{1/2}||_HS, ||S~_T - S~||_1, and the metric
    equivalence constants (extreme eigenvalues of (.|.)_T in the frame).
    """
    data = basis if isinstance(basis, BasisData) else BasisData.from_basis(basis, r)
    g_id = metric_gram(None, data)
    lam = np.linalg.eigvalsh(g_id)
    if lam[0] <= 0 and abs(lam[0]) > 1e-12 * lam[-1]:
        raise NotPSDError(f"metric Gram is indefinite (min eigenvalue {lam[0]:.3e})")
    C = cholesky_whitener(g_id, rtol=rtol)
    cov_T = covariance_gram(T, data)
    cov_0 = covariance_gram(None, data)
    MT = C.conj().T @ cov_T["S"] @ C
    M0 = C.conj().T @ cov_0["S"] @ C
    gT = C.conj().T @ cov_T["metric"] @ C
    gT = 0.5 * (gT + gT.conj().T)
    ev = np.linalg.eigvalsh(gT)
    diff = sqrt_psd(MT, tau_psd=1e-8) - sqrt_psd(M0, tau_psd=1e-8)
    d = MT - M0
    return {
        "hs_sqrt_diff": float(np.linalg.norm(diff, "fro")),
        "trace_norm_diff": float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))))),
        "metric_min": float(ev[0]),
        "metric_max": float(ev[-1]),
        "C_r": float(max(ev[-1], 1.0 / ev[0])),
        "basis_size": len(data.F),
        "orthonormal_rank": int(C.shape[1]),
    }


# ---------------------------------------------------------------------------
# Report


@dataclass
class NormalityReport:
    r: float
    n: int
    c_r_lower: Dict[int, float]
    c_r_upper: Dict[int, float]
    c_r_refined: Dict[int, Tuple[float, float]]
    trace_totals: Dict[int, float]
    trace_totals_refined: Dict[int, float]
    trace_partials: Dict[int, List[float]]
    trace_decay: Dict[int, float]
    hs_sqrt_diff: float
    hs_sqrt_diff_large: float
    trace_norm_diff: float
    gram_min_eig: float
    ay_C_r: float
    lower_bound: Dict[str, object]
    commutation: Dict[str, float]
    truncation_mass: float
    drift: Dict[str, float]
    verdicts: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("c_r_lower", "c_r_upper", "c_r_refined", "trace_totals", "trace_totals_refined", "trace_partials", "trace_decay"):
            d[key] = {str(k): v for k, v in d[key].items()}
        return d

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def check_normality(
    cfg: GridConfig,
    n: int = 8,
    r: float = 1.0,
    basis_sizes: Tuple[int, int] = (6, 8),
    ell_basis: int = 4,
    basis_power: int = 2,
    drift_tol: float = 0.02,
    hs_drift_tol: float = 0.05,
    refine: float = 1.5,
    grids: Optional[Tuple[SectorGrid, SectorGrid]] = None,
) -> NormalityReport:
    """Run both routes at two grid resolutions and two basis sizes.

    The direct check uses bumps with boundary profile (1 - (s/r)^2)^basis_power;
    a low power lets a modest radial basis reach the edge behaviour of the
    (.|.)-completion of L_r.
    """
    if grids is None:
        grids = (build_grid(cfg), build_grid(cfg.refined(refine)))
    g0, g1 = grids
    results = []
    for g in (g0, g1):
        T = KprMap(g, n)
        loc = LocalizationOps(g, r)
        results.append((T, loc, condition1_check(T, r, loc), condition2_check(T, r, loc=loc)))
    T, loc, c1, c2 = results[0]
    _, _, c1r, c2r = results[1]
    trunc = loc.check_truncation()
    lb = lower_bound_scan(T, r, loc=loc)
    comm = commutation_defect(T, r, 1, loc)
    ay = [ay_direct_check(T, r, localized_basis(g0, r, ell_basis, nr, basis_power)) for nr in basis_sizes]

    drift = {
        "c_lower_1": _rel(c1[1][0], c1r[1][0]),
        "c_lower_2": _rel(c1[2][0], c1r[2][0]),
        "c_upper_1": _rel(c1[1][1], c1r[1][1]),
        "c_upper_2": _rel(c1[2][1], c1r[2][1]),
        "trace_1": _rel(c2[1]["total"], c2r[1]["total"]),
        "trace_2": _rel(c2[2]["total"], c2r[2]["total"]),
        "hs_basis": _rel(ay[0]["hs_sqrt_diff"], ay[1]["hs_sqrt_diff"]),
    }
    cond1 = (
        all(c1[j][0] > 0 and np.isfinite(c1[j][1]) for j in (1, 2))
        and max(drift[k] for k in ("c_lower_1", "c_lower_2", "c_upper_1", "c_upper_2")) <= drift_tol
        and lb["first_positive_N"] is not None
    )
    cond2 = (
        all(np.isfinite(c2[j]["total"]) and c2[j]["decay_exponent"] >= 0.5 for j in (1, 2))
        and max(drift["trace_1"], drift["trace_2"]) <= drift_tol
    )
    ay_ok = all(np.isfinite(a["hs_sqrt_diff"]) and a["metric_min"] > 0 for a in ay) and drift["hs_basis"] <= hs_drift_tol
    verdicts = {
        "condition1": bool(cond1),
        "condition2": bool(cond2),
        "araki_yamagami": bool(ay_ok),
        "routes_agree": bool((cond1 and cond2) == ay_ok),
    }
    return NormalityReport(
        r=r,
        n=n,
        c_r_lower={j: c1[j][0] for j in (1, 2)},
        c_r_upper={j: c1[j][1] for j in (1, 2)},
        c_r_refined={j: c1r[j] for j in (1, 2)},
        trace_totals={j: c2[j]["total"] for j in (1, 2)},
        trace_totals_refined={j: c2r[j]["total"] for j in (1, 2)},
        trace_partials={j: c2[j]["partials"] for j in (1, 2)},
        trace_decay={j: c2[j]["decay_exponent"] for j in (1, 2)},
        hs_sqrt_diff=ay[0]["hs_sqrt_diff"],
        hs_sqrt_diff_large=ay[1]["hs_sqrt_diff"],
        trace_norm_diff=ay[0]["trace_norm_diff"],
        gram_min_eig=min(a["metric_min"] for a in ay),
        ay_C_r=max(a["C_r"] for a in ay),
        lower_bound=lb,
        commutation=comm,
        truncation_mass=trunc,
        drift=drift,
        verdicts=verdicts,
    )
