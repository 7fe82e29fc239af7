"""Symplectic layer: test-function pairs, the map F, coherent background vectors.

A test-function pair ``G = (G1, G2)`` is stored in position space as radial
profiles on the r-nodes, one per real spherical harmonic (ell, m).  The map

    F(G) = (mu^{-1/2} G1^, mu^{1/2} G2^)

goes to phase-stripped momentum coefficients (see ``grid``), where the
Fourier transform acts sector by sector as a spherical Bessel transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import AlignmentError, ConfigError, GridMismatchError, SymmetryError
from .grid import Key, SectorGrid, SectorVector, lm_keys, sb_transform
from .kpr import KprMap

LN2 = math.log(2.0)

Pair = Tuple[SectorVector, SectorVector]


@dataclass
class TestFunctionPair:
    """G = (G1, G2) with radial profiles per (ell, m) on the r-nodes of ``grid``."""

    __test__ = False  # not a pytest class

    grid: SectorGrid
    G1: Dict[Key, np.ndarray] = field(default_factory=dict)
    G2: Dict[Key, np.ndarray] = field(default_factory=dict)
    radius: float = 1.0

    def __post_init__(self):
        if self.radius > self.grid.config.R_max:
            raise ConfigError(f"support radius {self.radius} exceeds R_max={self.grid.config.R_max}")
        outside = self.grid.r_nodes > self.radius * (1 + 1e-12)
        for part in (self.G1, self.G2):
            for key, g in part.items():
                g = np.asarray(g)
                if g.shape != (self.grid.nr,):
                    raise GridMismatchError(f"profile {key} has shape {g.shape}, expected ({self.grid.nr},)")
                if np.any(g[outside] != 0):
                    raise ConfigError(f"profile {key} does not vanish beyond r={self.radius}")
                part[key] = g

    @property
    def is_real(self) -> bool:
        return all(
            not np.iscomplexobj(g) or np.all(g.imag == 0)
            for part in (self.G1, self.G2)
            for g in part.values()
        )

    def conj(self) -> "TestFunctionPair":
        return TestFunctionPair(
            self.grid,
            {k: np.conj(g) for k, g in self.G1.items()},
            {k: np.conj(g) for k, g in self.G2.items()},
            self.radius,
        )

    def scaled(self, a1: complex, a2: Optional[complex] = None) -> "TestFunctionPair":
        a2 = a1 if a2 is None else a2
        return TestFunctionPair(
            self.grid,
            {k: a1 * g for k, g in self.G1.items()},
            {k: a2 * g for k, g in self.G2.items()},
            self.radius,
        )

    def __add__(self, other: "TestFunctionPair") -> "TestFunctionPair":
        self.grid.check_same(other.grid)

        def merge(a, b):
            out = dict(a)
            for k, g in b.items():
                out[k] = out[k] + g if k in out else g
            return out

        return TestFunctionPair(
            self.grid, merge(self.G1, other.G1), merge(self.G2, other.G2), max(self.radius, other.radius)
        )

    def norm(self) -> float:
        w = self.grid.r_weights
        return math.sqrt(
            sum(float(np.sum(w * np.abs(g) ** 2)) for part in (self.G1, self.G2) for g in part.values())
        )


def bump_profile(s: np.ndarray, r: float, ell: int, q: int = 0, power: int = 6) -> np.ndarray:
    """(s/r)^(ell+2q) (1-(s/r)^2)^power on [0, r], zero beyond."""
    t = np.asarray(s, dtype=float) / r
    return np.where(t < 1.0, t ** (ell + 2 * q) * np.clip(1.0 - t * t, 0.0, None) ** power, 0.0)


def localized_basis(
    grid: SectorGrid, r: float, ell_cut: int = 4, n_radial: int = 4, power: int = 6
) -> List[TestFunctionPair]:
    """Real basis of the discretized L_r: one bump in one component per element.

    Ordering: component (1 then 2), then (ell, m), then the radial index q.
    """
    if ell_cut > grid.ell_max:
        raise ConfigError(f"ell_cut={ell_cut} exceeds grid ell_max={grid.ell_max}")
    s = grid.r_nodes
    out = []
    for comp in (1, 2):
        for key in lm_keys(ell_cut):
            for q in range(n_radial):
                prof = {key: bump_profile(s, r, key[0], q, power)}
                G1, G2 = (prof, {}) if comp == 1 else ({}, prof)
                out.append(TestFunctionPair(grid, G1, G2, r))
    return out


def random_pair(
    grid: SectorGrid,
    r: float,
    rng: np.random.Generator,
    ell_cut: int = 4,
    n_radial: int = 4,
    real: bool = True,
) -> TestFunctionPair:
    """Random combination of the bumps of ``localized_basis``."""
    s = grid.r_nodes
    parts = []
    for _ in range(2):
        prof = {}
        for key in lm_keys(min(ell_cut, grid.ell_max)):
            c = rng.standard_normal(n_radial)
            if not real:
                c = c + 1j * rng.standard_normal(n_radial)
            prof[key] = sum(c[q] * bump_profile(s, r, key[0], q) for q in range(n_radial))
        parts.append(prof)
    return TestFunctionPair(grid, parts[0], parts[1], r)


def position_symplectic(G: TestFunctionPair, Gp: TestFunctionPair) -> complex:
    """sigma(G, G') = int (conj(G1) G2' - conj(G2) G1') dx on the r-quadrature."""
    G.grid.check_same(Gp.grid)
    w = G.grid.r_weights

    def pair(a, b):
        return sum(np.sum(w * np.conj(a[k]) * b[k]) for k in sorted(set(a) & set(b)))

    return complex(pair(G.G1, Gp.G2) - pair(G.G2, Gp.G1))


def f_map(G: TestFunctionPair, grid: Optional[SectorGrid] = None) -> Pair:
    """(F1, F2) = (mu^{-1/2} G1^, mu^{1/2} G2^)."""
    grid = G.grid if grid is None else grid
    grid.check_same(G.grid)
    k = grid.k_nodes
    F1 = {key: sb_transform(grid, key[0], g) / np.sqrt(k) for key, g in G.G1.items()}
    F2 = {key: sb_transform(grid, key[0], g) * np.sqrt(k) for key, g in G.G2.items()}
    return SectorVector(grid, F1), SectorVector(grid, F2)


def symplectic_form(F: Pair, Fp: Pair) -> complex:
    """sigma(F, F') = <F1, F2'> - <F2, F1'>, antilinear in F."""
    return F[0].inner(Fp[1]) - F[1].inner(Fp[0])


@dataclass
class CoherentVector:
    """v = k^{-3/2} 1_(0, kappa_v](k) w(k^), truncated at the deepest resolved band.

    ``first_band`` is the grid band whose upper edge is kappa_v; ``vector``
    holds the realized phase-stripped coefficients.
    """

    w: Dict[Key, float]
    kappa_v: float
    grid: SectorGrid
    first_band: int
    vector: SectorVector

    @property
    def w_norm_sq(self) -> float:
        return float(sum(c * c for c in self.w.values()))

    @property
    def bands(self) -> range:
        return range(self.first_band, self.grid.n_bands + 1)

    def band_restriction(self, gi: int) -> SectorVector:
        mask = self.grid.band_mask(gi)
        return self.vector.with_coeffs({k: np.where(mask, c, 0.0) for k, c in self.vector.coeffs.items()})

    def norm_sq_above(self, delta: float) -> float:
        """Quadrature ||v||^2 over [delta, kappa_v]; delta must be a band edge."""
        mask = self.grid.k_nodes >= delta
        w = self.grid.k_weights
        return float(sum(np.sum(w[mask] * np.abs(c[mask]) ** 2) for c in self.vector.coeffs.values()))


def coherent_vector(w: Mapping[Key, float], kappa_v: float, grid: SectorGrid) -> CoherentVector:
    """Build v from real angular coefficients w (even ell only)."""
    w = {tuple(k): float(c) for k, c in w.items()}
    for (ell, m), c in w.items():
        if ell % 2 and c != 0.0:
            raise SymmetryError(f"w has odd-ell component {(ell, m)}; v must be even under k -> -k")
        if not (0 <= ell <= grid.ell_max and -ell <= m <= ell):
            raise KeyError(f"invalid sector {(ell, m)}")
    if kappa_v > grid.kappa * (1 + 1e-12):
        raise AlignmentError(f"kappa_v={kappa_v} exceeds the grid's kappa={grid.kappa}")
    first = None
    for gi in range(1, grid.n_bands + 1):
        if math.isclose(grid.eps(gi), kappa_v, rel_tol=1e-12):
            first = gi
            break
    if first is None:
        raise AlignmentError(f"kappa_v={kappa_v} is not a band edge of the grid")
    k = grid.k_nodes
    support = (grid.band_index >= first) & (grid.band_index > 0)
    prof = np.where(support, k**-1.5, 0.0)
    # stripped coefficient of (-i)^ell c Y = w Y k^{-3/2} is i^ell w k^{-3/2}
    coeffs = {key: (-1.0) ** (key[0] // 2) * c * prof for key, c in w.items() if c != 0.0}
    return CoherentVector(w, float(kappa_v), grid, first, SectorVector(grid, coeffs))


def _kpr_index(T: KprMap, gi: int) -> int:
    """KPR band index i of grid band gi (same dyadic interval)."""
    return int(round(math.log2(T.kappa / T.grid.eps(gi)))) + 1


def apply_T1_to_v(T: KprMap, v: CoherentVector) -> SectorVector:
    T.grid.check_same(v.grid)
    return T.apply_bandwise(1, v.vector)


def t1v_tail_bound(T: KprMap, v: CoherentVector) -> float:
    """ln2 * sum over unresolved bands of b_i^2 |w_l|^2, for the untruncated map.

    The infinite map damps every band i >= 2 on ell <= i; sectors with
    ell > i are undamped there.  The series is summed to convergence.
    """
    i_last = _kpr_index(T, v.grid.n_bands)
    total = 0.0
    for (ell, _), c in v.w.items():
        undamped = max(0, ell - (i_last + 1))
        start = max(i_last + 1, ell)
        tail = math.pi**2 / 6 - sum(1.0 / i**2 for i in range(1, start))
        total += LN2 * c * c * (undamped + tail)
    return total


def infravacuum_pair(
    T: KprMap,
    v: CoherentVector,
    tests: Optional[Sequence[SectorVector]] = None,
    n_test: int = 50,
    seed: int = 0,
    r: float = 1.0,
) -> Tuple[SectorVector, float]:
    """(T1 v, residual) with residual = max |<v,F2> - <T1 v, T2 F2>| / ||F2||.

    Without explicit ``tests`` the F2 are images F(G)_2 of random real
    localized pairs.
    """
    t1v = apply_T1_to_v(T, v)
    if tests is None:
        rng = np.random.default_rng(seed)
        tests = [f_map(random_pair(v.grid, r, rng))[1] for _ in range(n_test)]
    residual = 0.0
    for F2 in tests:
        lhs = v.vector.inner(F2)
        rhs = t1v.inner(T.apply_bandwise(2, F2))
        residual = max(residual, abs(lhs - rhs) / max(F2.norm(), 1e-300))
    return t1v, float(residual)


def ir_contrast(v: CoherentVector, T: KprMap, depth: int) -> List[dict]:
    """Cumulative ||v||^2 and ||T1 v||^2 over the first ``depth`` bands of v.

    ``bound`` is ln2 * sum_l |w_l|^2 d_i^2 with d_i = b_i on damped sectors
    and 1 otherwise: the analytic increment of ||T1 v||^2.
    """
    nb = len(v.bands)
    if not 0 <= depth <= nb:
        raise ConfigError(f"depth={depth} outside 0..{nb}")
    t1v = apply_T1_to_v(T, v)
    w = v.grid.k_weights
    rows = []
    cum_v = cum_t = 0.0
    for gi in list(v.bands)[:depth]:
        mask = v.grid.band_mask(gi)
        inc_v = sum(float(np.sum(w[mask] * np.abs(c[mask]) ** 2)) for c in v.vector.coeffs.values())
        inc_t = sum(float(np.sum(w[mask] * np.abs(c[mask]) ** 2)) for c in t1v.coeffs.values())
        i = _kpr_index(T, gi)
        damped = 1 <= i <= T.n
        bound = LN2 * sum(
            c * c * ((1.0 / i**2) if damped and ell <= i else 1.0) for (ell, _), c in v.w.items()
        )
        cum_v += inc_v
        cum_t += inc_t
        rows.append(
            {
                "band": i,
                "eps": float(v.grid.eps(gi)),
                "increment_v": inc_v,
                "cumulative_v": cum_v,
                "increment_T1v": inc_t,
                "cumulative_T1v": cum_t,
                "increment_bound": bound,
            }
        )
    return rows


def ir_trend(rows: Sequence[dict]) -> dict:
    """Linear-fit slope of the cumulative norms and a divergence flag for T1 v.

    The flag is raised when the last increment of ||T1 v||^2 is still at
    least half of the largest one, i.e. no square-summable decay is visible.
    """
    if len(rows) < 2:
        return {"slope_v": float("nan"), "slope_T1v": float("nan"), "divergent": False}
    m = np.arange(1, len(rows) + 1, dtype=float)
    cv = np.array([r["cumulative_v"] for r in rows])
    ct = np.array([r["cumulative_T1v"] for r in rows])
    inc = np.array([r["increment_T1v"] for r in rows])
    return {
        "slope_v": float(np.polyfit(m, cv, 1)[0]),
        "slope_T1v": float(np.polyfit(m, ct, 1)[0]),
        "divergent": bool(inc[-1] >= 0.5 * inc.max()),
    }


def coherent_phase(v: CoherentVector, G: TestFunctionPair) -> float:
    """sigma((v, 0), F(G)) = <v, F(G)_2> for real-valued G."""
    if not G.is_real:
        raise SymmetryError("coherent phase is defined for real-valued test functions only")
    v.grid.check_same(G.grid)
    ph = v.vector.inner(f_map(G)[1])
    if abs(ph.imag) > 1e-10 * max(1.0, abs(ph.real)):
        raise SymmetryError(f"phase has imaginary part {ph.imag:.3e}")
    return float(ph.real)


def phase_invariance_defect(T: KprMap, v: CoherentVector, G: TestFunctionPair) -> float:
    """|sigma(T(v,0), T F(G)) - sigma((v,0), F(G))|."""
    F2 = f_map(G)[1]
    lhs = apply_T1_to_v(T, v).inner(T.apply_bandwise(2, F2))
    return float(abs(lhs - v.vector.inner(F2)))


def irreducibility_rank(
    T: KprMap,
    basis: Sequence[TestFunctionPair],
    threshold: float = 1e-8,
    complex_dim: Optional[int] = None,
) -> dict:
    """Real rank of span{T1 F(G)_1 + i T2 F(G)_2} in the realified space.

    Each real basis element contributes one real vector.  ``complex_dim``
    defaults to the number of linearly independent position profiles used by
    the basis (either component); full rank means ``rank == 2 * complex_dim``.
    A basis that is too small is reported as deficient, not raised.
    """
    if not basis:
        raise ConfigError("irreducibility check needs a non-empty basis")
    grid = basis[0].grid
    keys = sorted({k for G in basis for k in list(G.G1) + list(G.G2)})
    sw = grid.sqrt_w
    swr = np.sqrt(grid.r_weights)
    cols, profs = [], []
    for G in basis:
        if not G.is_real:
            raise SymmetryError("basis must be real-valued")
        F1, F2 = f_map(G, grid)
        z = T.apply_bandwise(1, F1) + T.apply_bandwise(2, F2) * 1j
        vec = np.concatenate([sw * np.asarray(z[k], dtype=complex) for k in keys])
        cols.append(np.concatenate([vec.real, vec.imag]))
        for part in (G.G1, G.G2):
            if part:
                profs.append(np.concatenate([swr * np.real(part.get(k, np.zeros(grid.nr))) for k in keys]))
    if complex_dim is None:
        ps = np.linalg.svd(np.array(profs), compute_uv=False)
        complex_dim = int(np.sum(ps > threshold * ps[0]))
    sv = np.linalg.svd(np.array(cols).T, compute_uv=False)
    rel = sv / sv[0] if sv[0] > 0 else sv
    rank = int(np.sum(rel > threshold))
    return {
        "rank": rank,
        "n_vectors": len(basis),
        "complex_dim": complex_dim,
        "full_rank": rank == 2 * complex_dim,
        "threshold": threshold,
        "sv_min_rel": float(rel[-1]),
        "sv_tail": [float(x) for x in rel[-5:]],
    }


def check_infravacuum(
    grid: SectorGrid,
    n: Optional[int] = None,
    r: float = 1.0,
    seed: int = 0,
    n_test: int = 50,
    n_pairs: int = 100,
    pairing_tol: float = 1e-8,
    symplectic_tol: float = 1e-8,
    norm_rtol: float = 0.01,
) -> dict:
    """Infravacuum suite on ``grid``: pairing identity, ||T1 v||^2, symplectic preservation, IR contrast.

    The background is v built from w = Y_00 starting at the top band; the
    predicted ||T1 v||^2 is (pi^2/6) ln 2 for the untruncated map, compared
    after adding the analytic contribution of the unresolved bands.
    """
    n = min(grid.ell_max, grid.n_bands) if n is None else n
    T = KprMap(grid, n)
    rng = np.random.default_rng(seed)
    v = coherent_vector({(0, 0): 1.0}, grid.kappa, grid)
    tests = [f_map(random_pair(grid, r, rng))[1] for _ in range(n_test)]
    t1v, pairing = infravacuum_pair(T, v, tests=tests)
    tail = t1v_tail_bound(T, v)
    t1v_norm = t1v.norm_sq() + tail
    target = math.pi**2 / 6 * LN2

    sym_defect = 0.0
    for _ in range(n_pairs):
        G, Gp = random_pair(grid, r, rng, real=False), random_pair(grid, r, rng, real=False)
        d = abs(symplectic_form(f_map(G), f_map(Gp)) - position_symplectic(G, Gp))
        sym_defect = max(sym_defect, d / max(G.norm() * Gp.norm(), 1e-300))

    rows = ir_contrast(v, T, len(v.bands))
    trend = ir_trend(rows)
    band_defect = max(abs(row["increment_v"] - LN2) for row in rows)
    G = random_pair(grid, r, rng)
    phase_defect = phase_invariance_defect(T, v, G) / max(abs(coherent_phase(v, G)), 1e-300)

    verdicts = {
        "pairing": pairing <= pairing_tol,
        "t1v_norm": abs(t1v_norm - target) <= norm_rtol * target,
        "symplectic": sym_defect <= symplectic_tol,
        "band_norms": band_defect <= 1e-8,
        "ir_contrast": bool(rows[-1]["increment_T1v"] < rows[0]["increment_T1v"] and not trend["divergent"]),
        "phase_invariance": phase_defect <= 1e-8,
    }
    return {
        "n": n,
        "pairing_residual": pairing,
        "t1v_norm_sq_resolved": t1v.norm_sq(),
        "t1v_tail": tail,
        "t1v_norm_sq": t1v_norm,
        "t1v_target": target,
        "symplectic_defect": sym_defect,
        "band_norm_defect": band_defect,
        "phase_defect_rel": phase_defect,
        "ir_rows": rows,
        "ir_trend": trend,
        "verdicts": verdicts,
        "passed": all(verdicts.values()),
    }
