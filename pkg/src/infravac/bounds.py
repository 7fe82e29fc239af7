"""Smoothing bounds for band-restricted localization operators and Schur tests.

For a kernel ``a(k,k') = (2pi)^{-3/2} |k|^alpha h(|k-k'|) |k'|^beta 1_band(|k'|)``
with radial ``h`` the angular integrals reduce to the cumulative function
``Phi(q) = int_0^q h(t) t dt``::

    int_{S^2} h(|k-k'|) dOmega' = 2 pi (Phi(k+k') - Phi(|k-k'|)) / (k k')

so that (with dPhi = Phi(k+k') - Phi(|k-k'|))::

    C(k)   = int |a| dk'  = (2pi)^{-1/2} k^{alpha-1}  int_band k'^{beta+1} dPhi dk'
    C'(k') = int |a| dk   = (2pi)^{-1/2} k'^{beta-1} int_0^inf k^{alpha+1} dPhi dk
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicHermiteSpline
from scipy.special import spherical_jn

from .errors import ConfigError, NumericalError
from .grid import GridConfig, SectorGrid, build_grid
from .kpr import kpr_band
from .locnorm import LocalizationOps

SQRT_2PI = math.sqrt(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


# ---------------------------------------------------------------------------
# Radial Fourier transform of the cutoff


def _cutoff_pieces(r: float) -> List[Tuple[float, float, Polynomial]]:
    """Pieces (a, b, P) with P(s) = s * chi_r(s) polynomial on [a, b]."""
    w = 0.25 * r
    t = Polynomial([-r / w, 1.0 / w])  # t(s) = (s - r)/w
    step = 1.0 - (10.0 * t**3 - 15.0 * t**4 + 6.0 * t**5)
    s = Polynomial([0.0, 1.0])
    return [(0.0, r, s), (r, 1.25 * r, s * step)]


def _int_poly_sin(P: Polynomial, a: float, b: float, q: np.ndarray) -> np.ndarray:
    """int_a^b P(s) sin(q s) ds by repeated integration by parts (q > 0)."""
    # antiderivative: sum_n (-1)^n P^(n)(s) G_{n+1}(s), G_1 = -cos/q, G_{m+1} = int G_m
    def anti(s):
        total = np.zeros_like(q)
        d = P
        for n in range(P.degree() + 1):
            m = n + 1
            phase = m % 4  # G_m: 1:-cos/q, 2:-sin/q^2, 3:cos/q^3, 0:sin/q^4
            qs = q * s
            if phase == 1:
                g = -np.cos(qs)
            elif phase == 2:
                g = -np.sin(qs)
            elif phase == 3:
                g = np.cos(qs)
            else:
                g = np.sin(qs)
            total = total + (-1) ** n * d(s) * g / q**m
            d = d.deriv()
        return total

    return anti(b) - anti(a)


def chi_hat(q, r: float, n_gl: int = 48) -> np.ndarray:
    """Radial Fourier transform sqrt(2/pi) int chi_r(s) j_0(q s) s^2 ds of the default cutoff.

    Small q uses Gauss-Legendre on each polynomial piece; large q uses the
    exact integration-by-parts antiderivative, which has no oscillation limit.
    """
    q = np.abs(np.asarray(q, dtype=float))
    out = np.zeros_like(q)
    pieces = _cutoff_pieces(r)
    small = q * r < 8.0
    if np.any(small):
        x, w = leggauss(n_gl)
        qs = q[small][..., None]
        acc = 0.0
        for a, b, P in pieces:
            s = 0.5 * (b - a) * x + 0.5 * (a + b)
            ws = 0.5 * (b - a) * w
            acc = acc + np.sum(ws * P(s) * s * spherical_jn(0, qs * s), axis=-1)
        out[small] = acc
    big = ~small
    if np.any(big):
        qb = q[big]
        acc = np.zeros_like(qb)
        for a, b, P in pieces:
            acc += _int_poly_sin(P, a, b, qb)
        out[big] = acc / qb
    return SQRT_2_OVER_PI * out


class CumulativeProfile:
    """Phi(q) = int_0^q h(t) t dt for h = |chi_r^|.

    Phi is accumulated with Gauss-Legendre on fine panels (spacing ``fine``
    up to ``q_fine``, ``coarse`` beyond) and interpolated by a cubic Hermite
    spline using the exact derivative q h(q).
    """

    def __init__(self, h: Callable[[np.ndarray], np.ndarray], q_max: float, fine: float = 0.02,
                 q_fine: float = 64.0, coarse: float = 0.25, pts: int = 6):
        self.h = h
        q_fine = min(q_fine, q_max)
        e1 = np.linspace(0.0, q_fine, max(2, int(math.ceil(q_fine / fine))) + 1)
        n2 = int(math.ceil((q_max - q_fine) / coarse))
        e2 = q_fine + coarse * np.arange(1, n2 + 1) if n2 > 0 else np.empty(0)
        self.edges = np.concatenate([e1, e2])
        x, w = leggauss(pts)
        a, b = self.edges[:-1], self.edges[1:]
        t = 0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (a + b)[:, None]
        vals = h(t) * t * (0.5 * (b - a))[:, None] * w[None, :]
        self.cum = np.concatenate([[0.0], np.cumsum(vals.sum(axis=1))])
        self.q_max = float(self.edges[-1])
        self._spline = CubicHermiteSpline(self.edges, self.cum, self.edges * h(self.edges))

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any(q > self.q_max * (1 + 1e-12)):
            raise NumericalError(f"Phi evaluated at {q.max():.3g} beyond table end {self.q_max:.3g}")
        return self._spline(q)


# ---------------------------------------------------------------------------
# Kernel specifications


@dataclass
class KernelSpec:
    """a(k,k') = (2pi)^{-3/2} k^alpha h(|k-k'|) k'^beta 1_[lo,hi](k').

    ``tag`` is one of ``"a"`` (alpha=1/2, beta=-1/2), ``"a_prime"``
    (alpha=0, beta=1/2) or ``"mollifier"`` (a Gaussian h of total mass
    lambda, no band restriction).
    """

    tag: str
    r: float = 1.0
    band: Optional[int] = None
    kappa: float = 1.0
    lam: float = 1.0
    width: float = 0.05
    k_int_max: float = 2000.0
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        if self.tag == "a":
            self.alpha, self.beta = 0.5, -0.5
        elif self.tag == "a_prime":
            self.alpha, self.beta = 0.0, 0.5
        elif self.tag == "mollifier":
            self.alpha, self.beta = 0.0, 0.0
        else:
            raise ConfigError(f"unknown kernel tag {self.tag!r}")
        if self.tag != "mollifier" and (self.band is None or self.band < 1):
            raise ConfigError("band kernels need a band index i >= 1")

    @property
    def scale(self) -> float:
        """Momentum scale over which h varies."""
        return self.width if self.tag == "mollifier" else 1.0 / self.r

    def kink_edges(self, k: float, lo: float, hi: float) -> List[float]:
        offs = self.scale * np.array([0.25, 0.5, 1.0, 2.0, 4.0, 8.0])
        pts = np.concatenate([[k], k - offs, k + offs])
        return [float(p) for p in pts if lo < p < hi]

    @property
    def support(self) -> Tuple[float, float]:
        if self.band is None:
            return 0.0, self.k_int_max
        hi = self.kappa * 2.0 ** (-(self.band - 1))
        return hi / 2, hi

    def h(self, q: np.ndarray) -> np.ndarray:
        if self.tag == "mollifier":
            s = self.width
            return self.lam * s**-3 * np.exp(-0.5 * (np.asarray(q) / s) ** 2)
        return np.abs(chi_hat(q, self.r))

    def phi(self, q_max: float) -> Callable:
        if self.tag == "mollifier":
            s, lam = self.width, self.lam
            return lambda q: lam / s * (1.0 - np.exp(-0.5 * (np.asarray(q) / s) ** 2))
        return CumulativeProfile(self.h, q_max, fine=0.02 * self.r, q_fine=64.0 / self.r, coarse=0.25 * self.r)


@lru_cache(maxsize=None)
def _leggauss(n: int):
    return leggauss(n)


def _split_rule(edges: Sequence[float], n: int):
    """Composite n-point Gauss-Legendre rule over consecutive edges."""
    x, w = _leggauss(n)
    e = np.asarray(edges, dtype=float)
    a, b = e[:-1], e[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    half = 0.5 * (b - a)[:, None]
    return (half * x + 0.5 * (a + b)[:, None]).ravel(), (half * w).ravel()


def _delta_phi(phi, k, kp):
    return phi(k + kp) - phi(np.abs(k - kp))


def _row_integral(spec: KernelSpec, phi, k: float, n: int) -> float:
    """C(k) at one k."""
    lo, hi = spec.support
    pts = [lo, hi, *spec.kink_edges(k, lo, hi)]
    if spec.band is None:
        pts += [2 * k, *np.geomspace(max(k, 1e-3), hi, 24)]
    edges = sorted(set(p for p in pts if lo <= p <= hi))
    kp, w = _split_rule(edges, n)
    val = np.sum(w * kp ** (spec.beta + 1) * _delta_phi(phi, k, kp))
    return float(k ** (spec.alpha - 1) * val / SQRT_2PI)


def _col_integral(spec: KernelSpec, phi, kp: float, n: int, k_max: float) -> float:
    """C'(k') at one k'."""
    pts = [0.0, kp, 2 * kp, *spec.kink_edges(kp, 0.0, k_max)]
    pts += list(np.geomspace(2 * kp, k_max, 40)[1:])
    edges = sorted(set(p for p in pts if p <= k_max))
    k, w = _split_rule(edges, n)
    val = np.sum(w * k ** (spec.alpha + 1) * _delta_phi(phi, k, kp))
    return float(kp ** (spec.beta - 1) * val / SQRT_2PI)


@dataclass
class SchurResult:
    C: float
    C_prime: float
    bound: float
    argmax_k: float
    argmax_kp: float
    sup_refinement_delta: float
    quad_doubling_delta: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return self.C, self.C_prime, self.bound


def schur_bound(
    spec: KernelSpec,
    sup_nodes: Optional[np.ndarray] = None,
    n_quad: int = 24,
    n_sup: int = 96,
    tol: float = 0.01,
) -> SchurResult:
    """Schur-test constants C = sup_k int|a| dk', C' = sup_k' int|a| dk, bound sqrt(C C').

    Sups are maxima over node sets (``n_sup`` and ``2 n_sup`` log-spaced
    nodes, the refinement delta is reported).  Integrals are repeated with
    doubled Gauss-Legendre order and a doubled upper limit; a relative
    disagreement above ``tol`` raises NumericalError.
    """
    lo, hi = spec.support
    k_int = spec.k_int_max
    phi = spec.phi(2 * k_int + hi + 1.0)

    if sup_nodes is None:
        k_lo = max(lo, 1e-6) / 8 if spec.band is not None else 1e-3
        sup_k = lambda m: np.geomspace(k_lo, min(k_int, 200.0), m)
    else:
        sup_k = lambda m: np.asarray(sup_nodes)
    if spec.band is not None:
        sup_kp = lambda m: np.linspace(lo, hi, m)
    else:
        sup_kp = lambda m: np.geomspace(1e-3, min(k_int, 200.0) / 2, m)

    def constants(m, n, k_top):
        C_vals = np.array([_row_integral(spec, phi, k, n) for k in sup_k(m)])
        Cp_vals = np.array([_col_integral(spec, phi, kp, n, k_top) for kp in sup_kp(m)])
        return C_vals, Cp_vals

    C1, Cp1 = constants(n_sup, n_quad, k_int)
    C2, Cp2 = constants(n_sup, 2 * n_quad, 2 * k_int)
    quad_delta = max(
        abs(C2.max() - C1.max()) / max(C2.max(), 1e-300), abs(Cp2.max() - Cp1.max()) / max(Cp2.max(), 1e-300)
    )
    if quad_delta > tol:
        raise NumericalError(f"Schur integrals not converged: panel doubling changes them by {quad_delta:.2%}")
    C3, Cp3 = constants(2 * n_sup, n_quad, k_int)
    sup_delta = max(
        abs(C3.max() - C1.max()) / max(C3.max(), 1e-300), abs(Cp3.max() - Cp1.max()) / max(Cp3.max(), 1e-300)
    )
    C, Cp = max(C1.max(), C3.max()), max(Cp1.max(), Cp3.max())
    ks, kps = sup_k(n_sup), sup_kp(n_sup)
    return SchurResult(
        C=float(C),
        C_prime=float(Cp),
        bound=float(math.sqrt(C * Cp)),
        argmax_k=float(ks[int(np.argmax(C1))]),
        argmax_kp=float(kps[int(np.argmax(Cp1))]),
        sup_refinement_delta=float(sup_delta),
        quad_doubling_delta=float(quad_delta),
    )


# ---------------------------------------------------------------------------
# Realized smoothing norms


SMOOTHING_OPS = ("chi2", "chi10", "chi1", "chi20")
SMOOTHING_POWERS = (1, 1, 2, 2)


def smoothing_norms(i: int, ell: int, m: int, r: float, grid: SectorGrid, loc: Optional[LocalizationOps] = None) -> Tuple[float, float, float, float]:
    """The four norms, in order:

    ||mu^{1/2} chi mu^{-1/2} v||, ||chi mu^{-1/2} v||, ||mu^{-1/2} chi mu^{1/2} v||, ||chi mu^{1/2} v||

    for v = xi~_i (x) Y_lm.  The realized operators are rotation invariant,
    so m only selects the sector and does not change the values.
    """
    if not 0 <= ell <= grid.ell_max or not -ell <= m <= ell:
        raise ConfigError(f"invalid sector ({ell}, {m}) for ell_max={grid.ell_max}")
    loc = LocalizationOps(grid, r) if loc is None else loc
    u = grid.sqrt_w * kpr_band(grid.kappa, i, grid)[2]
    return tuple(float(np.linalg.norm(loc.block(name, ell) @ u)) for name in SMOOTHING_OPS)


def smoothing_table(r: float, grid: SectorGrid, ells: Sequence[int] = (0,), bands=None, loc=None) -> Dict[int, np.ndarray]:
    """{ell: array (n_bands, 4)} of smoothing norms."""
    loc = LocalizationOps(grid, r) if loc is None else loc
    bands = range(1, grid.n_bands + 1) if bands is None else bands
    out = {}
    for ell in ells:
        blocks = [loc.block(name, ell) for name in SMOOTHING_OPS]
        rows = []
        for i in bands:
            u = grid.sqrt_w * kpr_band(grid.kappa, i, grid)[2]
            rows.append([float(np.linalg.norm(B @ u)) for B in blocks])
        out[ell] = np.array(rows)
    return out


def scaling_fit(eps: Sequence[float], values: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares fit log(value) = slope * log(eps) + intercept; returns (slope, intercept, rms residual)."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.size < 3 or eps.size != values.size:
        raise ConfigError("scaling fit needs at least 3 matching points")
    if np.any(values <= 0) or np.any(eps <= 0):
        raise ConfigError("scaling fit needs positive values")
    x, y = np.log(eps), np.log(values)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ [slope, icpt] - y) ** 2)))
    return float(slope), float(icpt), res


def prefactors(table: np.ndarray, eps: np.ndarray, fit_bands: Sequence[int]) -> np.ndarray:
    """C_r per norm: max over the fit bands of norm / eps^p with the nominal power p."""
    idx = np.asarray(fit_bands) - 1
    return np.array([np.max(table[idx, q] / eps[idx] ** p) for q, p in enumerate(SMOOTHING_POWERS)])


def realized_band_norm(loc: LocalizationOps, name: str, i: int) -> float:
    """Operator norm of the realized operator restricted to band i (max over ell)."""
    grid = loc.grid
    mask = grid.band_mask(i)
    return max(_spectral_norm(loc.block(name, ell)[:, mask]) for ell in range(grid.ell_max + 1))


# ---------------------------------------------------------------------------
# Boundedness of chi mu^{-1/2} and mu^{1/2} chi mu^{-1/2}


def grid_for_radius(base: GridConfig, r: float) -> GridConfig:
    """Grid variant serving radius r: R_max covers 25r/16 and k_max scales as 1/r."""
    from dataclasses import replace

    return replace(
        base,
        radii=(r,),
        R_max=max(base.R_max * r, 2.0 * r),
        k_max=base.k_max / min(r, 1.0),
    )


def _spectral_norm(B: np.ndarray) -> float:
    if B.ndim == 1:
        return float(np.max(np.abs(B)))
    return float(np.sqrt(max(np.linalg.eigvalsh(B.T @ B)[-1], 0.0)))


MULT_OPS = {"chi_mu_m12": "chi10", "mu_p12_chi_mu_m12": "chi2", "chi": "chi"}


def mult_norms(loc: LocalizationOps) -> Dict[str, float]:
    """Operator norms (max over ell) of chi mu^{-1/2}, mu^{1/2} chi mu^{-1/2} and chi itself."""
    out = {}
    for key, name in MULT_OPS.items():
        out[key] = max(_spectral_norm(loc.block(name, ell)) for ell in range(loc.grid.ell_max + 1))
    return out


def mult_bound_check(r: float, grid: SectorGrid, refined: Optional[SectorGrid] = None, tol: float = 0.05) -> Dict[str, object]:
    """(||chi_r mu^{-1/2}||, ||mu^{1/2} chi_r mu^{-1/2}||), with a refinement comparison."""
    base = mult_norms(LocalizationOps(grid, r))
    out = {"norms": base, "finite": all(np.isfinite(v) for v in base.values())}
    if refined is not None:
        ref = mult_norms(LocalizationOps(refined, r))
        drift = {k: abs(ref[k] - base[k]) / max(abs(base[k]), 1e-300) for k in base}
        out["refined"] = ref
        out["drift"] = drift
        out["stable"] = all(d <= tol for d in drift.values())
    return out


# ---------------------------------------------------------------------------
# Suite


@dataclass
class SmoothingReport:
    r: float
    fit_bands: List[int]
    slopes: Dict[int, List[float]]
    prefactors: Dict[int, List[float]]
    m_defect: float
    monotone: Dict[int, bool]
    schur: List[Dict[str, float]]
    schur_slopes: Dict[str, float]
    domination: List[Dict[str, float]]
    mollifier: Dict[str, float]
    mult: Dict[str, object]
    series: List[Dict[str, float]]
    verdicts: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("slopes", "prefactors", "monotone"):
            d[key] = {str(k): v for k, v in d[key].items()}
        return d

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


def check_smoothing(
    cfg: GridConfig,
    r: float = 1.0,
    ells: Sequence[int] = tuple(range(7)),
    fit_bands: Optional[Sequence[int]] = None,
    radii: Sequence[float] = (0.5, 1.0, 2.0),
    slope_tol: float = 0.15,
    schur_tol: float = 0.2,
    uniform_tol: float = 0.2,
    refine: float = 1.5,
    grid: Optional[SectorGrid] = None,
) -> SmoothingReport:
    """Smoothing scalings, Schur constants and multiplier bounds at radius r.

    The fits use bands 3..n_bands-1.  Prefactor uniformity is the statement
    that the ell = 0 prefactor bounds every other sector within
    ``uniform_tol``: higher sectors carry extra powers of eps and their
    prefactors are smaller.
    """
    grid = build_grid(cfg) if grid is None else grid
    ells = [l for l in ells if l <= grid.ell_max]
    fit_bands = list(range(3, grid.n_bands)) if fit_bands is None else list(fit_bands)
    loc = LocalizationOps(grid, r)
    eps = np.array([grid.eps(i) for i in range(1, grid.n_bands + 1)])
    table = smoothing_table(r, grid, ells, loc=loc)
    idx = np.asarray(fit_bands) - 1
    slopes = {l: [scaling_fit(eps[idx], table[l][idx, q])[0] for q in range(4)] for l in ells}
    pref = {l: prefactors(table[l], eps, fit_bands).tolist() for l in ells}
    monotone = {l: bool(np.all(np.diff(table[l][2:], axis=0) < 0)) for l in ells}
    ell_m = min(2, grid.ell_max)
    m_vals = [smoothing_norms(fit_bands[0], ell_m, m, r, grid, loc) for m in range(-ell_m, ell_m + 1)]
    m_defect = float(np.max(np.ptp(np.array(m_vals), axis=0)))

    schur_rows = []
    for i in fit_bands:
        ra, rp = schur_bound(KernelSpec("a", r=r, band=i, kappa=grid.kappa)), schur_bound(KernelSpec("a_prime", r=r, band=i, kappa=grid.kappa))
        schur_rows.append({
            "i": i, "eps": float(eps[i - 1]),
            "C": ra.C, "C_prime": ra.C_prime, "bound": ra.bound,
            "C_a_prime": rp.C, "C_prime_a_prime": rp.C_prime, "bound_a_prime": rp.bound,
            "realized": realized_band_norm(loc, "chi2", i), "realized_a_prime": realized_band_norm(loc, "chi20", i),
            "sup_delta": max(ra.sup_refinement_delta, rp.sup_refinement_delta),
            "quad_delta": max(ra.quad_doubling_delta, rp.quad_doubling_delta),
        })
    e = np.array([row["eps"] for row in schur_rows])
    col = lambda key: np.array([row[key] for row in schur_rows])
    schur_slopes = {
        "C": scaling_fit(e, col("C"))[0],
        "C_prime": scaling_fit(e, col("C_prime"))[0],
        "bound": scaling_fit(e, col("bound"))[0],
        "C_a_prime": scaling_fit(e, col("C_a_prime"))[0],
        "C_prime_a_prime": scaling_fit(e, col("C_prime_a_prime"))[0],
    }

    # domination at other radii, each on a grid aligned to that radius
    domination = []
    mult_by_r = {}
    for rr in radii:
        if rr == r:
            g_r, loc_r = grid, loc
        else:
            g_r = build_grid(grid_for_radius(cfg, rr))
            loc_r = LocalizationOps(g_r, rr)
        mult_by_r[rr] = mult_norms(loc_r)
        for i in (fit_bands[0], fit_bands[-1]):
            for tag, name in (("a", "chi2"), ("a_prime", "chi20")):
                b = schur_bound(KernelSpec(tag, r=rr, band=i, kappa=grid.kappa)).bound
                domination.append({"r": rr, "i": i, "kernel": tag, "bound": b, "realized": realized_band_norm(loc_r, name, i)})
    for row in schur_rows:
        for tag, bk, rk in (("a", "bound", "realized"), ("a_prime", "bound_a_prime", "realized_a_prime")):
            domination.append({"r": r, "i": row["i"], "kernel": tag, "bound": row[bk], "realized": row[rk]})

    lam = 2.0
    mol = schur_bound(KernelSpec("mollifier", lam=lam))
    mollifier = {"lambda": lam, "C": mol.C, "C_prime": mol.C_prime, "bound": mol.bound}

    mult = mult_bound_check(r, grid, build_grid(cfg.refined(refine)))
    mult["by_radius"] = {str(rr): v for rr, v in mult_by_r.items()}
    chi_norms = [mult_by_r[rr]["chi_mu_m12"] for rr in sorted(radii)]
    mult["monotone_in_r"] = bool(np.all(np.diff(chi_norms) > 0))

    series = []
    for q, i in enumerate(range(1, grid.n_bands + 1)):
        row = {"i": i, "eps": float(eps[i - 1])}
        row.update({f"norm{k + 1}": float(table[ells[0]][i - 1, k]) for k in range(4)})
        srow = next((s for s in schur_rows if s["i"] == i), None)
        row.update({k: (srow[k] if srow else float("nan")) for k in ("C", "C_prime", "bound")})
        series.append(row)

    verdicts = {
        "smoothing_slopes": bool(all(abs(slopes[0][q] - p) <= slope_tol for q, p in enumerate(SMOOTHING_POWERS))),
        "prefactor_uniform": bool(all(pref[l][q] <= (1 + uniform_tol) * pref[0][q] for l in ells for q in range(4))),
        "m_independent": m_defect <= 1e-10,
        "monotone": all(monotone.values()),
        "schur_slopes": abs(schur_slopes["C"] - 2.5) <= schur_tol and abs(schur_slopes["C_prime"] + 0.5) <= schur_tol,
        "schur_dominates": all(d["bound"] >= d["realized"] for d in domination),
        "mollifier_exact": abs(mol.bound - lam) <= 0.01 * lam,
        "mult_bounded": bool(mult["finite"] and mult["stable"] and mult["monotone_in_r"] and abs(mult["norms"]["chi"] - 1.0) <= 1e-6),
    }
    return SmoothingReport(
        r=r, fit_bands=fit_bands, slopes=slopes, prefactors=pref, m_defect=m_defect, monotone=monotone,
        schur=schur_rows, schur_slopes=schur_slopes, domination=domination, mollifier=mollifier,
        mult=mult, series=series, verdicts=verdicts,
    )
