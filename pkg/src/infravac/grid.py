"""Sector-decomposed discretization of the one-particle space.

L^2(R^3) is split as L^2(R_+, k^2 dk) (x) L^2(S^2).  Each angular sector
(ell, m) carries a radial coefficient array over a composite Gauss-Legendre
momentum grid whose panels coincide with the dyadic band edges
``eps_i = 2**-(i-1) * kappa``.  Real spherical harmonics are used for the
angular factor, so rotation-invariant operators act identically on every m
of a given ell.

Momentum coefficients are stored *phase stripped*: the coefficient ``c`` in
sector ell stands for the momentum function ``(-i)**ell * c(|k|) Y_lm(k^)``.
With this convention the spherical Bessel matrices stay real and complex
conjugation in configuration space is plain complex conjugation of the
stored coefficients.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import spherical_jn

from .errors import AlignmentError, ConfigError, GridMismatchError, ResourceError
from .oper import SectorOperator

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

Key = Tuple[int, int]


@dataclass(frozen=True)
class GridConfig:
    """Discretization parameters.

    ``radii`` lists the localization radii r the grid must serve; position
    panels break at r, 5r/4 and 25r/16 so the piecewise-polynomial cutoffs
    are integrated panel by panel.
    """

    kappa: float = 1.0
    n_bands: int = 10
    pts_per_band: int = 16
    k_max: float = 80.0
    ell_max: int = 14
    r_pts: int = 320
    R_max: float = 2.0
    radii: Tuple[float, ...] = (1.0,)
    uv_panel_width: float = 3.0
    tau_grid: float = 1e-6
    memory_cap_mb: float = 2048.0

    def validate(self) -> None:
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa}")
        for name in ("n_bands", "pts_per_band", "r_pts"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ell_max < 0:
            raise ConfigError(f"ell_max must be >= 0, got {self.ell_max}")
        if self.k_max < self.kappa:
            raise ConfigError(f"k_max={self.k_max} is below kappa={self.kappa}")
        if not self.R_max > 0:
            raise ConfigError(f"R_max must be positive, got {self.R_max}")
        if not self.uv_panel_width > 0:
            raise ConfigError("uv_panel_width must be positive")
        for r in self.radii:
            if not r > 0:
                raise ConfigError(f"localization radius must be positive, got {r}")

    @property
    def k_min(self) -> float:
        """Smallest resolved band edge eps_{n_bands+1}."""
        return self.kappa * 2.0 ** (-self.n_bands)

    def refined(self, factor: float = 1.5) -> "GridConfig":
        """Same physical grid with every panel carrying ``factor`` times more nodes."""
        return dataclasses.replace(
            self,
            pts_per_band=int(math.ceil(self.pts_per_band * factor)),
            r_pts=int(math.ceil(self.r_pts * factor)),
        )


def _gl_panel(a: float, b: float, n: int, log: bool = False):
    x, w = leggauss(n)
    if log:
        la, lb = math.log(a), math.log(b)
        u = 0.5 * (lb - la) * x + 0.5 * (lb + la)
        k = np.exp(u)
        return k, 0.5 * (lb - la) * w * k
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _position_breaks(cfg: GridConfig) -> np.ndarray:
    pts = {0.0, float(cfg.R_max)}
    for r in cfg.radii:
        for c in (r, 1.25 * r, 1.5625 * r):
            if c < cfg.R_max:
                pts.add(float(c))
    return np.array(sorted(pts))


@dataclass(eq=False)
class SectorGrid:
    config: GridConfig
    k_nodes: np.ndarray
    k_weights: np.ndarray  # include k^2
    band_index: np.ndarray  # 1..n_bands inside the IR bands, 0 above kappa
    band_edges: np.ndarray  # eps_1 .. eps_{n_bands+1}
    r_nodes: np.ndarray
    r_weights: np.ndarray  # include s^2
    r_breaks: np.ndarray
    bessel: list  # J_ell[a, b] = sqrt(2/pi) j_ell(k_a s_b)
    roundtrip_defect: np.ndarray = field(default=None)

    @property
    def nk(self) -> int:
        return self.k_nodes.size

    @property
    def nr(self) -> int:
        return self.r_nodes.size

    @property
    def ell_max(self) -> int:
        return self.config.ell_max

    @property
    def n_bands(self) -> int:
        return self.config.n_bands

    @property
    def kappa(self) -> float:
        return self.config.kappa

    @property
    def sqrt_w(self) -> np.ndarray:
        return self._sqrt_w

    def __post_init__(self):
        self._sqrt_w = np.sqrt(self.k_weights)
        self._sqrt_wr = np.sqrt(self.r_weights)
        h = hashlib.sha256()
        for arr in (self.k_nodes, self.k_weights, self.r_nodes, self.r_weights):
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        h.update(str(self.ell_max).encode())
        self.fingerprint = h.hexdigest()[:16]

    def eps(self, i: int) -> float:
        """Band edge eps_i = 2^{-(i-1)} kappa."""
        return self.kappa * 2.0 ** (-(i - 1))

    def band_mask(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.n_bands:
            raise IndexError(f"band {i} not resolved (1..{self.n_bands})")
        return self.band_index == i

    def band_for_edges(self, lo: float, hi: float) -> int:
        """Grid band index whose edges are [lo, hi]; raises AlignmentError otherwise."""
        for i in range(1, self.n_bands + 1):
            if math.isclose(self.eps(i), hi, rel_tol=1e-12) and math.isclose(
                self.eps(i + 1), lo, rel_tol=1e-12
            ):
                return i
        raise AlignmentError(f"[{lo}, {hi}] is not a resolved band of this grid")

    def is_aligned(self, r: float) -> bool:
        need = [r, 1.25 * r, 1.5625 * r]
        return all(np.any(np.isclose(self.r_breaks, c, rtol=1e-12, atol=0)) for c in need)

    def check_same(self, other: "SectorGrid") -> None:
        if other is not self and other.fingerprint != self.fingerprint:
            raise GridMismatchError("objects live on different grids")

    def sym_bessel(self, ell: int) -> np.ndarray:
        """W_k^{1/2} J_ell W_r^{1/2}: the transform in orthonormal coordinates."""
        return self._sqrt_w[:, None] * self.bessel[ell] * self._sqrt_wr[None, :]

    def norm_r(self, g: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.r_weights * np.abs(g) ** 2)))

    def diagnostics(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "nk": self.nk,
            "nr": self.nr,
            "k_min": float(self.config.k_min),
            "k_max": float(self.config.k_max),
            "band_edges": [float(e) for e in self.band_edges],
            "r_breaks": [float(b) for b in self.r_breaks],
            "roundtrip_defect": [float(d) for d in self.roundtrip_defect],
            "roundtrip_defect_max": float(np.max(self.roundtrip_defect)),
            "tau_grid": self.config.tau_grid,
        }


def build_grid(cfg: GridConfig) -> SectorGrid:
    """Assemble the band-aligned momentum grid, position grid and Bessel matrices."""
    cfg.validate()
    p = int(cfg.pts_per_band)
    edges = cfg.kappa * 2.0 ** (-np.arange(cfg.n_bands + 1, dtype=float))

    ks, ws, bands = [], [], []
    for i in range(cfg.n_bands, 0, -1):
        k, w = _gl_panel(edges[i], edges[i - 1], p, log=True)
        ks.append(k)
        ws.append(w * k**2)
        bands.append(np.full(p, i, dtype=int))
    if cfg.k_max > cfg.kappa:
        n_uv = int(math.ceil((cfg.k_max - cfg.kappa) / cfg.uv_panel_width - 1e-12))
        uv_edges = np.linspace(cfg.kappa, cfg.k_max, n_uv + 1)
        for a, b in zip(uv_edges[:-1], uv_edges[1:]):
            k, w = _gl_panel(a, b, p)
            ks.append(k)
            ws.append(w * k**2)
            bands.append(np.zeros(p, dtype=int))
    k_nodes = np.concatenate(ks)
    k_weights = np.concatenate(ws)
    band_index = np.concatenate(bands)

    breaks = _position_breaks(cfg)
    n_panels = max(len(breaks) - 1, int(round(cfg.r_pts / p)))
    h = cfg.R_max / n_panels
    rs, rws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil((b - a) / h - 1e-9)))
        sub = np.linspace(a, b, m + 1)
        for c, d in zip(sub[:-1], sub[1:]):
            s, w = _gl_panel(c, d, p)
            rs.append(s)
            rws.append(w * s**2)
    r_nodes = np.concatenate(rs)
    r_weights = np.concatenate(rws)

    nbytes = (cfg.ell_max + 1) * (k_nodes.size**2 * 16 + k_nodes.size * r_nodes.size * 8)
    if nbytes / 2**20 > cfg.memory_cap_mb:
        raise ResourceError(
            f"grid needs ~{nbytes / 2**20:.0f} MiB per operator, cap is {cfg.memory_cap_mb} MiB"
        )

    kr = np.outer(k_nodes, r_nodes)
    bessel = [SQRT_2_OVER_PI * spherical_jn(ell, kr) for ell in range(cfg.ell_max + 1)]
    grid = SectorGrid(
        config=cfg,
        k_nodes=k_nodes,
        k_weights=k_weights,
        band_index=band_index,
        band_edges=edges,
        r_nodes=r_nodes,
        r_weights=r_weights,
        r_breaks=breaks,
        bessel=bessel,
    )
    grid.roundtrip_defect = np.array([_roundtrip_defect(grid, ell) for ell in range(cfg.ell_max + 1)])
    return grid


def _probe_profiles(grid: SectorGrid, ell: int) -> Iterable[np.ndarray]:
    s = grid.r_nodes
    supports = set()
    for r in grid.config.radii:
        supports.update(c for c in (r, 1.25 * r) if c <= grid.config.R_max)
    for rho in sorted(supports or {grid.config.R_max / 2}):
        t = np.clip(s / rho, 0.0, 1.0)
        yield t**ell * (1 - t**2) ** 16
        yield t ** (ell + 2) * (1 - t**2) ** 16


def _roundtrip_defect(grid: SectorGrid, ell: int) -> float:
    # inverse o forward on smooth localized profiles (the resolved subspace)
    worst = 0.0
    for g in _probe_profiles(grid, ell):
        back = sb_transform(grid, ell, sb_transform(grid, ell, g, "forward"), "inverse")
        worst = max(worst, grid.norm_r(back - g) / grid.norm_r(g))
    return worst


def sb_transform(grid: SectorGrid, ell: int, profile: np.ndarray, direction: str = "forward") -> np.ndarray:
    """Spherical Bessel transform of one radial profile.

    forward: ``(B g)(k) = sqrt(2/pi) int g(s) j_ell(ks) s^2 ds`` (r-nodes -> k-nodes).
    inverse: the quadrature adjoint, k-nodes -> r-nodes.
    """
    if not 0 <= ell <= grid.ell_max:
        raise IndexError(f"ell={ell} outside 0..{grid.ell_max}")
    profile = np.asarray(profile)
    if direction == "forward":
        if profile.shape[-1] != grid.nr:
            raise GridMismatchError(f"profile has {profile.shape[-1]} samples, grid has {grid.nr} r-nodes")
        return grid.bessel[ell] @ (grid.r_weights * profile)
    if direction == "inverse":
        if profile.shape[-1] != grid.nk:
            raise GridMismatchError(f"profile has {profile.shape[-1]} samples, grid has {grid.nk} k-nodes")
        return grid.bessel[ell].T @ (grid.k_weights * profile)
    raise ValueError(f"direction must be 'forward' or 'inverse', not {direction!r}")


def mu_power(grid: SectorGrid, alpha: float) -> SectorOperator:
    """Multiplication by |k|**alpha, identical in every sector."""
    d = grid.k_nodes**alpha if alpha != 0 else np.ones(grid.nk)
    return SectorOperator([d] * (grid.ell_max + 1), grid.sqrt_w, label=f"mu^{alpha:g}")


def radial_mult_block(grid: SectorGrid, ell: int, g: np.ndarray) -> np.ndarray:
    """Symmetrized momentum matrix of multiplication by g(|x|) in sector ell."""
    bj = grid.sym_bessel(ell)
    return (bj * g[None, :]) @ bj.T


def mult_radial(grid: SectorGrid, g: np.ndarray, label: str = "mult") -> SectorOperator:
    """Momentum realization B_ell diag(g) B_ell^* of multiplication by g(|x|)."""
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.nr,):
        raise GridMismatchError(f"profile has shape {g.shape}, expected ({grid.nr},)")
    blocks = [radial_mult_block(grid, ell, g) for ell in range(grid.ell_max + 1)]
    return SectorOperator(blocks, grid.sqrt_w, label=label)


def smooth_cutoff(s: np.ndarray, r: float, plateau: Optional[float] = None) -> np.ndarray:
    """C^2 piecewise-quintic bump: 1 on [0, plateau], 0 beyond 5*plateau/4.

    ``plateau`` defaults to r.  The decay uses the smoothstep 10t^3-15t^4+6t^5.
    """
    p = r if plateau is None else plateau
    t = np.clip((np.asarray(s, dtype=float) - p) / (0.25 * p), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def lm_keys(ell_max: int) -> list:
    return [(ell, m) for ell in range(ell_max + 1) for m in range(-ell, ell + 1)]


class SectorVector:
    """One-particle vector: per-(ell, m) radial coefficients on the k-nodes."""

    def __init__(self, grid: SectorGrid, coeffs: Mapping[Key, np.ndarray], phase_stripped: bool = True):
        self.grid = grid
        self.phase_stripped = phase_stripped
        self.coeffs: Dict[Key, np.ndarray] = {}
        for (ell, m), c in coeffs.items():
            if not (0 <= ell <= grid.ell_max and -ell <= m <= ell):
                raise KeyError(f"invalid sector {(ell, m)}")
            c = np.asarray(c)
            if c.shape != (grid.nk,):
                raise GridMismatchError(f"sector {(ell, m)} has shape {c.shape}, expected ({grid.nk},)")
            self.coeffs[(ell, m)] = c

    def __getitem__(self, key: Key) -> np.ndarray:
        return self.coeffs.get(key, np.zeros(self.grid.nk))

    def keys(self):
        return self.coeffs.keys()

    def with_coeffs(self, coeffs: Mapping[Key, np.ndarray]) -> "SectorVector":
        return SectorVector(self.grid, coeffs, self.phase_stripped)

    @property
    def is_real(self) -> bool:
        """Invariant under configuration-space conjugation (stripped coefficients real)."""
        return all(not np.iscomplexobj(c) or np.all(c.imag == 0) for c in self.coeffs.values())

    def conj(self) -> "SectorVector":
        return self.with_coeffs({k: np.conj(c) for k, c in self.coeffs.items()})

    def with_phase(self) -> "SectorVector":
        """True momentum coefficients, (-i)^ell folded in."""
        if not self.phase_stripped:
            return self
        return SectorVector(
            self.grid, {k: (-1j) ** k[0] * c for k, c in self.coeffs.items()}, phase_stripped=False
        )

    def _compatible(self, other: "SectorVector") -> None:
        self.grid.check_same(other.grid)
        if self.phase_stripped != other.phase_stripped:
            raise GridMismatchError("mixing phase-stripped and phase-folded vectors")

    def inner(self, other: "SectorVector") -> complex:
        """<self, other>, antilinear in self."""
        self._compatible(other)
        w = self.grid.k_weights
        total = 0.0 + 0.0j
        for key in sorted(set(self.coeffs) & set(other.coeffs)):
            total += np.sum(w * np.conj(self.coeffs[key]) * other.coeffs[key])
        return complex(total)

    def norm_sq(self) -> float:
        w = self.grid.k_weights
        return float(sum(np.sum(w * np.abs(self.coeffs[k]) ** 2) for k in sorted(self.coeffs)))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def __add__(self, other: "SectorVector") -> "SectorVector":
        self._compatible(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return self.with_coeffs(out)

    def __sub__(self, other: "SectorVector") -> "SectorVector":
        return self + other * -1.0

    def __mul__(self, alpha) -> "SectorVector":
        return self.with_coeffs({k: alpha * c for k, c in self.coeffs.items()})

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: SectorGrid) -> "SectorVector":
        return cls(grid, {})
