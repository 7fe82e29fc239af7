"""Kraus-Polley-Reents infravacuum maps on a sector grid.

Bands ``[eps_{i+1}, eps_i]`` with ``eps_i = 2^{-(i-1)} kappa`` carry the
profiles ``xi_i(k) = k^{-3/2}``; ``Q_i`` projects onto the normalized profile
times every spherical harmonic with ``ell <= i``.  The approximants are

    T_{1,n} = I + sum_{i<=n} (b_i - 1) Q_i,     T_{2,n} = I + sum_{i<=n} (1/b_i - 1) Q_i

with ``b_i = 1/i``.  Because the Q_i are mutually orthogonal, T_{1,n} T_{2,n} = I.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import ConfigError
from .grid import SectorGrid, SectorVector
from .oper import SectorOperator


def _grid_band(grid: SectorGrid, kappa: float, i: int) -> int:
    if i < 1:
        raise IndexError(f"band index must be >= 1, got {i}")
    hi = kappa * 2.0 ** (-(i - 1))
    try:
        return grid.band_for_edges(hi / 2, hi)
    except ValueError as exc:
        raise IndexError(f"band {i} (eps={hi:g}) is not resolved by the grid") from exc


def kpr_band(kappa: float, i: int, grid: SectorGrid) -> Tuple[float, float, np.ndarray]:
    """(eps_i, b_i, xi~_i) with xi~_i sampled on the k-nodes.

    The profile is normalized with the discrete quadrature norm so that the
    realized Q_i is an exact projector on the grid.
    """
    gi = _grid_band(grid, kappa, i)
    mask = grid.band_mask(gi)
    xi = np.where(mask, grid.k_nodes ** -1.5, 0.0)
    nrm = np.sqrt(np.sum(grid.k_weights * xi**2))
    return kappa * 2.0 ** (-(i - 1)), 1.0 / i, xi / nrm


def band_norm_sq(kappa: float, i: int, grid: SectorGrid) -> float:
    """Quadrature value of ||xi_i||^2 (analytically ln 2)."""
    mask = grid.band_mask(_grid_band(grid, kappa, i))
    return float(np.sum(grid.k_weights[mask] * grid.k_nodes[mask] ** -3))


def _rank_one(grid: SectorGrid, xi: np.ndarray) -> np.ndarray:
    u = grid.sqrt_w * xi
    return np.outer(u, u)


def projector_Q(i: int, grid: SectorGrid, kappa: float = None) -> SectorOperator:
    """Q_i = |xi~_i><xi~_i| (x) (projector onto ell <= i)."""
    kappa = grid.kappa if kappa is None else kappa
    if grid.ell_max < i:
        raise ConfigError(f"Q_{i} needs ell_max >= {i}, grid has {grid.ell_max}")
    _, _, xi = kpr_band(kappa, i, grid)
    p = _rank_one(grid, xi)
    zero = np.zeros(grid.nk)
    blocks = [p if ell <= i else zero for ell in range(grid.ell_max + 1)]
    return SectorOperator(blocks, grid.sqrt_w, label=f"Q_{i}")


@dataclass(eq=False)
class KprMap:
    grid: SectorGrid
    n: int
    kappa: float = None
    profiles: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kappa is None:
            self.kappa = self.grid.kappa
        if self.n < 1:
            raise ConfigError(f"truncation n must be >= 1, got {self.n}")
        if self.n > 1:
            if self.n > self.grid.ell_max:
                raise ConfigError(f"n={self.n} exceeds ell_max={self.grid.ell_max}")
            for i in range(1, self.n + 1):
                try:
                    _grid_band(self.grid, self.kappa, i)
                except IndexError as exc:
                    raise ConfigError(f"n={self.n}: {exc}") from exc
        self._ops: Dict[Tuple[int, bool], SectorOperator] = {}

    @classmethod
    def identity(cls, grid: SectorGrid) -> "KprMap":
        """n = 1: b_1 = 1 so both maps are the identity."""
        return cls(grid, 1)

    @property
    def is_identity(self) -> bool:
        return self.n == 1

    @property
    def eps(self) -> np.ndarray:
        return self.kappa * 2.0 ** (-np.arange(self.n, dtype=float))

    @property
    def b(self) -> np.ndarray:
        return 1.0 / np.arange(1, self.n + 1, dtype=float)

    def profile(self, i: int) -> np.ndarray:
        if i not in self.profiles:
            self.profiles[i] = kpr_band(self.kappa, i, self.grid)[2]
        return self.profiles[i]

    def projector(self, i: int) -> SectorOperator:
        return projector_Q(i, self.grid, self.kappa)

    def coefficients(self, j: int, squared: bool = False) -> np.ndarray:
        """c_i with T = I + sum c_i Q_i, for i = 1..n."""
        if j not in (1, 2):
            raise ValueError(f"j must be 1 or 2, got {j}")
        d = self.b if j == 1 else 1.0 / self.b
        return (d**2 if squared else d) - 1.0

    def operator(self, j: int, squared: bool = False) -> SectorOperator:
        key = (j, squared)
        if key not in self._ops:
            self._ops[key] = build_T(j, self, squared)
        return self._ops[key]

    def apply_bandwise(self, j: int, v: SectorVector, squared: bool = False) -> SectorVector:
        """T_j v (or T_j^2 v) evaluated band by band, no dense operator."""
        c = self.coefficients(j, squared)
        w = self.grid.k_weights
        out = {}
        for (ell, m), x in v.coeffs.items():
            y = np.array(x, dtype=np.result_type(x, float))
            for i in range(max(ell, 1), self.n + 1):
                if c[i - 1] == 0.0:
                    continue
                xi = self.profile(i)
                y = y + c[i - 1] * xi * np.sum(w * xi * x)
            out[(ell, m)] = y
        return v.with_coeffs(out)


def build_T(j: int, kmap: KprMap, squared: bool = False) -> SectorOperator:
    """T_{j,n}, or its square I + sum (d_i^2 - 1) Q_i with d = b (j=1) or 1/b (j=2)."""
    grid = kmap.grid
    c = kmap.coefficients(j, squared)
    blocks: List[np.ndarray] = []
    ones = np.ones(grid.nk)
    for ell in range(grid.ell_max + 1):
        terms = [(i, c[i - 1]) for i in range(max(ell, 1), kmap.n + 1) if c[i - 1] != 0.0]
        if not terms:
            blocks.append(ones)
            continue
        m = np.eye(grid.nk)
        for i, ci in terms:
            m += ci * _rank_one(grid, kmap.profile(i))
        blocks.append(m)
    name = f"T_{j},{kmap.n}" + ("^2" if squared else "")
    return SectorOperator(blocks, grid.sqrt_w, label=name)



def algebra_check(kmap: KprMap, rank_tol: float = 1e-8) -> dict:
    """Exact-algebra diagnostics of a KPR map.

    Returns the residual of T1 T2 = I (defects are blockwise Frobenius
    norms, which dominate operator norms), the projector and self-adjointness
    defects and ranks of each Q_i (rank counts (2 ell + 1) copies per
    sector), the band norms ||xi_i||^2 and the spectral bottom of T1^2.
    """
    from .oper import compose

    def defect(A: SectorOperator) -> float:
        # blockwise Frobenius norm: an upper bound on the operator norm
        return max(float(np.linalg.norm(b)) if b.ndim == 2 else float(np.max(np.abs(b), initial=0.0)) for b in A.blocks)

    grid = kmap.grid
    T1, T2 = kmap.operator(1), kmap.operator(2)
    eye = SectorOperator.identity(grid.sqrt_w, grid.ell_max)
    resid = max(defect(compose(T1, T2) - eye), defect(compose(T2, T1) - eye))
    q_rows = []
    for i in range(1, kmap.n + 1):
        if i > grid.ell_max:
            break
        Q = kmap.projector(i)
        idem = defect(compose(Q, Q) - Q)
        herm = defect(Q - Q.adjoint())
        rank = 0
        seen: Dict[int, int] = {}  # sectors share one block object
        for ell, b in enumerate(Q.blocks):
            if id(b) not in seen:
                if b.ndim == 2:
                    sv = np.linalg.svd(b, compute_uv=False)
                    seen[id(b)] = int(np.sum(sv > rank_tol * max(sv[0], 1.0)))
                else:
                    seen[id(b)] = int(np.sum(np.abs(b) > rank_tol))
            rank += (2 * ell + 1) * seen[id(b)]
        q_rows.append({"i": i, "idempotent": idem, "hermitian": herm, "rank": rank, "expected_rank": (i + 1) ** 2})
    band = {}
    for i in range(1, grid.n_bands + 1):
        try:
            band[i] = band_norm_sq(kmap.kappa, i, grid)
        except IndexError:
            break
    sq = kmap.operator(1, squared=True)
    bottom = min(float(np.min(b)) if b.ndim == 1 else float(np.linalg.eigvalsh(b)[0]) for b in sq.blocks)
    return {
        "T1T2_residual": float(resid),
        "projectors": q_rows,
        "projector_defect": max([max(r["idempotent"], r["hermitian"]) for r in q_rows] or [0.0]),
        "ranks_ok": all(r["rank"] == r["expected_rank"] for r in q_rows),
        "band_norm_sq": band,
        "band_norm_defect": float(max(abs(v - np.log(2.0)) for v in band.values())),
        "inf_spec_T1_sq": bottom,
        "inf_spec_expected": 1.0 / kmap.n**2,
    }
