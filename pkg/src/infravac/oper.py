"""Block-diagonal operators over angular sectors.

A :class:`SectorOperator` holds one matrix per ell.  Blocks are stored in
*orthonormal coordinates*: if ``A`` acts on node values of the k^2 dk
weighted space, the stored block is ``W^{1/2} A W^{-1/2}``.  Adjoints,
singular values and square roots are then the plain Euclidean ones, which
is exactly the weighted-inner-product structure of L^2(R^3).

A block may be a 1-D array, meaning a diagonal matrix.  Every m of a given
ell sees the same block; traces carry the multiplicity 2*ell+1.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla

from .errors import DegeneratePencilError, GridMismatchError, NotPSDError, NumericalError

Block = np.ndarray


def _dense(b: Block) -> np.ndarray:
    return np.diag(b) if b.ndim == 1 else b


class SectorOperator:
    def __init__(self, blocks: Sequence[Block], sqrt_w: np.ndarray, label: str = ""):
        self.blocks: List[Block] = [np.asarray(b) for b in blocks]
        self.sqrt_w = sqrt_w
        self.label = label
        n = sqrt_w.size
        for ell, b in enumerate(self.blocks):
            if b.shape not in ((n,), (n, n)):
                raise GridMismatchError(f"block {ell} has shape {b.shape}, expected ({n},) or ({n}, {n})")

    @property
    def ell_max(self) -> int:
        return len(self.blocks) - 1

    @property
    def n(self) -> int:
        return self.sqrt_w.size

    def __repr__(self) -> str:
        return f"SectorOperator({self.label!r}, ell_max={self.ell_max}, n={self.n})"

    def dense(self, ell: int) -> np.ndarray:
        return _dense(self.blocks[ell])

    def node_matrix(self, ell: int) -> np.ndarray:
        """Block acting on raw node values: W^{-1/2} A~ W^{1/2}."""
        return self.dense(ell) * (self.sqrt_w[None, :] / self.sqrt_w[:, None])

    def adjoint(self) -> "SectorOperator":
        blocks = [np.conj(b) if b.ndim == 1 else b.conj().T for b in self.blocks]
        return SectorOperator(blocks, self.sqrt_w, label=f"({self.label})^*")

    def _check(self, other: "SectorOperator") -> None:
        if self.ell_max != other.ell_max:
            raise GridMismatchError(f"ell_max mismatch: {self.ell_max} vs {other.ell_max}")
        if self.sqrt_w is not other.sqrt_w and not np.array_equal(self.sqrt_w, other.sqrt_w):
            raise GridMismatchError("operators live on different grids")

    def _combine(self, other: "SectorOperator", sign: float) -> "SectorOperator":
        self._check(other)
        out = []
        for a, b in zip(self.blocks, other.blocks):
            if a.ndim == 1 and b.ndim == 1:
                out.append(a + sign * b)
            else:
                out.append(_dense(a) + sign * _dense(b))
        return SectorOperator(out, self.sqrt_w, label=f"{self.label}{'+' if sign > 0 else '-'}{other.label}")

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SectorOperator") -> "SectorOperator":
        return self._combine(other, -1.0)

    def __mul__(self, alpha) -> "SectorOperator":
        return SectorOperator([alpha * b for b in self.blocks], self.sqrt_w, label=f"{alpha}*{self.label}")

    __rmul__ = __mul__

    def __matmul__(self, other: "SectorOperator") -> "SectorOperator":
        return compose(self, other)

    @classmethod
    def identity(cls, sqrt_w: np.ndarray, ell_max: int) -> "SectorOperator":
        return cls([np.ones(sqrt_w.size)] * (ell_max + 1), sqrt_w, label="I")

    @classmethod
    def zeros(cls, sqrt_w: np.ndarray, ell_max: int) -> "SectorOperator":
        return cls([np.zeros(sqrt_w.size)] * (ell_max + 1), sqrt_w, label="0")

    @classmethod
    def from_node_matrices(cls, mats: Sequence[np.ndarray], sqrt_w: np.ndarray, label: str = "") -> "SectorOperator":
        blocks = [m * (sqrt_w[:, None] / sqrt_w[None, :]) for m in mats]
        return cls(blocks, sqrt_w, label)


def _mul(a: Block, b: Block) -> Block:
    if a.ndim == 1 and b.ndim == 1:
        return a * b
    if a.ndim == 1:
        return a[:, None] * b
    if b.ndim == 1:
        return a * b[None, :]
    return a @ b


def _adj(b: Block) -> Block:
    return np.conj(b) if b.ndim == 1 else b.conj().T


def compose(A: SectorOperator, B: SectorOperator, adjoint_A: bool = False, adjoint_B: bool = False) -> SectorOperator:
    """Blockwise product A^(*) B^(*), adjoints taken in the weighted inner product."""
    A._check(B)
    blocks = []
    for a, b in zip(A.blocks, B.blocks):
        blocks.append(_mul(_adj(a) if adjoint_A else a, _adj(b) if adjoint_B else b))
    la = f"{A.label}^*" if adjoint_A else A.label
    lb = f"{B.label}^*" if adjoint_B else B.label
    return SectorOperator(blocks, A.sqrt_w, label=f"{la}.{lb}")


def apply(A: SectorOperator, v):
    """Apply A to a SectorVector; each (ell, m) coefficient sees block ell."""
    if v.grid.nk != A.n or not np.array_equal(v.grid.sqrt_w, A.sqrt_w):
        raise GridMismatchError("vector and operator live on different grids")
    sw = A.sqrt_w
    out = {}
    for (ell, m), c in v.coeffs.items():
        if ell > A.ell_max:
            raise GridMismatchError(f"vector has sector ell={ell} beyond operator ell_max={A.ell_max}")
        b = A.blocks[ell]
        y = b * (sw * c) if b.ndim == 1 else b @ (sw * c)
        out[(ell, m)] = y / sw
    return v.with_coeffs(out)


def _singular_values(b: Block) -> np.ndarray:
    if not np.all(np.isfinite(b)):
        raise NumericalError("operator block has non-finite entries")
    if b.ndim == 1:
        return np.sort(np.abs(b))[::-1]
    return np.linalg.svd(b, compute_uv=False)


def norm(A: SectorOperator, kind: str = "operator") -> float:
    """Operator, Hilbert-Schmidt or trace norm on L^2(R^3), m-multiplicity included."""
    if kind not in ("operator", "hilbert_schmidt", "trace"):
        raise ValueError(f"unknown norm kind {kind!r}")
    if kind == "operator":
        return float(max(_singular_values(b)[0] if b.size else 0.0 for b in A.blocks))
    total = 0.0
    for ell, b in enumerate(A.blocks):
        s = _singular_values(b)
        total += (2 * ell + 1) * (np.sum(s**2) if kind == "hilbert_schmidt" else np.sum(s))
    return float(np.sqrt(total)) if kind == "hilbert_schmidt" else float(total)


def _herm_sqrt(h: np.ndarray, tau_psd: Optional[float], scale: float) -> np.ndarray:
    h = 0.5 * (h + h.conj().T)
    lam, vec = np.linalg.eigh(h)
    tol = (1e-10 if tau_psd is None else tau_psd) * scale
    if lam.size and lam[0] < -tol:
        raise NotPSDError(f"eigenvalue {lam[0]:.3e} below -{tol:.3e}")
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def sqrt_psd(A: Union[SectorOperator, np.ndarray], metric: Optional[np.ndarray] = None, tau_psd: Optional[float] = None):
    """PSD square root.

    For a SectorOperator the metric is the quadrature weight structure
    already built into the blocks.  For a plain matrix ``A`` that is
    self-adjoint w.r.t. a Gram ``metric`` (i.e. ``metric @ A`` Hermitian),
    the root is taken in that inner product.  ``tau_psd`` is relative to
    the operator norm.
    """
    if isinstance(A, SectorOperator):
        scale = max(norm(A, "operator"), np.finfo(float).tiny)
        blocks = []
        for b in A.blocks:
            if b.ndim == 1:
                if np.min(b.real) < -(1e-10 if tau_psd is None else tau_psd) * scale:
                    raise NotPSDError(f"eigenvalue {np.min(b.real):.3e} is negative")
                blocks.append(np.sqrt(np.clip(b.real, 0.0, None)))
            else:
                blocks.append(_herm_sqrt(b, tau_psd, scale))
        return SectorOperator(blocks, A.sqrt_w, label=f"sqrt({A.label})")
    A = np.asarray(A)
    if metric is None:
        scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
        return _herm_sqrt(A, tau_psd, scale)
    L = np.linalg.cholesky(metric)
    As = L.conj().T @ A @ np.linalg.inv(L.conj().T)
    scale = max(np.linalg.norm(As, 2), np.finfo(float).tiny)
    root = _herm_sqrt(As, tau_psd, scale)
    return np.linalg.solve(L.conj().T, root @ L.conj().T)


def _pencil_block(a: np.ndarray, b: np.ndarray, thresh: float) -> Optional[np.ndarray]:
    b = 0.5 * (b + b.conj().T)
    a = 0.5 * (a + a.conj().T)
    lam, vec = np.linalg.eigh(b)
    keep = lam >= thresh
    if thresh <= 0 or not np.any(keep):
        return None
    v = vec[:, keep] / np.sqrt(lam[keep])[None, :]
    return np.linalg.eigvalsh(v.conj().T @ a @ v)


def gen_eig_extrema(A, B, tau_rng: float = 1e-10) -> Tuple[float, float]:
    """Extreme generalized eigenvalues of (A, B) on the range where B >= tau_rng*||B||.

    They are the best constants in lam_min*B <= A <= lam_max*B there.
    """
    if isinstance(A, SectorOperator):
        A._check(B)
        pairs = [(_dense(a), _dense(b)) for a, b in zip(A.blocks, B.blocks)]
        bnorm = norm(B, "operator")
    else:
        pairs = [(np.asarray(A), np.asarray(B))]
        bnorm = np.linalg.norm(pairs[0][1], 2)
    if not bnorm > 0:
        raise DegeneratePencilError("B vanishes")
    thresh = tau_rng * bnorm
    lo, hi, seen = np.inf, -np.inf, False
    for a, b in pairs:
        ev = _pencil_block(a, b, thresh)
        if ev is None:
            continue
        seen = True
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    if not seen:
        raise DegeneratePencilError("no eigenvalue of B above threshold")
    return float(lo), float(hi)


def hermitian_defect(A: SectorOperator) -> float:
    worst = 0.0
    for b in A.blocks:
        if b.ndim == 1:
            worst = max(worst, float(np.max(np.abs(b.imag))) if np.iscomplexobj(b) else 0.0)
        else:
            worst = max(worst, float(np.max(np.abs(b - b.conj().T))))
    return worst


def dist(A: SectorOperator, B: SectorOperator) -> float:
    """Operator-norm distance, max over blocks."""
    return norm(A - B, "operator")


def cholesky_whitener(gram: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Coefficient matrix C with C^H gram C = I, from a pivoted Cholesky.

    Columns are dropped once the pivot falls below ``rtol`` times the
    largest diagonal entry, so near-dependent members are discarded rather
    than amplified.
    """
    g = 0.5 * (gram + gram.conj().T)
    n = g.shape[0]
    if np.iscomplexobj(g):
        c, piv, rank, info = sla.lapack.zpstrf(g, lower=1, tol=-1.0)
    else:
        c, piv, rank, info = sla.lapack.dpstrf(g, lower=1, tol=-1.0)
    piv = piv - 1
    L = np.tril(c)
    d = np.abs(np.diag(L)) ** 2
    scale = np.max(np.real(np.diag(g))) if n else 1.0
    r = int(np.sum(d[:rank] > rtol * scale))
    Lr = L[:r, :r]
    C = np.zeros((n, r), dtype=np.result_type(g, float))
    C[piv[:r], :] = sla.solve_triangular(Lr, np.eye(r), lower=True, trans="C")
    return C
