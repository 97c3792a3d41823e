"""Quadratic measurement terms f' L f and their degree-limited rank.

A symmetric K x K matrix L enters measurements only through half-vectorized
rows: diagonal products f_k^2 and doubled off-diagonal products 2 f_j f_k.
When the basis lives in a polynomial ring, all pairwise products f_j f_k
span a small function space, so the quadratic block can never exceed that
span's dimension in rank (2K - 1 for monomials and the standard odd-K
trigonometric basis) no matter how many measurements are taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import BasisFamily, basis_matrix, half_vec_pairs, quadratic_product_space
from .bilinear import (DEFAULT_RANK_TOL, BilinearMeasurementSet, assemble_gamma,
                       numerical_rank)

SYMMETRY_TOL = 1e-12


def _svech_weights(K: int) -> np.ndarray:
    return np.array([1.0 if j == k else 2.0 for j, k in half_vec_pairs(K)])


def svech(matrix, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Half-vectorize a symmetric matrix: upper triangle, unscaled, k-major.

    Ordering matches :func:`bilinear_recovery.basis.half_vec_pairs`:
    (0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...
    """
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    scale = max(1.0, float(np.abs(arr).max())) if arr.size else 1.0
    if np.abs(arr - arr.T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return arr.T[np.tril_indices(arr.shape[0])].copy()


def svech_inverse(values, K: int) -> np.ndarray:
    """Rebuild the symmetric K x K matrix from its half-vectorization."""
    values = np.asarray(values).ravel()
    pairs = half_vec_pairs(K)
    if values.size != len(pairs):
        raise ValueError(f"expected {len(pairs)} entries, got {values.size}")
    out = np.zeros((K, K), dtype=values.dtype)
    for value, (j, k) in zip(values, pairs):
        out[j, k] = value
        out[k, j] = value
    return out


def quad_row(f) -> np.ndarray:
    """Measurement row for the quadratic term: quad_row(f) . svech(L) = f' L f.

    Diagonal entries are f_k^2, off-diagonals 2 f_j f_k (the factor 2 lives
    here so svech itself stays a plain flattening).
    """
    f = np.asarray(f).ravel()
    outer = np.outer(f, f)
    flat = outer.T[np.tril_indices(f.size)]
    return _svech_weights(f.size) * flat


@dataclass(frozen=True)
class QuadraticBlock:
    """Stacked quadratic measurement rows with the basis's rank budget."""

    rows: np.ndarray
    basis: BasisFamily
    degree_budget: int


def quadratic_block(basis: BasisFamily, times) -> QuadraticBlock:
    """Assemble the N x K(K+1)/2 quadratic block at the given times."""
    fs = basis_matrix(basis, times)
    rows = np.stack([quad_row(f) for f in fs]) if fs.shape[0] else \
        np.zeros((0, basis.K * (basis.K + 1) // 2))
    return QuadraticBlock(rows=rows, basis=basis,
                          degree_budget=max_quadratic_rank(basis))


def max_quadratic_rank(basis: BasisFamily) -> int:
    """Dimension of the span of all products f_j f_k.

    2K - 1 for monomials, complex exponentials and the standard
    trigonometric basis with odd K; for even K >= 4 the truncated
    trigonometric basis reaches 2K distinct harmonics.  This caps the
    numerical rank of any quadratic block.  Raises for bases without
    ring-degree metadata (integrated sinc).
    """
    return quadratic_product_space(basis).dim


def assemble_stacked(ms: BilinearMeasurementSet, quad_scale: float = 1.0) -> np.ndarray:
    """Bilinear rows side by side with scaled quadratic rows.

    Row n is [vec(g_n f_n')' | quad_scale * quad_row(f_n)]; the
    localization application passes quad_scale = -1/2.
    """
    gamma = assemble_gamma(ms)
    fs = ms.f_matrix()
    n_pairs = ms.K * (ms.K + 1) // 2
    if ms.N == 0:
        return np.zeros((0, ms.J * ms.K + n_pairs))
    quad = np.stack([quad_row(f) for f in fs])
    return np.hstack([gamma, quad_scale * quad])


@dataclass(frozen=True)
class DegreePoly:
    """A ring element paired with its multi-degree, evaluable at a time.

    ``degrees`` must be known (a tuple of per-variable degrees; plain ints
    are promoted to one variable); the rank-extension check refuses
    entries whose degree is unknown.
    """

    degrees: Optional[tuple]
    fn: Callable[[float], float]

    def degree_tuple(self, width: int) -> tuple[int, ...]:
        if self.degrees is None:
            raise ValueError("polynomial degree metadata is missing")
        degs = (self.degrees,) if isinstance(self.degrees, int) else tuple(self.degrees)
        return tuple(degs) + (0,) * (width - len(degs))


def degree_dominates(row_polys: Sequence[DegreePoly]) -> bool:
    """True when the last entry's degree strictly exceeds every other entry's
    in at least one shared variable."""
    width = max(
        1 if isinstance(p.degrees, int) else len(p.degrees) if p.degrees else 1
        for p in row_polys)
    degs = [p.degree_tuple(width) for p in row_polys]
    last = degs[-1]
    return any(all(last[v] > d[v] for d in degs[:-1]) for v in range(width))


def lemma3_extension_check(matrix, new_col, row_polys: Sequence[DegreePoly],
                           t: float, rel_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Append a column and a polynomial-valued row; report full rank.

    ``matrix`` must be square and numerically full rank; ``row_polys``
    supplies the r + 1 entries of the appended row as ring elements
    evaluated at t.  When the last entry's degree strictly dominates the
    others in some variable, the extension is full rank for almost every
    t; this check is numerical, the degree metadata only guards its
    applicability (missing metadata raises).
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    r = arr.shape[0]
    col = np.asarray(new_col, dtype=float).ravel()
    if col.size != r:
        raise ValueError(f"new column must have {r} entries, got {col.size}")
    if len(row_polys) != r + 1:
        raise ValueError(f"need {r + 1} row entries, got {len(row_polys)}")
    if numerical_rank(arr, rel_tol) < r:
        raise ValueError("base matrix must be full rank")
    degree_dominates(row_polys)  # raises on missing metadata
    row = np.array([float(p.fn(t)) for p in row_polys])
    extended = np.zeros((r + 1, r + 1))
    extended[:r, :r] = arr
    extended[:r, r] = col
    extended[r, :] = row
    return numerical_rank(extended, rel_tol) == r + 1
