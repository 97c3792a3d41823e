"""Bilinear measurement systems b_n = g_n' C f_n and their solvability.

Each measurement pairs an *anchor* vector g_n (drawn from a finite set of
M unique vectors, every J of which must be linearly independent) with a
sampling time t_n.  Vectorizing the outer product g f' turns the N
measurements into an N x JK linear system for the flattened unknown
matrix; the system determines C uniquely exactly when the anchor
multiplicities k_m satisfy sum_m min(k_m, K) >= JK.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BasisFamily, basis_matrix
from .errors import GeneralPositionError, NonUniqueSolutionError

DEFAULT_RANK_TOL = 1e-10
#: general-position checks enumerate all J-subsets up to this many
EXHAUSTIVE_SUBSET_LIMIT = 100_000
RANDOM_SUBSET_SAMPLES = 1000


def numerical_rank(matrix, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above rel_tol times the largest one.

    The zero matrix (and the empty one) has rank 0.
    """
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    arr = np.asarray(matrix)
    if arr.size == 0:
        return 0
    if not np.all(np.isfinite(arr.real)) or (np.iscomplexobj(arr) and not np.all(np.isfinite(arr.imag))):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(np.atleast_2d(arr), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def vec_outer(g, f) -> np.ndarray:
    """Flatten the outer product g f' with index convention kJ + j.

    out[k*J + j] = g[j] * f[k]; equivalently the K columns of g f' stacked.
    """
    g = np.asarray(g).ravel()
    f = np.asarray(f).ravel()
    return np.outer(f, g).ravel()


def check_general_position(anchors, rel_tol: float = DEFAULT_RANK_TOL,
                           rng=None) -> None:
    """Verify every J-subset of the (M, J) anchor array is a basis.

    Exhaustive up to ``EXHAUSTIVE_SUBSET_LIMIT`` subsets, randomized
    (``RANDOM_SUBSET_SAMPLES`` draws) above.  Raises
    :class:`GeneralPositionError` naming the first dependent subset.
    """
    anchors = np.asarray(anchors)
    m, j_dim = anchors.shape
    if m < j_dim:
        raise GeneralPositionError(
            f"need at least J={j_dim} anchors to span, got {m}", subset=tuple(range(m)))
    for a in range(m):
        for b in range(a + 1, m):
            if np.array_equal(anchors[a], anchors[b]):
                raise GeneralPositionError(
                    f"anchors {a} and {b} are identical", subset=(a, b))
    if math.comb(m, j_dim) <= EXHAUSTIVE_SUBSET_LIMIT:
        import itertools
        subsets = itertools.combinations(range(m), j_dim)
    else:
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng or 0)
        subsets = (tuple(sorted(rng.choice(m, size=j_dim, replace=False)))
                   for _ in range(RANDOM_SUBSET_SAMPLES))
    for subset in subsets:
        if numerical_rank(anchors[list(subset)], rel_tol) < j_dim:
            raise GeneralPositionError(
                f"anchor subset {subset} is linearly dependent", subset=subset)


@dataclass(frozen=True, eq=False)
class BilinearMeasurementSet:
    """Validated, immutable collection of bilinear measurements.

    ``anchors`` is (M, J); ``assignments`` maps each measurement to its
    anchor; ``times`` are the sampling times.  ``b`` (the measured
    scalars) is optional: solvability analysis does not need it.
    ``f_vectors`` optionally overrides basis evaluation with explicit
    per-measurement f vectors (used when measurements carry different
    integration origins, as in time encoding).
    """

    anchors: np.ndarray
    assignments: np.ndarray
    times: np.ndarray
    basis: BasisFamily
    b: Optional[np.ndarray] = None
    f_vectors: Optional[np.ndarray] = None
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        assignments = np.asarray(self.assignments, dtype=int).ravel()
        times = np.asarray(self.times, dtype=float).ravel()
        if assignments.shape != times.shape:
            raise ValueError("assignments and times must have equal length")
        if assignments.size and (assignments.min() < 0 or assignments.max() >= anchors.shape[0]):
            raise ValueError("anchor assignment out of range")
        check_general_position(anchors, self.rank_tol)
        pairs = list(zip(assignments.tolist(), times.tolist()))
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate (anchor, time) measurement pair")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "times", times)
        if self.b is not None:
            b = np.asarray(self.b, dtype=float).ravel()
            if b.shape != times.shape:
                raise ValueError("b must have one entry per measurement")
            object.__setattr__(self, "b", b)
            b.setflags(write=False)
        if self.f_vectors is not None:
            fv = np.atleast_2d(np.asarray(self.f_vectors))
            if fv.shape != (times.size, self.basis.K):
                raise ValueError(
                    f"f_vectors must be shaped ({times.size}, {self.basis.K}), got {fv.shape}")
            object.__setattr__(self, "f_vectors", fv)
            fv.setflags(write=False)
        for arr in (anchors, assignments, times):
            arr.setflags(write=False)

    @property
    def J(self) -> int:
        return self.anchors.shape[1]

    @property
    def K(self) -> int:
        return self.basis.K

    @property
    def M(self) -> int:
        return self.anchors.shape[0]

    @property
    def N(self) -> int:
        return self.times.size

    @property
    def anchor_counts(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.M)

    @property
    def g_vectors(self) -> np.ndarray:
        return self.anchors[self.assignments]

    def f_matrix(self) -> np.ndarray:
        """(N, K) array of f vectors, explicit or evaluated from the basis."""
        if self.f_vectors is not None:
            return self.f_vectors
        if self.N == 0:
            return np.zeros((0, self.K))
        return basis_matrix(self.basis, self.times)

    def restricted(self, indices) -> "BilinearMeasurementSet":
        """Sub-collection keeping only the given measurement indices."""
        idx = np.asarray(indices, dtype=int)
        return BilinearMeasurementSet(
            anchors=self.anchors,
            assignments=self.assignments[idx],
            times=self.times[idx],
            basis=self.basis,
            b=None if self.b is None else self.b[idx],
            f_vectors=None if self.f_vectors is None else self.f_vectors[idx],
            rank_tol=self.rank_tol,
        )


def assemble_gamma(ms: BilinearMeasurementSet) -> np.ndarray:
    """Stack the vectorized outer products into the N x JK system matrix."""
    if ms.N == 0:
        return np.zeros((0, ms.J * ms.K))
    fs = ms.f_matrix()
    gs = ms.g_vectors
    return np.stack([vec_outer(gs[n], fs[n]) for n in range(ms.N)])


@dataclass(frozen=True)
class Theorem1Verdict:
    """Outcome of the anchor-multiplicity solvability check.

    ``lhs`` is sum_m min(k_m, K); the system is solvable iff lhs >= JK.
    On success ``witness`` lists exactly JK measurement indices in which
    no anchor appears more than K times; on failure ``deficit`` is the
    shortfall JK - lhs.
    """

    solvable: bool
    lhs: int
    required: int
    counts: tuple[int, ...]
    witness: Optional[tuple[int, ...]] = None
    deficit: Optional[int] = None


def theorem1_verdict(ms: BilinearMeasurementSet) -> Theorem1Verdict:
    """Decide unique solvability from anchor multiplicities alone.

    The witness is selected greedily: anchors in index order, each
    contributing at most K of its measurements, until JK are collected.
    """
    counts = ms.anchor_counts
    k_cap = ms.K
    required = ms.J * ms.K
    lhs = int(np.minimum(counts, k_cap).sum())
    if lhs < required:
        return Theorem1Verdict(False, lhs, required, tuple(int(c) for c in counts),
                               deficit=required - lhs)
    witness: list[int] = []
    for m in range(ms.M):
        take = min(int(counts[m]), k_cap, required - len(witness))
        if take:
            witness.extend(np.flatnonzero(ms.assignments == m)[:take].tolist())
        if len(witness) == required:
            break
    return Theorem1Verdict(True, lhs, required, tuple(int(c) for c in counts),
                           witness=tuple(witness))


@dataclass(frozen=True)
class BilinearSolution:
    """Least-squares recovery of the coefficient matrix with diagnostics."""

    C: np.ndarray
    residual_norm: float
    rank: int
    verdict: Theorem1Verdict


def unvec_coeffs(x, j_dim: int, k_dim: int) -> np.ndarray:
    """Invert the kJ + j flattening back to a J x K matrix."""
    x = np.asarray(x).ravel()
    if x.size != j_dim * k_dim:
        raise ValueError(f"expected {j_dim * k_dim} entries, got {x.size}")
    return x.reshape(k_dim, j_dim).T


def solve_bilinear(ms: BilinearMeasurementSet) -> BilinearSolution:
    """Recover C from a measurement set carrying b.

    Raises :class:`NonUniqueSolutionError` when the multiplicity condition
    fails or the assembled system is numerically rank deficient; with more
    than JK measurements all rows enter the least-squares solve (they are
    redundant but harmless in the noiseless model).
    """
    if ms.b is None:
        raise ValueError("measurement set has no b values to solve against")
    verdict = theorem1_verdict(ms)
    gamma = assemble_gamma(ms)
    rank = numerical_rank(gamma, ms.rank_tol)
    required = ms.J * ms.K
    if not verdict.solvable:
        raise NonUniqueSolutionError(
            f"anchor multiplicities support only {verdict.lhs} of the required "
            f"{required} independent measurements",
            rank=rank, required=required, report=verdict)
    if rank < required:
        raise NonUniqueSolutionError(
            f"system matrix rank {rank} < {required}; solution not unique",
            rank=rank, required=required, report=verdict)
    x, _, _, _ = np.linalg.lstsq(gamma, ms.b, rcond=None)
    residual = float(np.linalg.norm(gamma @ x - ms.b))
    return BilinearSolution(C=unvec_coeffs(x, ms.J, ms.K),
                            residual_norm=residual, rank=rank, verdict=verdict)
