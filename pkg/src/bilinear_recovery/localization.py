"""Continuous localization from range-only measurements.

A device moves on a trajectory r(t) = C f(t) in R^D with coefficients
C (D x K) over a sampling function family, and measures at each time a
single distance d_n to one known anchor a_{m_n}.  Squaring the ranges and
writing b_n = (|a|^2 - d^2) / 2 linearizes the problem into

    b_n = a' C f(t_n) - 1/2 f(t_n)' L f(t_n),      L = C'C,

and dropping the relation between C and L leaves a linear system.  The
homogenized vectors [a; 1] play the role of the bilinear anchor set with
J = D + 1, and the quadratic block only contributes 2K - 1 effective
unknowns (the dimension of the span of the products f_j f_k), so the
trajectory is uniquely recoverable from N >= K(D+2) - 1 measurements
whenever sum_m min(k_m, K) >= K(D+1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import (BasisFamily, basis_matrix, quadratic_product_space,
                    sample_times)
from .bilinear import (DEFAULT_RANK_TOL, BilinearMeasurementSet,
                       numerical_rank)
from .errors import GeneralPositionError, NonUniqueSolutionError, UnsupportedBasisError
from .quadratic import assemble_stacked, svech, svech_inverse, _svech_weights

ASSIGNMENT_POLICIES = ("round_robin", "random")


def check_affine_general_position(anchors, rel_tol: float = DEFAULT_RANK_TOL) -> None:
    """No D+1 anchors may share an affine subspace of dimension D-1.

    Equivalent test: every (D+1)-subset of the homogenized vectors [a; 1]
    has full rank D+1.
    """
    anchors = np.asarray(anchors, dtype=float)
    m, d = anchors.shape
    if m < d + 1:
        raise GeneralPositionError(
            f"need at least D+1={d + 1} anchors, got {m}", subset=tuple(range(m)))
    homog = np.hstack([anchors, np.ones((m, 1))])
    for subset in itertools.combinations(range(m), d + 1):
        if numerical_rank(homog[list(subset)], rel_tol) < d + 1:
            raise GeneralPositionError(
                f"anchors {subset} lie in a common affine subspace", subset=subset)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Anchors, trajectory model and range measurements.

    ``c_true`` is the optional ground-truth coefficient matrix (kept by
    the simulator for round-trip checks); measurement n used anchor
    ``assignments[n]`` at time ``times[n]`` and returned range
    ``distances[n]``.
    """

    basis: BasisFamily
    anchors: np.ndarray
    assignments: np.ndarray
    times: np.ndarray
    distances: np.ndarray
    c_true: Optional[np.ndarray] = None
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        assignments = np.asarray(self.assignments, dtype=int).ravel()
        times = np.asarray(self.times, dtype=float).ravel()
        distances = np.asarray(self.distances, dtype=float).ravel()
        if not (assignments.size == times.size == distances.size):
            raise ValueError("assignments, times and distances must have equal length")
        if assignments.size and (assignments.min() < 0 or assignments.max() >= anchors.shape[0]):
            raise ValueError("anchor assignment out of range")
        if np.any(distances < 0):
            raise ValueError("distances must be nonnegative")
        check_affine_general_position(anchors, self.rank_tol)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "assignments", assignments)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "distances", distances)
        if self.c_true is not None:
            c = np.asarray(self.c_true, dtype=float)
            if c.shape != (anchors.shape[1], self.basis.K):
                raise ValueError(f"c_true must be shaped ({anchors.shape[1]}, {self.basis.K})")
            object.__setattr__(self, "c_true", c)
            c.setflags(write=False)
        for arr in (anchors, assignments, times, distances):
            arr.setflags(write=False)

    @property
    def D(self) -> int:
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


def eval_trajectory(C, basis: BasisFamily, times) -> np.ndarray:
    """Positions C f(t) for each time; returns a D x T array."""
    C = np.asarray(C)
    return C @ basis_matrix(basis, times).T


def assignment_sequence(policy, M: int, N: int, rng) -> np.ndarray:
    """Expand an assignment policy into per-measurement anchor indices."""
    if isinstance(policy, str):
        if policy == "round_robin":
            return np.arange(N) % M
        if policy == "random":
            return rng.integers(0, M, size=N)
        raise ValueError(f"unknown assignment policy {policy!r}; "
                         f"expected one of {ASSIGNMENT_POLICIES} or an explicit list")
    seq = np.asarray(policy, dtype=int).ravel()
    if seq.size != N:
        raise ValueError(f"explicit assignment list has {seq.size} entries, need {N}")
    if seq.size and (seq.min() < 0 or seq.max() >= M):
        raise ValueError(f"assignment list names anchor {seq.max()} but only {M} exist")
    return seq


def simulate_scenario(D: int, K: int, basis: BasisFamily, M: int, N: int,
                      policy="round_robin", seed=0,
                      anchor_scale: float = 2.0) -> Scenario:
    """Draw a random ground-truth trajectory and exact range measurements.

    Coefficients are standard normal; anchors are Gaussian with the given
    scale, resampled until they are in affine general position; times are
    uniform on the basis interval.  Exact (noiseless) distances.
    """
    if M < D + 1:
        raise ValueError(f"need at least D+1={D + 1} anchors, got M={M}")
    if N < 1:
        raise ValueError("need at least one measurement")
    if basis.K != K:
        raise ValueError(f"basis has K={basis.K}, expected {K}")
    rng = np.random.default_rng(seed)
    c_true = rng.standard_normal((D, K))
    while True:
        anchors = anchor_scale * rng.standard_normal((M, D))
        try:
            check_affine_general_position(anchors)
            break
        except GeneralPositionError:
            continue
    times = sample_times(basis.interval, N, rng)
    assignments = assignment_sequence(policy, M, N, rng)
    positions = eval_trajectory(c_true, basis, times)
    distances = np.linalg.norm(anchors[assignments] - positions.T, axis=1)
    return Scenario(basis=basis, anchors=anchors, assignments=assignments,
                    times=times, distances=distances, c_true=c_true)


@dataclass(frozen=True)
class Corollary2Check:
    """Recoverability condition: both the anchor-multiplicity bound
    sum_m min(k_m, K) >= K(D+1) and the measurement count N >= K(D+2)-1."""

    ok: bool
    lhs: int
    required: int
    total_required: int
    n: int
    counts: tuple[int, ...]


def corollary2_check(scenario: Scenario) -> Corollary2Check:
    counts = scenario.anchor_counts
    K, D = scenario.K, scenario.D
    lhs = int(np.minimum(counts, K).sum())
    required = K * (D + 1)
    total_required = K * (D + 2) - 1
    ok = lhs >= required and scenario.N >= total_required
    return Corollary2Check(ok=ok, lhs=lhs, required=required,
                           total_required=total_required, n=scenario.N,
                           counts=tuple(int(c) for c in counts))


@dataclass(frozen=True)
class RankReport:
    """Rank diagnostics of the linearized system."""

    stacked_rank: int
    reduced_rank: int
    required: int
    n_rows: int
    stacked_cols: int
    reduced_cols: int
    condition: Corollary2Check


@dataclass(frozen=True)
class TrajectoryEstimate:
    """Recovered trajectory coefficients with quadratic-term diagnostics.

    ``quad_coeffs`` are the identifiable coordinates of the quadratic term
    (coefficients of f' L f in the product-function space).  ``l_hat`` is
    the symmetric representative of those coordinates anchored at
    C_hat' C_hat, so its distance to C_hat' C_hat measures exactly how
    well the recovered linear solution satisfies the dropped constraint
    L = C'C.
    """

    c_hat: np.ndarray
    l_hat: np.ndarray
    quad_coeffs: np.ndarray
    residual: float
    rank_report: RankReport


def to_bilinear_set(scenario: Scenario) -> BilinearMeasurementSet:
    """Homogenized bilinear view: anchors [a; 1], b = (|a|^2 - d^2) / 2."""
    homog = np.hstack([scenario.anchors, np.ones((scenario.M, 1))])
    norms = np.sum(scenario.anchors[scenario.assignments] ** 2, axis=1)
    b = 0.5 * (norms - scenario.distances ** 2)
    return BilinearMeasurementSet(
        anchors=homog, assignments=scenario.assignments, times=scenario.times,
        basis=scenario.basis, b=b, rank_tol=scenario.rank_tol)


def _reduced_system(scenario: Scenario):
    """Linear system in identifiable coordinates: unknowns (vec C, beta).

    The bilinear block uses the raw D-dimensional anchors; the quadratic
    term is parameterized by its 2K - 1 product-space coefficients beta
    (f' L f = sum_d beta_d p_d), entering rows as -1/2 p_d(t_n).  This
    parameterization has exactly K(D+2) - 1 columns and full column rank
    under the recoverability condition, so the least-squares solution is
    unique in every coordinate.
    """
    space = quadratic_product_space(scenario.basis)
    K = scenario.K
    if space.dim != 2 * K - 1:
        raise UnsupportedBasisError(
            f"product space of this basis has dimension {space.dim}, not 2K-1={2 * K - 1}; "
            "the measurement-count bound K(D+2)-1 does not apply")
    fs = basis_matrix(scenario.basis, scenario.times)
    gs = scenario.anchors[scenario.assignments]
    bilin = np.stack([np.outer(fs[n], gs[n]).ravel() for n in range(scenario.N)])
    prod_vals = space.eval_many(scenario.times)
    reduced = np.hstack([bilin, -0.5 * prod_vals])
    return reduced, space


def _lift_quad_coords(space, coords, K: int) -> np.ndarray:
    """Minimum-Frobenius-norm symmetric matrix with the given product coords.

    The map svech(L) -> coordinates of f'Lf is E' W with W the
    half-vectorization doubling weights; minimizing the Frobenius norm
    (x' W x in svech coordinates) gives x = W^{-1/2} pinv(E' W^{1/2}) c.
    """
    w = _svech_weights(K)
    B = space.pair_expansion.T * np.sqrt(w)
    u = np.linalg.pinv(B) @ np.asarray(coords)
    return svech_inverse(u / np.sqrt(w), K)


def localize(scenario: Scenario) -> TrajectoryEstimate:
    """Recover the trajectory coefficients from a range scenario.

    Raises :class:`NonUniqueSolutionError` carrying the rank report when
    the recoverability condition fails or the stacked system is rank
    deficient; no representative solution is picked in that case.
    """
    cond = corollary2_check(scenario)
    ms = to_bilinear_set(scenario)
    stacked = assemble_stacked(ms, quad_scale=-0.5)
    stacked_rank = numerical_rank(stacked, scenario.rank_tol)
    reduced, space = _reduced_system(scenario)
    reduced_rank = numerical_rank(reduced, scenario.rank_tol)
    required = cond.total_required
    report = RankReport(stacked_rank=stacked_rank, reduced_rank=reduced_rank,
                        required=required, n_rows=scenario.N,
                        stacked_cols=stacked.shape[1], reduced_cols=reduced.shape[1],
                        condition=cond)
    if not cond.ok or stacked_rank < required or reduced_rank < required:
        raise NonUniqueSolutionError(
            f"linearized system rank {min(stacked_rank, reduced_rank)} < {required}; "
            "the trajectory cannot be uniquely reconstructed",
            rank=min(stacked_rank, reduced_rank), required=required, report=report)
    x, _, _, _ = np.linalg.lstsq(reduced, ms.b, rcond=None)
    D, K = scenario.D, scenario.K
    c_hat = x[:D * K].reshape(K, D).T
    beta = x[D * K:]
    residual = float(np.linalg.norm(reduced @ x - ms.b))
    candidate = c_hat.T @ c_hat
    w = _svech_weights(K)
    cand_coords = space.pair_expansion.T @ (w * svech(candidate))
    l_hat = candidate + _lift_quad_coords(space, beta - cand_coords, K)
    return TrajectoryEstimate(c_hat=c_hat, l_hat=l_hat, quad_coeffs=beta,
                              residual=residual, rank_report=report)
