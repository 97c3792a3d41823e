"""Permutations, block equivalence classes, and determinant decompositions.

For N = J*K, two permutations are *block-equivalent* when each aligned
window of J positions holds the same value set.  The quotient of the
symmetric group by this relation indexes a decomposition of the
determinant of any JK x JK matrix into products of J x J block minors,
which this module implements both as a standalone determinant routine
(:func:`det_by_blocks`) and as a coefficient extraction for structured
measurement matrices (:func:`gamma_coefficients`).  Exact integer and
floating-point direct determinants are provided as oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError

DEFAULT_ENUMERATION_CAP = 8


def validate_permutation(p) -> tuple[int, ...]:
    p = tuple(int(x) for x in p)
    if sorted(p) != list(range(len(p))):
        raise ValueError(f"not a permutation of 0..{len(p) - 1}: {p}")
    return p


def perm_sign(p) -> int:
    """Parity (-1)^inversions of a permutation."""
    p = validate_permutation(p)
    inversions = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inversions % 2 else 1


def _check_block(n: int, block: int) -> int:
    if block < 1 or n % block:
        raise ValueError(f"block width {block} must divide the length {n}")
    return n // block


def equivalent(p, q, block: int) -> bool:
    """True when each aligned block of width ``block`` holds the same value set."""
    p, q = validate_permutation(p), validate_permutation(q)
    if len(p) != len(q):
        raise ValueError("permutations must have equal length")
    _check_block(len(p), block)
    return all(
        set(p[i:i + block]) == set(q[i:i + block])
        for i in range(0, len(p), block)
    )


def class_representative(p, block: int) -> tuple[int, ...]:
    """Lexicographically smallest member of p's class: sort each block."""
    p = validate_permutation(p)
    _check_block(len(p), block)
    out: list[int] = []
    for i in range(0, len(p), block):
        out.extend(sorted(p[i:i + block]))
    return tuple(out)


@dataclass(frozen=True)
class EquivClass:
    """One block-equivalence class, identified by its representative.

    The representative is the lexicographically first member (each block
    sorted ascending); ``sign`` is its parity.
    """

    representative: tuple[int, ...]
    block: int
    sign: int

    def __post_init__(self):
        rep = validate_permutation(self.representative)
        _check_block(len(rep), self.block)
        if rep != class_representative(rep, self.block):
            raise ValueError(f"{rep} is not block-sorted, so not a representative")
        if self.sign != perm_sign(rep):
            raise ValueError("stored sign does not match the representative parity")

    @classmethod
    def from_member(cls, p, block: int) -> "EquivClass":
        rep = class_representative(p, block)
        return cls(rep, block, perm_sign(rep))

    @property
    def n(self) -> int:
        return len(self.representative)

    @property
    def n_blocks(self) -> int:
        return self.n // self.block

    @property
    def size(self) -> int:
        return math.factorial(self.block) ** self.n_blocks

    def block_values(self, k: int) -> tuple[int, ...]:
        return self.representative[k * self.block:(k + 1) * self.block]

    def members(self) -> Iterator[tuple[int, ...]]:
        """All permutations in the class (per-block rearrangements)."""
        blocks = [self.block_values(k) for k in range(self.n_blocks)]
        for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
            yield tuple(x for blk in choice for x in blk)


def class_count(n: int, block: int) -> int:
    k = _check_block(n, block)
    return math.factorial(n) // math.factorial(block) ** k


def enumerate_classes(n: int, block: int,
                      cap: int = DEFAULT_ENUMERATION_CAP) -> list[EquivClass]:
    """All block-equivalence classes of length-n permutations.

    The count is n! / (block!)^(n/block), so this is factorial work:
    lengths above ``cap`` (default 8) are refused.  Classes come out in
    lexicographic order of their representatives.
    """
    if n > cap:
        raise ResourceLimitError(
            f"enumerating classes for n={n} exceeds the cap {cap}; "
            f"raise cap explicitly if you accept the factorial cost")
    _check_block(n, block)
    out: list[EquivClass] = []

    def extend(remaining: tuple[int, ...], acc: tuple[int, ...]):
        if not remaining:
            out.append(EquivClass(acc, block, perm_sign(acc)))
            return
        for combo in itertools.combinations(remaining, block):
            rest = tuple(x for x in remaining if x not in combo)
            extend(rest, acc + combo)

    extend(tuple(range(n)), ())
    return out


# -- direct determinants (oracles) --------------------------------------------


def _is_exact(matrix) -> bool:
    arr = np.asarray(matrix)
    if arr.dtype == object:
        return all(isinstance(x, int) for x in arr.ravel())
    return np.issubdtype(arr.dtype, np.integer)


def bareiss_determinant(matrix) -> int:
    """Exact integer determinant by fraction-free elimination.

    Every intermediate division is exact, so arbitrary-precision Python
    integers keep the result exact for any magnitude.
    """
    a = [[int(x) for x in row] for row in np.asarray(matrix, dtype=object)]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def direct_determinant(matrix):
    """Reference determinant: exact Bareiss for integer input, LU for floats."""
    if _is_exact(matrix):
        return bareiss_determinant(matrix)
    return float(np.linalg.det(np.asarray(matrix, dtype=float)))


def _small_det(sub, exact: bool):
    if exact:
        n = len(sub)
        if n == 1:
            return sub[0][0]
        if n == 2:
            return sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0]
        return bareiss_determinant(sub)
    return np.linalg.det(sub)


def det_by_blocks(matrix, block: int, cap: int = DEFAULT_ENUMERATION_CAP):
    """Determinant of a JK x JK matrix via the block-class decomposition.

    Sums sign(class) * prod_k det(M[rows of block k, columns of the class's
    k-th block]) over all equivalence classes.  Exact for integer matrices
    (Python-int arithmetic throughout); floating point otherwise.
    """
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"matrix must be square, got shape {arr.shape}")
    n = arr.shape[0]
    k_blocks = _check_block(n, block)
    exact = _is_exact(arr)
    if exact:
        rows = [[int(x) for x in row] for row in arr]
        total = 0
    else:
        rows = arr
        total = arr.dtype.type(0) if np.issubdtype(arr.dtype, np.complexfloating) else 0.0

    for cls in enumerate_classes(n, block, cap=cap):
        term = cls.sign
        for kb in range(k_blocks):
            cols = cls.block_values(kb)
            if exact:
                sub = [[rows[kb * block + i][c] for c in cols] for i in range(block)]
            else:
                sub = rows[kb * block:(kb + 1) * block][:, cols]
            term = term * _small_det(sub, exact)
            if not exact and term == 0.0:
                break
        total = total + term
    return total


def gamma_coefficients(gs, block: int,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> dict[EquivClass, float]:
    """Per-class coefficient: product of the K block determinants of the g's.

    ``gs`` is an (N, J) array of measurement vectors with N = J*K.  For a
    class, block k contributes det of the J x J matrix whose columns are
    g[c] for c in the class's k-th block.  Signs are NOT folded in; they
    live on the classes themselves.
    """
    gs = np.asarray(gs, dtype=float)
    if gs.ndim != 2:
        raise ValueError("gs must be a 2-d array of row vectors")
    n, j_dim = gs.shape
    if j_dim != block:
        raise ValueError(f"vectors have dimension {j_dim}, expected the block width {block}")
    k_blocks = _check_block(n, block)
    out: dict[EquivClass, float] = {}
    for cls in enumerate_classes(n, block, cap=cap):
        coef = 1.0
        for kb in range(k_blocks):
            cols = cls.block_values(kb)
            coef *= float(np.linalg.det(gs[list(cols)].T))
            if coef == 0.0:
                break
        out[cls] = coef
    return out


def det_via_class_expansion(gs, f_values, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Reassemble det of the structured measurement matrix from class data.

    ``f_values`` is the (N, K) array with entry (n, k) = f_k(t_n).  Returns
    sum over classes of sign * coefficient * prod_{k, j} f_k(t_{class[kJ+j]}),
    which must match the determinant of the assembled measurement matrix.
    """
    gs = np.asarray(gs, dtype=float)
    f_values = np.asarray(f_values)
    n, block = gs.shape
    k_blocks = _check_block(n, block)
    if f_values.shape != (n, k_blocks):
        raise ValueError(f"f_values must be shaped ({n}, {k_blocks}), got {f_values.shape}")
    total = 0.0
    for cls, coef in gamma_coefficients(gs, block, cap=cap).items():
        if coef == 0.0:
            continue
        fprod = 1.0
        for kb in range(k_blocks):
            for c in cls.block_values(kb):
                fprod *= f_values[c, kb]
        total += cls.sign * coef * fprod
    return total
