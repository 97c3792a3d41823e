"""Families of sampling functions f_k and their ring-degree metadata.

A :class:`BasisFamily` represents K linearly independent functions on an
interval.  Four kinds are supported:

* ``MONOMIAL`` -- f_k(t) = t^k,
* ``TRIG_POLYNOMIAL`` -- the real standard basis 1, cos t, sin t, cos 2t, ...,
* ``COMPLEX_EXPONENTIAL`` -- f_k(t) = exp(i k t),
* ``INTEGRATED_SINC`` -- running integrals of bandlimited sinc kernels,
  f_k(t) = integral from ``lower`` to t of sin(w(u - t_k)) / (pi (u - t_k)) du,
  with knots t_k = k pi / w + t0.

The first three kinds live in polynomial rings and carry per-function
multi-degrees; products of two basis functions then span a small,
enumerable space (:func:`quadratic_product_space`) which bounds the rank of
quadratic measurement blocks.  The integrated-sinc kind has no ring
structure and is used by the time-encoding application only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import sici

from .errors import UnsupportedBasisError


class BasisKind(Enum):
    MONOMIAL = "monomial"
    TRIG_POLYNOMIAL = "trig_polynomial"
    COMPLEX_EXPONENTIAL = "complex_exponential"
    INTEGRATED_SINC = "integrated_sinc"


def sine_integral(x):
    """Si(x) = integral of sin(u)/u over [0, x].  Vectorized, odd in x."""
    return sici(x)[0]


@dataclass(frozen=True)
class BasisFamily:
    """K linearly independent sampling functions on a bounded interval.

    Parameters
    ----------
    kind : BasisKind
    K : int
        Number of basis functions.
    interval : (float, float)
        Sampling domain; evaluation outside it raises ``ValueError``.
        Unbounded domains are not supported (uniform sampling would be
        undefined on them).
    omega, knot_offset, lower
        Integrated-sinc parameters: bandwidth in rad/s, knot shift
        (knots sit at k*pi/omega + knot_offset), and the default lower
        integration limit (defaults to the interval start).
    """

    kind: BasisKind
    K: int
    interval: tuple[float, float]
    omega: float = math.pi
    knot_offset: float = 0.0
    lower: Optional[float] = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        a, b = float(self.interval[0]), float(self.interval[1])
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("interval must be bounded")
        if not a < b:
            raise ValueError(f"interval must satisfy a < b, got ({a}, {b})")
        object.__setattr__(self, "interval", (a, b))
        if self.kind is BasisKind.INTEGRATED_SINC:
            if not (self.omega > 0 and math.isfinite(self.omega)):
                raise ValueError(f"omega must be positive, got {self.omega}")
            lower = a if self.lower is None else float(self.lower)
            if not math.isfinite(lower):
                raise ValueError("lower integration limit must be finite")
            object.__setattr__(self, "lower", lower)

    # -- metadata -----------------------------------------------------------

    @property
    def knots(self) -> np.ndarray:
        if self.kind is not BasisKind.INTEGRATED_SINC:
            raise UnsupportedBasisError("knots are defined for integrated-sinc bases only")
        return self.knot_offset + np.arange(self.K) * math.pi / self.omega

    @property
    def degrees(self) -> Optional[tuple[tuple[int, ...], ...]]:
        """Per-function multi-degrees in the ring extending the family.

        Monomials and complex exponentials are single-variable (degree k).
        Trigonometric functions use (sin-degree, cos-degree) in the quotient
        ring with sin^2 + cos^2 = 1: the constant is (0, 0), cos(mt) is
        (0, m) and sin(mt) is (1, m-1).  Integrated sinc has no ring and
        returns None.
        """
        if self.kind in (BasisKind.MONOMIAL, BasisKind.COMPLEX_EXPONENTIAL):
            return tuple((k,) for k in range(self.K))
        if self.kind is BasisKind.TRIG_POLYNOMIAL:
            out = []
            for idx in range(self.K):
                typ, m = _trig_label(idx)
                out.append((0, m) if typ == "c" else (1, m - 1))
            return tuple(out)
        return None

    @property
    def is_complex(self) -> bool:
        return self.kind is BasisKind.COMPLEX_EXPONENTIAL


def monomial(K: int, interval=(-1.0, 1.0)) -> BasisFamily:
    return BasisFamily(BasisKind.MONOMIAL, K, interval)


def trig_polynomial(K: int, interval=(-math.pi, math.pi)) -> BasisFamily:
    return BasisFamily(BasisKind.TRIG_POLYNOMIAL, K, interval)


def complex_exponential(K: int, interval=(-math.pi, math.pi)) -> BasisFamily:
    return BasisFamily(BasisKind.COMPLEX_EXPONENTIAL, K, interval)


def integrated_sinc(K: int, omega: float, interval, knot_offset: float = 0.0,
                    lower: Optional[float] = None) -> BasisFamily:
    return BasisFamily(BasisKind.INTEGRATED_SINC, K, interval,
                       omega=omega, knot_offset=knot_offset, lower=lower)


def _trig_label(idx: int) -> tuple[str, int]:
    """Index -> (type, frequency): 0 -> ('c', 0), 1 -> ('c', 1), 2 -> ('s', 1), ..."""
    if idx == 0:
        return "c", 0
    m = (idx + 1) // 2
    return ("c", m) if idx % 2 == 1 else ("s", m)


# -- evaluation ---------------------------------------------------------------


def _check_in_interval(basis: BasisFamily, t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    a, b = basis.interval
    if not (a <= t <= b):
        raise ValueError(f"time {t} outside the sampling interval [{a}, {b}]")
    return t


def eval_basis(basis: BasisFamily, t: float) -> np.ndarray:
    """Evaluate all K basis functions at a single time.

    Monomial values are built by the multiplicative recurrence
    f[k+1] = t * f[k], so the recurrence holds exactly in floating point.
    """
    t = _check_in_interval(basis, t)
    K = basis.K
    if basis.kind is BasisKind.MONOMIAL:
        out = np.empty(K)
        out[0] = 1.0
        for k in range(1, K):
            out[k] = out[k - 1] * t
        return out
    if basis.kind is BasisKind.TRIG_POLYNOMIAL:
        out = np.empty(K)
        for idx in range(K):
            typ, m = _trig_label(idx)
            out[idx] = math.cos(m * t) if typ == "c" else math.sin(m * t)
        return out
    if basis.kind is BasisKind.COMPLEX_EXPONENTIAL:
        return np.exp(1j * np.arange(K) * t)
    return integrated_sinc_vector(basis, basis.lower, t)


def basis_matrix(basis: BasisFamily, times) -> np.ndarray:
    """Stack eval_basis over many times: entry (n, k) = f_k(times[n])."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return np.stack([eval_basis(basis, t) for t in times])


def integrated_sinc_vector(basis: BasisFamily, lower: float, t: float) -> np.ndarray:
    """All K integrated-sinc values from ``lower`` to ``t`` at once."""
    if basis.kind is not BasisKind.INTEGRATED_SINC:
        raise UnsupportedBasisError("integrated-sinc evaluation needs an integrated-sinc basis")
    if not (math.isfinite(lower) and math.isfinite(t)):
        raise ValueError(f"integration limits must be finite, got ({lower}, {t})")
    knots = basis.knots
    w = basis.omega
    return (sine_integral(w * (t - knots)) - sine_integral(w * (lower - knots))) / math.pi


def eval_integrated_sinc(basis: BasisFamily, lower: float, t: float, k: int) -> float:
    """Integral of the k-th sinc kernel over [lower, t].

    Computed through the sine integral:
    (Si(w (t - t_k)) - Si(w (lower - t_k))) / pi.
    """
    if not 0 <= k < basis.K:
        raise ValueError(f"kernel index {k} out of range for K={basis.K}")
    return float(integrated_sinc_vector(basis, lower, t)[k])


def sample_times(interval, n: int, seed) -> np.ndarray:
    """Draw n distinct times i.i.d. uniform on the interval, sorted ascending.

    Deterministic given the seed.  Duplicate draws (possible in floats,
    probability zero in theory) are rejected and redrawn.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError(f"empty or unbounded interval ({a}, {b})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    times = rng.uniform(a, b, size=n)
    while np.unique(times).size < n:
        times = np.unique(times)
        times = np.concatenate([times, rng.uniform(a, b, size=n - times.size)])
    return np.sort(times)


# -- product spaces -----------------------------------------------------------


@dataclass(frozen=True)
class ProductSpace:
    """Span of all pairwise products f_j * f_k of a ring-backed basis.

    ``labels`` names the spanning functions (monomial degrees, harmonic
    labels, ...), ``pair_expansion`` holds exact expansion coefficients:
    row p of ``pair_expansion`` gives f_j * f_k (with (j, k) the p-th
    pair in half-vectorization order, j <= k) in the spanning functions.
    """

    basis: BasisFamily
    labels: tuple
    pair_expansion: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def eval(self, t: float) -> np.ndarray:
        """Values of the spanning functions at time t."""
        t = float(t)
        kind = self.basis.kind
        if kind is BasisKind.MONOMIAL:
            out = np.empty(self.dim)
            out[0] = 1.0
            for d in range(1, self.dim):
                out[d] = out[d - 1] * t
            return out
        if kind is BasisKind.COMPLEX_EXPONENTIAL:
            return np.exp(1j * np.array([d for d in self.labels]) * t)
        out = np.empty(self.dim)
        for i, (typ, m) in enumerate(self.labels):
            out[i] = math.cos(m * t) if typ == "c" else math.sin(m * t)
        return out

    def eval_many(self, times) -> np.ndarray:
        return np.stack([self.eval(t) for t in np.atleast_1d(times)])


def half_vec_pairs(K: int) -> list[tuple[int, int]]:
    """Index pairs (j, k), j <= k, in half-vectorization order (k-major)."""
    return [(j, k) for k in range(K) for j in range(k + 1)]


def _trig_product_terms(a: tuple[str, int], b: tuple[str, int]) -> dict[tuple[str, int], float]:
    """Product-to-sum expansion of two harmonics; keys are ('c'|'s', freq)."""
    (ta, ma), (tb, mb) = a, b
    hi, lo = ma + mb, abs(ma - mb)
    terms: dict[tuple[str, int], float] = {}

    def add(typ, m, coef):
        if typ == "s" and m == 0:
            return
        terms[(typ, m)] = terms.get((typ, m), 0.0) + coef

    if ta == "c" and tb == "c":
        add("c", hi, 0.5)
        add("c", lo, 0.5)
    elif ta == "s" and tb == "s":
        add("c", lo, 0.5)
        add("c", hi, -0.5)
    else:
        ms, mc = (ma, mb) if ta == "s" else (mb, ma)
        add("s", ms + mc, 0.5)
        if ms > mc:
            add("s", ms - mc, 0.5)
        elif mc > ms:
            add("s", mc - ms, -0.5)
    return {k: v for k, v in terms.items() if v != 0.0}


def quadratic_product_space(basis: BasisFamily) -> ProductSpace:
    """Enumerate the functions spanned by all products f_j * f_k.

    For monomials and complex exponentials the products are the powers
    0 .. 2K-2 (2K-1 of them).  For the trigonometric basis the products
    expand into harmonics via the product-to-sum identities; the quotient
    relation sin^2 + cos^2 = 1 is built into that expansion.  For the
    standard basis with odd K this also yields 2K-1 functions.
    """
    K = basis.K
    pairs = half_vec_pairs(K)
    if basis.kind in (BasisKind.MONOMIAL, BasisKind.COMPLEX_EXPONENTIAL):
        labels = tuple(range(2 * K - 1))
        E = np.zeros((len(pairs), len(labels)))
        for p, (j, k) in enumerate(pairs):
            E[p, j + k] = 1.0
        return ProductSpace(basis, labels, E)
    if basis.kind is BasisKind.TRIG_POLYNOMIAL:
        expansions = []
        seen: set[tuple[str, int]] = set()
        for j, k in pairs:
            terms = _trig_product_terms(_trig_label(j), _trig_label(k))
            expansions.append(terms)
            seen.update(terms)
        labels = tuple(sorted(seen, key=lambda lab: (lab[1], lab[0])))
        index = {lab: i for i, lab in enumerate(labels)}
        E = np.zeros((len(pairs), len(labels)))
        for p, terms in enumerate(expansions):
            for lab, coef in terms.items():
                E[p, index[lab]] = coef
        return ProductSpace(basis, labels, E)
    raise UnsupportedBasisError(
        f"basis kind {basis.kind.value} has no ring-degree metadata")
