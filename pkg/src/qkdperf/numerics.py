"""Scalar and small-matrix numerical primitives shared across the toolkit.

Everything in here is a pure function of its inputs, so values can be
shared freely between threads and parameter sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Photon-number series are truncated here by default; relative truncation
# error is < 1e-12 for every mean photon number <= 1 used by the presets.
DEFAULT_N_MAX = 30

# Golden-section internals.
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_PRESCAN_POINTS = 32
_MAX_GOLDEN_ITERATIONS = 200

# A pivot below this (relative to the largest matrix entry) counts as
# rank deficiency.
_SINGULAR_TOL = 1e-12


class NoSignChangeError(ValueError):
    """The bisection bracket does not enclose a sign change."""


class InvalidIntervalError(ValueError):
    """A search interval with lo >= hi was supplied."""


class SingularMatrixError(ValueError):
    """The linear system is rank deficient beyond tolerance."""


@dataclass(frozen=True)
class DistributionVec:
    """Finite nonnegative vector indexed by photon number or click count.

    Entries need not sum to exactly one (truncated tails are allowed), but
    may never exceed one beyond rounding noise.
    """

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("distribution must be a nonempty 1-d vector")
        if np.any(arr < 0):
            raise ValueError("distribution entries must be nonnegative")
        total = float(arr.sum())
        if total > 1.0 + 1e-9:
            raise ValueError(f"distribution sums to {total} > 1")

    @property
    def n_max(self) -> int:
        return self.entries.size - 1

    def total(self) -> float:
        return float(self.entries.sum())

    def normalized(self) -> "DistributionVec":
        total = self.total()
        if total <= 0.0:
            raise ValueError("cannot normalize an all-zero distribution")
        return DistributionVec(self.entries / total)

    def mean(self) -> float:
        return float(np.arange(self.entries.size) @ self.entries)


# Row-major real matrix; stochastic matrices used by the inversion code
# keep columns summing to one.
Matrix = np.ndarray


def binary_entropy(x: float) -> float:
    """Shannon entropy of a bit with bias ``x``, in bits.

    Returns exactly 0 at both endpoints so rate formulas can evaluate it
    at boundary error rates.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy requires 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def poisson_pn(mean: float, n: int) -> float:
    """P(n photons) for a phase-averaged coherent pulse of given mean."""
    if mean < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mean}")
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    # Log-space keeps large-n terms finite.
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def thermal_pn(mean: float, n: int) -> float:
    """P(n photons) for a single-mode thermal state of given mean."""
    if mean < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mean}")
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - (n + 1) * math.log1p(mean))


def poisson_distribution(mean: float, n_max: int) -> np.ndarray:
    """Poisson probabilities for n = 0..n_max as an array."""
    return np.array([poisson_pn(mean, n) for n in range(n_max + 1)])


def thermal_distribution(mean: float, n_max: int) -> np.ndarray:
    """Thermal probabilities for n = 0..n_max as an array."""
    return np.array([thermal_pn(mean, n) for n in range(n_max + 1)])


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
) -> float:
    """Root of a continuous function by bisection.

    ``f`` must change sign over [lo, hi]; the returned point sits inside a
    bracket of width <= tol.
    """
    if not lo < hi:
        raise InvalidIntervalError(f"invalid bracket [{lo}, {hi}]")
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoSignChangeError(
            f"f({lo})={f_lo} and f({hi})={f_hi} have the same sign"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def maximize_scalar(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-6,
) -> tuple[float, float]:
    """Maximize a scalar function on [lo, hi], returning (argmax, max).

    A coarse pre-scan picks the best bracket before golden-section search,
    which guards against flat or mildly multimodal inputs without needing
    derivatives.
    """
    if not lo < hi:
        raise InvalidIntervalError(f"invalid interval [{lo}, {hi}]")

    grid = np.linspace(lo, hi, _PRESCAN_POINTS)
    values = [f(x) for x in grid]
    best = int(np.argmax(values))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, _PRESCAN_POINTS - 1)]

    c = b - (b - a) * _INV_PHI
    d = a + (b - a) * _INV_PHI
    f_c, f_d = f(c), f(d)
    for _ in range(_MAX_GOLDEN_ITERATIONS):
        if b - a <= tol:
            break
        if f_c > f_d:
            b, d, f_d = d, c, f_c
            c = b - (b - a) * _INV_PHI
            f_c = f(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + (b - a) * _INV_PHI
            f_d = f(d)

    x_star = 0.5 * (a + b)
    candidates = [(f(x_star), x_star), (values[best], grid[best]), (f_c, c), (f_d, d)]
    f_star, x_star = max(candidates, key=lambda pair: pair[0])
    return float(x_star), float(f_star)


def solve_linear(a: Matrix, b: Sequence[float] | np.ndarray) -> np.ndarray:
    """Solve A x = b by Gaussian elimination with partial pivoting.

    Matrices in this toolkit stay small (<= 64 x 64), so no heavier
    machinery is warranted. Raises SingularMatrixError when a pivot falls
    below tolerance relative to the largest entry of A.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    n = a.shape[0]
    if b.size != n:
        raise ValueError(f"rhs length {b.size} does not match matrix size {n}")

    scale = float(np.abs(a).max())
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")

    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        pivot = a[pivot_row, col]
        if abs(pivot) < _SINGULAR_TOL * scale:
            raise SingularMatrixError(
                f"pivot {pivot} at column {col} below tolerance"
            )
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            b[[col, pivot_row]] = b[[pivot_row, col]]
        factors = a[col + 1 :, col] / pivot
        a[col + 1 :, col:] -= np.outer(factors, a[col, col:])
        b[col + 1 :] -= factors * b[col]

    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x
