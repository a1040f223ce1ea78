"""Decoy-state estimation and photon-statistics inversion.

The active scheme turns signal+decoy gain/QBER observations into
conservative single-photon bounds (vacuum + weak decoy):

    Y1 >= mu/(mu nu - nu^2) (Q_nu e^nu - Q_mu e^mu nu^2/mu^2
                             - (mu^2 - nu^2)/mu^2 Y0)
    e1 <= (E_nu Q_nu e^nu - e0 Y0) / (Y1_lower nu)

The passive scheme works on time-multiplexed detector (TMD) click
statistics: measured clicks relate to the sent photon numbers through
rho = C . L . p, where L is binomial loss and C the bin-occupancy
convolution; inverting the product recovers the sent statistics, and
record subsets reweighted by click count act as decoys after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .hardware import E_BACKGROUND
from .numerics import DistributionVec, Matrix, poisson_pn, solve_linear

# Slack before a bound that leaves the physical range counts as evidence
# of tampering or corrupt input rather than rounding.
_CONSISTENCY_TOL = 1e-9


class InconsistentObservationError(ValueError):
    """Decoy observations contradict any physical channel."""


class EmptySubsetError(ValueError):
    """Passive selection left a subset with too few records."""


@dataclass(frozen=True)
class DecoyObservation:
    """Measured gain and QBER at one pulse intensity."""

    intensity: float
    gain: float
    qber: float
    pulse_count: int = 10**9

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError(f"intensity must be >= 0, got {self.intensity}")
        if not 0.0 <= self.gain <= 1.0:
            raise ValueError(f"gain must be in [0, 1], got {self.gain}")
        if not 0.0 <= self.qber <= 1.0:
            raise ValueError(f"qber must be in [0, 1], got {self.qber}")
        if self.pulse_count <= 0:
            raise ValueError("pulse_count must be > 0")


@dataclass(frozen=True)
class DecoyEstimate:
    """Conservative single-photon bounds inferred from decoy data."""

    y1_lower: float
    e1_upper: float
    omega_lower: float
    y0_used: float


@dataclass(frozen=True)
class TmdConfig:
    """Time-multiplexed detector: 2^k output bins with uniform routing."""

    bins: int = 8
    tmd_efficiency: float = 0.7  # per-photon detection, 800 nm typical
    n_max: int = 8

    def __post_init__(self):
        if self.bins < 2 or self.bins & (self.bins - 1):
            raise ValueError(f"bins must be a power of two >= 2, got {self.bins}")
        if not 0.0 < self.tmd_efficiency <= 1.0:
            raise ValueError(
                f"tmd_efficiency must be in (0, 1], got {self.tmd_efficiency}"
            )
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass(frozen=True)
class InversionResult:
    """Recovered sent statistics plus the round-trip residual."""

    distribution: DistributionVec
    residual: float  # || C L p - rho ||_1 after clipping


def estimate_from_decoys(
    signal: DecoyObservation,
    decoys: Sequence[DecoyObservation],
    dark_prob: float | None = None,
) -> DecoyEstimate:
    """Single-photon bounds from one signal and one or more decoy levels.

    A vacuum decoy pins Y0 directly; otherwise ``dark_prob`` must supply
    it. Every nonzero decoy below the signal intensity yields a valid
    bound pair, and the tightest ones are returned. The estimates stay on
    the conservative side of the truth for any channel with
    photon-number-independent yields.
    """
    mu, q_mu = signal.intensity, signal.gain
    if mu <= 0:
        raise ValueError("signal intensity must be positive")

    vacuum = [d for d in decoys if d.intensity == 0.0]
    weak = [d for d in decoys if 0.0 < d.intensity < mu]
    if not weak:
        raise ValueError("need at least one decoy weaker than the signal")
    if vacuum:
        y0 = vacuum[0].gain
    elif dark_prob is not None:
        y0 = dark_prob
    else:
        raise ValueError("no vacuum decoy given; supply dark_prob for Y0")

    y1_lower = -math.inf
    e1_upper = math.inf
    for d in weak:
        nu, q_nu, e_nu = d.intensity, d.gain, d.qber
        y1 = (mu / (mu * nu - nu**2)) * (
            q_nu * math.exp(nu)
            - q_mu * math.exp(mu) * nu**2 / mu**2
            - (mu**2 - nu**2) / mu**2 * y0
        )
        if y1 < -_CONSISTENCY_TOL:
            raise InconsistentObservationError(
                f"Y1 bound {y1} negative for decoy nu={nu}"
            )
        y1 = max(y1, 0.0)
        if y1 > 1.0 + _CONSISTENCY_TOL:
            raise InconsistentObservationError(
                f"Y1 bound {y1} exceeds 1 for decoy nu={nu}"
            )
        y1 = min(y1, 1.0)

        if y1 > y1_lower:
            y1_lower = y1
        if y1 > 0.0:
            e1_num = e_nu * q_nu * math.exp(nu) - E_BACKGROUND * y0
            if e1_num < -_CONSISTENCY_TOL:
                raise InconsistentObservationError(
                    f"e1 bound numerator {e1_num} negative for decoy nu={nu}"
                )
            e1 = max(e1_num, 0.0) / (y1 * nu)
            # True e1 never exceeds 1/2 under the channel model, so the
            # cap keeps the bound valid while avoiding H2 domain trouble.
            e1_upper = min(e1_upper, e1, E_BACKGROUND)

    if not math.isfinite(e1_upper):
        e1_upper = E_BACKGROUND
    if q_mu <= 0:
        raise InconsistentObservationError("signal gain is zero")
    omega_lower = poisson_pn(mu, 1) * y1_lower / q_mu
    if omega_lower > 1.0 + _CONSISTENCY_TOL:
        raise InconsistentObservationError(
            f"estimated single-photon fraction {omega_lower} exceeds 1"
        )
    omega_lower = min(max(omega_lower, 0.0), 1.0)

    return DecoyEstimate(
        y1_lower=y1_lower, e1_upper=e1_upper, omega_lower=omega_lower, y0_used=y0
    )


def loss_matrix(eta: float, n_max: int) -> Matrix:
    """Binomial loss: entry (k, n) = P(k photons survive | n sent)."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    size = n_max + 1
    mat = np.zeros((size, size))
    for n in range(size):
        for k in range(n + 1):
            mat[k, n] = math.comb(n, k) * eta**k * (1.0 - eta) ** (n - k)
    return mat


def convolution_matrix(cfg: TmdConfig) -> Matrix:
    """Bin occupancy: entry (k, n) = P(k distinct bins click | n photons).

    Built by the occupancy recurrence: photon n+1 lands in an already
    occupied bin with probability k/B.
    """
    size = cfg.n_max + 1
    bins = cfg.bins
    mat = np.zeros((size, size))
    mat[0, 0] = 1.0
    column = np.zeros(size)
    column[0] = 1.0
    for n in range(1, size):
        nxt = np.zeros(size)
        for k in range(min(n, size - 1) + 1):
            if column[k] == 0.0:
                continue
            stay = k / bins
            nxt[k] += column[k] * stay
            if k + 1 < size:
                nxt[k + 1] += column[k] * (1.0 - stay)
        column = nxt
        mat[:, n] = column
    return mat


def invert_statistics(measured: DistributionVec, cfg: TmdConfig) -> InversionResult:
    """Recover sent photon statistics from measured TMD click statistics.

    Solves (C L) p = rho, clips negative components to zero and
    renormalizes. The reported residual lets callers detect cases where
    clipping actually mattered.
    """
    rho = measured.entries
    if rho.size != cfg.n_max + 1:
        raise ValueError(
            f"measured length {rho.size} does not match n_max {cfg.n_max}"
        )
    system = convolution_matrix(cfg) @ loss_matrix(cfg.tmd_efficiency, cfg.n_max)
    raw = solve_linear(system, rho)
    clipped = np.clip(raw, 0.0, None)
    total = clipped.sum()
    if total <= 0.0:
        raise InconsistentObservationError("inversion produced an all-zero vector")
    recovered = clipped / total
    residual = float(np.abs(system @ recovered - rho).sum())
    return InversionResult(
        distribution=DistributionVec(recovered), residual=residual
    )


def select_passive_decoys(
    click_records: Sequence[int] | np.ndarray,
    weights: Mapping[int, float],
    rng: np.random.Generator,
    default_weight: float = 0.5,
    min_records: int = 1000,
    n_max: int | None = None,
) -> tuple[DistributionVec, DistributionVec, np.ndarray]:
    """Split click records into signal/decoy subsets after the fact.

    Each record is labeled decoy with probability ``weights[click]``
    (``default_weight`` when unlisted), independently of everything else;
    the records themselves are never altered. Returns the two normalized
    click histograms and the per-record labels (True = decoy).
    """
    records = np.asarray(click_records, dtype=int)
    if records.size == 0:
        raise ValueError("click_records must be nonempty")
    if records.min() < 0:
        raise ValueError("click counts must be >= 0")
    for click, w in weights.items():
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"weight for click {click} must be in [0, 1], got {w}")
    if not 0.0 <= default_weight <= 1.0:
        raise ValueError("default_weight must be in [0, 1]")

    top = int(records.max()) if n_max is None else n_max
    if records.max() > top:
        raise ValueError(f"click count {records.max()} exceeds n_max {top}")

    per_record = np.array(
        [weights.get(int(c), default_weight) for c in records]
    )
    labels = rng.random(records.size) < per_record

    decoy_records = records[labels]
    signal_records = records[~labels]
    if signal_records.size < min_records:
        raise EmptySubsetError(
            f"signal subset has {signal_records.size} < {min_records} records"
        )
    if decoy_records.size < min_records:
        raise EmptySubsetError(
            f"decoy subset has {decoy_records.size} < {min_records} records"
        )

    signal_hist = np.bincount(signal_records, minlength=top + 1).astype(float)
    decoy_hist = np.bincount(decoy_records, minlength=top + 1).astype(float)
    return (
        DistributionVec(signal_hist / signal_hist.sum()),
        DistributionVec(decoy_hist / decoy_hist.sum()),
        labels,
    )


def read_click_records(lines: Sequence[str]) -> np.ndarray:
    """Parse a plain integer-per-line click stream (blank lines skipped)."""
    clicks = []
    for i, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            clicks.append(int(text))
        except ValueError as exc:
            raise ValueError(f"line {i}: not an integer click count: {text!r}") from exc
    return np.asarray(clicks, dtype=int)
