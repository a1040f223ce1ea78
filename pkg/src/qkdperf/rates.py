"""Secret-key-rate lower bounds.

Three bounds are provided: the one-way prepare-and-measure bound

    S >= q Q ( -f H2(E) + Omega (1 - H2(e1)) ),

its two-way variant evaluated on transformed error quantities with a
survival prefactor, and the entangled-source bound

    S >= q Q ( 1 - f H2(E) - H2(E) )

which needs only the overall error rate. Negative bounds clamp to zero:
"at least zero secret bits" is the informative floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .hardware import LinkQuantities
from .numerics import binary_entropy

# (E, omega, e1_bit, e1_phase) -> same tuple after the two-way steps.
ErrorTransform = Callable[
    [float, float, float, float], tuple[float, float, float, float]
]


@dataclass(frozen=True)
class RateParts:
    """Intermediate quantities behind a rate point."""

    gain: float
    qber: float
    omega: float
    e1: float
    ec_term: float  # -f H2(E), always <= 0
    pa_term: float  # Omega (1 - H2(e1))


@dataclass(frozen=True)
class RatePoint:
    """Secret-key rate at one channel length."""

    length_km: float
    secret_rate: float  # bits per pulse, clamped at 0
    bits_per_second: float
    parts: RateParts
    degenerate: bool = False


def identity_transform(
    qber: float, omega: float, e1_bit: float, e1_phase: float
) -> tuple[float, float, float, float]:
    return qber, omega, e1_bit, e1_phase


@dataclass(frozen=True)
class TwoWayTransform:
    """Bidirectional privacy-amplification steps.

    Each step keeps roughly half the bits (``survival``) while reshaping
    the error quantities via ``transform``. The concrete transformation
    equations are deliberately pluggable; identity is the default.
    """

    steps: int = 0
    survival: float = 1.0
    transform: ErrorTransform = field(default=identity_transform, repr=False)

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if not 0.0 <= self.survival <= 1.0:
            raise ValueError(f"survival must be in [0, 1], got {self.survival}")
        if self.steps == 0 and self.survival != 1.0:
            raise ValueError("zero steps require survival = 1")

    @classmethod
    def halving(cls, steps: int) -> "TwoWayTransform":
        """Survival 2^-steps with untouched error quantities."""
        if steps == 0:
            return cls()
        return cls(steps=steps, survival=2.0 ** (-steps))


def rate_one_way(
    q: float, lq: LinkQuantities, f: float, omega: float, e1: float
) -> float:
    """One-way bound; ``omega``/``e1`` are passed explicitly so estimated
    bounds can stand in for the true single-photon quantities."""
    ec_term = -f * binary_entropy(lq.qber)
    pa_term = omega * (1.0 - binary_entropy(e1))
    return max(0.0, q * lq.gain * (ec_term + pa_term))


def rate_two_way(
    q: float, lq: LinkQuantities, f: float, tw: TwoWayTransform
) -> float:
    """Two-way bound on the transformed quantities."""
    qber, omega, _e1_bit, e1_phase = tw.transform(
        lq.qber, lq.omega, lq.single_error, lq.single_error
    )
    ec_term = -f * binary_entropy(qber)
    pa_term = omega * (1.0 - binary_entropy(e1_phase))
    return max(0.0, q * tw.survival * lq.gain * (ec_term + pa_term))


def rate_entangled(q: float, lq: LinkQuantities, f: float) -> float:
    """Entangled-source bound; only the overall error rate enters."""
    h2 = binary_entropy(lq.qber)
    return max(0.0, q * lq.gain * (1.0 - f * h2 - h2))


def bits_per_second(secret_rate: float, rep_rate: float) -> float:
    """Convert bits per pulse into bits per second."""
    if secret_rate < 0:
        raise ValueError(f"secret_rate must be >= 0, got {secret_rate}")
    return secret_rate * rep_rate


def one_way_parts(
    q: float, lq: LinkQuantities, f: float, omega: float, e1: float
) -> tuple[float, RateParts]:
    """Rate plus its decomposition, for reporting."""
    ec_term = -f * binary_entropy(lq.qber)
    pa_term = omega * (1.0 - binary_entropy(e1))
    rate = max(0.0, q * lq.gain * (ec_term + pa_term))
    return rate, RateParts(
        gain=lq.gain, qber=lq.qber, omega=omega, e1=e1,
        ec_term=ec_term, pa_term=pa_term,
    )


def entangled_parts(q: float, lq: LinkQuantities, f: float) -> tuple[float, RateParts]:
    h2 = binary_entropy(lq.qber)
    ec_term = -f * h2
    pa_term = 1.0 - h2
    rate = max(0.0, q * lq.gain * (ec_term + pa_term))
    return rate, RateParts(
        gain=lq.gain, qber=lq.qber, omega=lq.omega, e1=lq.qber,
        ec_term=ec_term, pa_term=pa_term,
    )
