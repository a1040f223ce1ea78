"""Physical component parameters and the effective link quantities.

Translates source/channel/detector specs into the yields, gains and error
rates that the rate engines consume. The channel model is the standard
one for threshold detectors behind a lossy line:

    Y_n = Y_0 + eta_n - Y_0 * eta_n,   eta_n = 1 - (1 - eta_sys)^n

with Y_0 identified with the dark-count probability per gated pulse,
background errors at e_0 = 1/2 and misalignment applied to the
signal-induced part of each click.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .numerics import (
    DEFAULT_N_MAX,
    poisson_distribution,
    thermal_distribution,
)

# Background (dark-count) clicks decode to either bit with equal odds.
E_BACKGROUND = 0.5

# Truncated photon-number series must retain at least this much mass.
_TRUNCATION_TOL = 1e-9


class DegenerateConfigurationError(ValueError):
    """The configured link can never produce a click."""


class SourceKind(str, Enum):
    POISSON = "poisson"
    THERMAL = "thermal"
    SINGLE_PHOTON = "single_photon"
    HERALDED_PDC = "heralded_pdc"


class ProtocolKind(str, Enum):
    BB84 = "bb84"
    BB84_DECOY_ACTIVE = "bb84_decoy_active"
    BB84_DECOY_PASSIVE = "bb84_decoy_passive"
    SARG04 = "sarg04"
    ENTANGLED_PDC = "entangled_pdc"


@dataclass(frozen=True)
class PhotonSource:
    """Photon-number statistics of the pulse source.

    For ``heralded_pdc`` the pairs follow a thermal distribution and the
    idler arm triggers with per-photon efficiency ``trigger_efficiency``;
    heralding removes the vacuum and rescales the repetition rate by the
    trigger probability.
    """

    kind: SourceKind = SourceKind.POISSON
    mean_photons: float = 0.5
    rep_rate: float = 2.0e7  # pulses per second
    trigger_efficiency: float = 1.0  # heralded_pdc only

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        for name in ("mean_photons", "rep_rate", "trigger_efficiency"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.mean_photons < 0:
            raise ValueError(f"mean_photons must be >= 0, got {self.mean_photons}")
        if self.rep_rate <= 0:
            raise ValueError(f"rep_rate must be > 0, got {self.rep_rate}")
        if not 0.0 < self.trigger_efficiency <= 1.0:
            raise ValueError(
                f"trigger_efficiency must be in (0, 1], got {self.trigger_efficiency}"
            )

    def auto_n_max(self) -> int:
        """Truncation index keeping the tail below 1e-10."""
        mean = self.mean_photons
        if self.kind == SourceKind.SINGLE_PHOTON or mean == 0.0:
            return DEFAULT_N_MAX
        if self.kind == SourceKind.POISSON:
            adaptive = mean + 10.0 * math.sqrt(mean) + 10.0
        else:
            # Thermal tail beyond k decays like (mean / (1 + mean))^k.
            adaptive = math.log(1e-10) / math.log(mean / (1.0 + mean))
        return max(DEFAULT_N_MAX, int(math.ceil(adaptive)))

    def pair_distribution(self, n_max: int | None = None) -> np.ndarray:
        """Raw emitted photon (or pair) number distribution."""
        if n_max is None:
            n_max = self.auto_n_max()
        if self.kind == SourceKind.SINGLE_PHOTON:
            dist = np.zeros(n_max + 1)
            dist[1] = 1.0
            return dist
        if self.kind == SourceKind.POISSON:
            return poisson_distribution(self.mean_photons, n_max)
        return thermal_distribution(self.mean_photons, n_max)

    def trigger_probability(self, n_max: int | None = None) -> float:
        """Probability that the idler arm heralds a pulse."""
        if self.kind != SourceKind.HERALDED_PDC:
            return 1.0
        pairs = self.pair_distribution(n_max)
        n = np.arange(pairs.size)
        detect = 1.0 - (1.0 - self.trigger_efficiency) ** n
        return float(pairs @ detect)

    def distribution(self, n_max: int | None = None) -> np.ndarray:
        """Photon-number distribution of pulses entering the channel.

        For heralded sources this is conditioned on a successful trigger,
        which removes the vacuum component.
        """
        dist = self.pair_distribution(n_max)
        if self.kind != SourceKind.HERALDED_PDC:
            return dist
        n = np.arange(dist.size)
        detect = 1.0 - (1.0 - self.trigger_efficiency) ** n
        conditioned = dist * detect
        total = conditioned.sum()
        if total <= 0.0:
            raise DegenerateConfigurationError("heralded source never triggers")
        return conditioned / total

    def effective_rep_rate(self) -> float:
        """Pulse rate after heralding losses."""
        return self.rep_rate * self.trigger_probability()

    def validate_truncation(self, n_max: int | None = None) -> None:
        total = float(self.pair_distribution(n_max).sum())
        if not (1.0 - _TRUNCATION_TOL <= total <= 1.0 + _TRUNCATION_TOL):
            raise ValueError(f"truncated distribution sums to {total}")


@dataclass(frozen=True)
class ChannelSpec:
    """Quantum channel: either dB/km over a length, or a fixed total loss."""

    attenuation_db_per_km: float | None = None
    length_km: float = 0.0
    fixed_loss_db: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "length_km", float(self.length_km))
        for name in ("attenuation_db_per_km", "fixed_loss_db"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))
        if (self.attenuation_db_per_km is None) == (self.fixed_loss_db is None):
            raise ValueError(
                "exactly one of attenuation_db_per_km and fixed_loss_db must be set"
            )
        if self.attenuation_db_per_km is not None:
            if self.attenuation_db_per_km < 0:
                raise ValueError("attenuation must be >= 0 dB/km")
            if self.length_km < 0:
                raise ValueError("length must be >= 0 km")
        elif self.fixed_loss_db is not None and self.fixed_loss_db < 0:
            raise ValueError("fixed loss must be >= 0 dB")

    @property
    def loss_db(self) -> float:
        if self.fixed_loss_db is not None:
            return self.fixed_loss_db
        return self.attenuation_db_per_km * self.length_km

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)

    def with_length(self, length_km: float) -> "ChannelSpec":
        if self.fixed_loss_db is not None:
            raise ValueError("fixed-loss channel has no length dependence")
        return ChannelSpec(
            attenuation_db_per_km=self.attenuation_db_per_km, length_km=length_km
        )


@dataclass(frozen=True)
class DetectorSpec:
    """Threshold detector: efficiency, dark counts and misalignment."""

    efficiency: float = 0.1  # eta_det
    dark_prob: float = 0.0  # p_dark per gated pulse
    misalignment: float = 0.0  # e_det

    def __post_init__(self):
        for name in ("efficiency", "dark_prob", "misalignment"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol choice plus the sifting and error-correction parameters."""

    kind: ProtocolKind = ProtocolKind.BB84
    sifting_q: float = 1.0
    # Error-correction compensation factor f >= 1. The asymptotic curves
    # (and the published secure-distance sensitivities they quote) are
    # only reproduced at the Shannon limit f = 1; practical codes run at
    # 1.1 - 1.22, settable per protocol.
    ec_efficiency: float = 1.0
    decoy_means: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        object.__setattr__(self, "decoy_means", tuple(float(nu) for nu in self.decoy_means))
        object.__setattr__(self, "sifting_q", float(self.sifting_q))
        object.__setattr__(self, "ec_efficiency", float(self.ec_efficiency))
        if not 0.0 < self.sifting_q <= 1.0:
            raise ValueError(f"sifting_q must be in (0, 1], got {self.sifting_q}")
        if self.ec_efficiency < 1.0:
            raise ValueError(
                f"ec_efficiency must be >= 1, got {self.ec_efficiency}"
            )
        if self.kind == ProtocolKind.BB84_DECOY_ACTIVE:
            if not self.decoy_means:
                raise ValueError("active decoy protocol needs decoy intensities")
        elif self.decoy_means:
            raise ValueError(f"decoy_means only apply to active decoys, not {self.kind}")
        if any(nu < 0 for nu in self.decoy_means):
            raise ValueError("decoy intensities must be >= 0")


@dataclass(frozen=True)
class HardwareConfig:
    """Channel plus detector; optionally pins the QBER to a measured value
    instead of the modeled one."""

    channel: ChannelSpec
    detector: DetectorSpec
    qber_override: float | None = None

    def __post_init__(self):
        if self.qber_override is not None:
            object.__setattr__(self, "qber_override", float(self.qber_override))
            if not 0.0 <= self.qber_override <= 1.0:
                raise ValueError("qber_override must be in [0, 1]")

    def with_length(self, length_km: float) -> "HardwareConfig":
        return HardwareConfig(
            channel=self.channel.with_length(length_km),
            detector=self.detector,
            qber_override=self.qber_override,
        )


@dataclass(frozen=True)
class LinkQuantities:
    """Effective per-pulse quantities feeding the rate equations."""

    gain: float  # Q: conclusive-click probability per pulse
    qber: float  # E
    single_gain: float  # Q_1
    single_error: float  # e_1
    omega: float  # Q_1 / Q
    yields: np.ndarray = field(repr=False)  # Y_n, indexed by photon number


def system_transmittance(channel: ChannelSpec, detector: DetectorSpec) -> float:
    """Combined channel-and-detector transmittance eta_sys."""
    return detector.efficiency * channel.transmittance


def yield_n(hw: HardwareConfig, n: int) -> float:
    """Detection probability given n photons entered the channel."""
    if n < 0:
        raise ValueError(f"photon number must be >= 0, got {n}")
    eta_sys = system_transmittance(hw.channel, hw.detector)
    y0 = hw.detector.dark_prob
    eta_n = 1.0 - (1.0 - eta_sys) ** n
    return y0 + eta_n - y0 * eta_n


def _yield_vector(hw: HardwareConfig, n_max: int, dark: bool = True) -> np.ndarray:
    eta_sys = system_transmittance(hw.channel, hw.detector)
    y0 = hw.detector.dark_prob if dark else 0.0
    eta = 1.0 - (1.0 - eta_sys) ** np.arange(n_max + 1)
    return y0 + eta - y0 * eta


def link_quantities(source: PhotonSource, hw: HardwareConfig) -> LinkQuantities:
    """Gain, QBER and single-photon quantities for a one-arm link."""
    distribution = source.distribution()
    n_max = distribution.size - 1
    yields = _yield_vector(hw, n_max)
    y0 = hw.detector.dark_prob
    eta_sys = system_transmittance(hw.channel, hw.detector)
    e_det = hw.detector.misalignment

    gain = float(distribution @ yields)
    if gain <= 0.0:
        raise DegenerateConfigurationError(
            "zero gain: no dark counts and no transmittance"
        )

    qber = (E_BACKGROUND * y0 + e_det * (gain - y0)) / gain
    if hw.qber_override is not None:
        qber = hw.qber_override

    y1 = float(yields[1]) if n_max >= 1 else 0.0
    p1 = float(distribution[1]) if n_max >= 1 else 0.0
    single_gain = p1 * y1
    if y1 > 0.0:
        single_error = (E_BACKGROUND * y0 + e_det * eta_sys) / y1
    else:
        single_error = E_BACKGROUND
    single_error = min(single_error, E_BACKGROUND)

    return LinkQuantities(
        gain=gain,
        qber=qber,
        single_gain=single_gain,
        single_error=single_error,
        omega=single_gain / gain,
        yields=yields,
    )


def entangled_link_quantities(
    source: PhotonSource, hw_a: HardwareConfig, hw_b: HardwareConfig
) -> LinkQuantities:
    """Coincidence gain and QBER for a source placed between the parties.

    Pair emission follows the source's raw pair-number distribution
    (thermal for a single-frequency downconverter, Poissonian for a broad
    one, a deterministic single pair for the idealized case); the two arms
    detect independently. Coincidences with at least one dark-caused click
    decode randomly, genuine signal coincidences err with the joint
    misalignment (the mean of the two arms' values).
    """
    pairs = source.pair_distribution()
    n_max = pairs.size - 1

    yields_a = _yield_vector(hw_a, n_max)
    yields_b = _yield_vector(hw_b, n_max)
    signal_a = _yield_vector(hw_a, n_max, dark=False)
    signal_b = _yield_vector(hw_b, n_max, dark=False)

    coincidence = yields_a * yields_b
    gain = float(pairs @ coincidence)
    if gain <= 0.0:
        raise DegenerateConfigurationError("zero coincidence gain")

    gain_signal = float(pairs @ (signal_a * signal_b))
    e_pair = 0.5 * (hw_a.detector.misalignment + hw_b.detector.misalignment)
    qber = (E_BACKGROUND * (gain - gain_signal) + e_pair * gain_signal) / gain

    single_gain = float(pairs[1] * coincidence[1]) if n_max >= 1 else 0.0
    return LinkQuantities(
        gain=gain,
        qber=qber,
        single_gain=single_gain,
        single_error=qber,
        omega=single_gain / gain,
        yields=coincidence,
    )
