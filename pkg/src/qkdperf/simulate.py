"""Pulse-level Monte-Carlo simulation of the quantum stage.

States are represented abstractly: a basis bit plus a data bit, with a
wrong-basis measurement giving a uniformly random outcome. That exactly
reproduces the 1/sqrt(2)-overlap statistics of the two conjugate bases
without tracking amplitudes. Each simulation call owns one seeded
generator, so a fixed seed gives bit-identical transcripts.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .hardware import (
    HardwareConfig,
    PhotonSource,
    SourceKind,
    link_quantities,
    system_transmittance,
)


class ZeroConclusiveError(RuntimeError):
    """No pulse survived to the sifted key."""


class KeyTooShortError(ValueError):
    """One-time pad key shorter than the message."""


class AttackKind(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    PHOTON_NUMBER_SPLITTING = "photon_number_splitting"


@dataclass(frozen=True)
class AttackSpec:
    """Eavesdropping model applied to a fraction of the pulses."""

    kind: AttackKind = AttackKind.NONE
    fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")


@dataclass(frozen=True)
class StageTranscript:
    """Per-pulse record of one simulated quantum stage.

    ``received_outcomes`` holds the measured bit (or state index for the
    four-state protocol) and -1 where no click occurred.
    ``conclusive_flags`` marks pulses that contribute to the sifted key.
    """

    sent_bits: np.ndarray = field(repr=False)
    sent_bases: np.ndarray = field(repr=False)
    received_outcomes: np.ndarray = field(repr=False)
    conclusive_flags: np.ndarray = field(repr=False)
    sifted_key_a: np.ndarray = field(repr=False)
    sifted_key_b: np.ndarray = field(repr=False)
    qber: float = 0.0
    sift_fraction: float = 0.0

    @property
    def n_pulses(self) -> int:
        return self.sent_bits.size

    @property
    def gain(self) -> float:
        """Click probability per pulse, before sifting."""
        return float((self.received_outcomes >= 0).mean())


def _sample_photon_numbers(
    source: PhotonSource, n_pulses: int, rng: np.random.Generator
) -> np.ndarray:
    if source.kind == SourceKind.SINGLE_PHOTON:
        return np.ones(n_pulses, dtype=np.int64)
    if source.kind == SourceKind.POISSON:
        return rng.poisson(source.mean_photons, n_pulses)
    if source.kind == SourceKind.THERMAL:
        if source.mean_photons == 0.0:
            return np.zeros(n_pulses, dtype=np.int64)
        return rng.geometric(1.0 / (1.0 + source.mean_photons), n_pulses) - 1
    # Heralded: draw from the trigger-conditioned distribution.
    dist = source.distribution()
    return rng.choice(dist.size, size=n_pulses, p=dist)


def _pns_transmit_probability(source: PhotonSource, hw: HardwareConfig) -> float:
    """Multiphoton pass probability that matches the expected signal gain.

    Single-photon pulses are always blocked; the remainder is forwarded
    losslessly with this probability so that the overall gain mimics the
    honest lossy channel at the signal intensity.
    """
    expected = link_quantities(source, hw).gain
    y0 = hw.detector.dark_prob
    dist = source.distribution()
    p_multi = float(dist[2:].sum())
    if p_multi <= 0.0:
        return 0.0
    beta = (expected - y0) / ((1.0 - y0) * p_multi)
    return min(max(beta, 0.0), 1.0)


def _transmit_signal(
    n_photons: np.ndarray,
    source: PhotonSource,
    hw: HardwareConfig,
    attack: AttackSpec,
    attacked: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Whether each pulse causes a signal-induced click at the receiver."""
    eta_sys = system_transmittance(hw.channel, hw.detector)
    survivors = rng.binomial(n_photons, eta_sys)
    signal_click = survivors > 0
    if attack.kind == AttackKind.PHOTON_NUMBER_SPLITTING and attacked.any():
        beta = _pns_transmit_probability(source, hw)
        forwarded = (n_photons >= 2) & (rng.random(n_photons.size) < beta)
        signal_click = np.where(attacked, forwarded, signal_click)
    return signal_click


def simulate_bb84(
    n_pulses: int,
    hw: HardwareConfig,
    source: PhotonSource,
    attack: AttackSpec = AttackSpec(),
    seed: int = 0,
) -> StageTranscript:
    """Simulate the two-basis protocol quantum stage.

    Sender picks a random bit and basis per pulse; an intercept-resend
    eavesdropper measures attacked pulses in a random basis and forwards
    her outcome; the receiver measures in a random basis. Sifting keeps
    clicked pulses with matching announced bases.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    rng = np.random.default_rng(seed)

    n_photons = _sample_photon_numbers(source, n_pulses, rng)
    a_bits = rng.integers(0, 2, n_pulses, dtype=np.int8)
    a_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)

    attacked = np.zeros(n_pulses, dtype=bool)
    if attack.kind != AttackKind.NONE and attack.fraction > 0.0:
        attacked = rng.random(n_pulses) < attack.fraction

    fwd_bits = a_bits.copy()
    fwd_bases = a_bases.copy()
    if attack.kind == AttackKind.INTERCEPT_RESEND and attacked.any():
        eve_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)
        eve_coin = rng.integers(0, 2, n_pulses, dtype=np.int8)
        mismatch = attacked & (eve_bases != a_bases)
        fwd_bases[mismatch] = eve_bases[mismatch]
        fwd_bits[mismatch] = eve_coin[mismatch]

    signal_click = _transmit_signal(n_photons, source, hw, attack, attacked, rng)
    dark = rng.random(n_pulses) < hw.detector.dark_prob
    click = signal_click | dark

    b_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)
    flips = rng.random(n_pulses) < hw.detector.misalignment
    coin = rng.integers(0, 2, n_pulses, dtype=np.int8)

    outcomes = np.full(n_pulses, -1, dtype=np.int8)
    matched = signal_click & (b_bases == fwd_bases)
    outcomes[matched] = fwd_bits[matched] ^ flips[matched]
    random_outcome = (signal_click & (b_bases != fwd_bases)) | (dark & ~signal_click)
    outcomes[random_outcome] = coin[random_outcome]

    conclusive = click & (b_bases == a_bases)
    if not conclusive.any():
        raise ZeroConclusiveError("no conclusive pulse survived")

    key_a = a_bits[conclusive]
    key_b = outcomes[conclusive]
    return StageTranscript(
        sent_bits=a_bits,
        sent_bases=a_bases,
        received_outcomes=outcomes,
        conclusive_flags=conclusive,
        sifted_key_a=key_a,
        sifted_key_b=key_b,
        qber=float((key_a != key_b).mean()),
        sift_fraction=float(conclusive.mean()),
    )


# Four-state indices sit 45 degrees apart on the polarization circle:
# index i has basis i % 2 and data bit i // 2; the orthogonal partner is
# (i + 2) % 4 and the non-orthogonal neighbours are (i +/- 1) % 4.
def _state_index(bases: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return (bases + 2 * bits).astype(np.int8)


def simulate_sarg04(
    n_pulses: int,
    hw: HardwareConfig,
    source: PhotonSource,
    attack: AttackSpec = AttackSpec(),
    seed: int = 0,
) -> StageTranscript:
    """Simulate the four-state protocol with set announcement.

    The quantum stage is identical to the two-basis protocol; the key bit
    is carried by the *basis* choice. The sender announces a pair made of
    the sent state and a random neighbouring state; the receiver's result
    is conclusive when his outcome is orthogonal to one pair member, and
    decodes to the other member.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    rng = np.random.default_rng(seed)

    n_photons = _sample_photon_numbers(source, n_pulses, rng)
    a_bits = rng.integers(0, 2, n_pulses, dtype=np.int8)
    a_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)
    sent = _state_index(a_bases, a_bits)
    foil = (sent + rng.choice(np.array([-1, 1], dtype=np.int8), n_pulses)) % 4

    attacked = np.zeros(n_pulses, dtype=bool)
    if attack.kind != AttackKind.NONE and attack.fraction > 0.0:
        attacked = rng.random(n_pulses) < attack.fraction

    fwd = sent.copy()
    if attack.kind == AttackKind.INTERCEPT_RESEND and attacked.any():
        eve_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)
        eve_coin = rng.integers(0, 2, n_pulses, dtype=np.int8)
        mismatch = attacked & (eve_bases != (sent % 2))
        fwd[mismatch] = (eve_bases + 2 * eve_coin)[mismatch]

    signal_click = _transmit_signal(n_photons, source, hw, attack, attacked, rng)
    dark = rng.random(n_pulses) < hw.detector.dark_prob
    click = signal_click | dark

    b_bases = rng.integers(0, 2, n_pulses, dtype=np.int8)
    coin = rng.integers(0, 2, n_pulses, dtype=np.int8)
    flips = rng.random(n_pulses) < hw.detector.misalignment

    outcomes = np.full(n_pulses, -1, dtype=np.int8)
    same_basis = signal_click & (b_bases == fwd % 2)
    outcomes[same_basis] = fwd[same_basis]
    random_outcome = (signal_click & ~same_basis) | (dark & ~signal_click)
    outcomes[random_outcome] = (b_bases + 2 * coin)[random_outcome]
    flip_these = (outcomes >= 0) & flips
    outcomes[flip_these] = (outcomes[flip_these] + 2) % 4

    # Orthogonal to the foil -> the sent state is inferred (correct);
    # orthogonal to the sent state -> the foil is inferred (basis error).
    infer_sent = click & (outcomes == (foil + 2) % 4)
    infer_foil = click & (outcomes == (sent + 2) % 4)
    conclusive = infer_sent | infer_foil
    if not conclusive.any():
        raise ZeroConclusiveError("no conclusive pulse survived")

    decoded = np.where(infer_sent, sent % 2, foil % 2).astype(np.int8)
    key_a = a_bases[conclusive]
    key_b = decoded[conclusive]
    return StageTranscript(
        sent_bits=a_bits,
        sent_bases=a_bases,
        received_outcomes=outcomes,
        conclusive_flags=conclusive,
        sifted_key_a=key_a,
        sifted_key_b=key_b,
        qber=float((key_a != key_b).mean()),
        sift_fraction=float(conclusive.mean()),
    )


@dataclass(frozen=True)
class IntensityGain:
    """Measured vs. modeled gain at one pulse intensity."""

    intensity: float
    simulated_gain: float
    expected_gain: float
    z_score: float
    is_signal: bool


@dataclass(frozen=True)
class PnsReport:
    """Outcome of the photon-number-splitting detection demo."""

    entries: tuple[IntensityGain, ...]
    decoy_consistency: bool
    transmit_probability: float

    @property
    def signal_entry(self) -> IntensityGain:
        return next(e for e in self.entries if e.is_signal)


def pns_detection_demo(
    n_pulses: int,
    hw: HardwareConfig,
    source: PhotonSource,
    decoys: tuple[float, ...] | list[float],
    seed: int = 0,
    attack: bool = True,
    flag_sigma: float = 5.0,
) -> PnsReport:
    """Show that photon-number splitting hides in the loss budget.

    Under attack, single-photon pulses are blocked and multiphoton pulses
    forwarded losslessly with a pass probability calibrated to reproduce
    the expected gain at the signal intensity. The decoy intensities then
    reveal the manipulation: their gains deviate from the no-attack model
    by far more than ``flag_sigma`` standard errors.
    """
    if source.kind != SourceKind.POISSON:
        raise ValueError("the demo models a Poissonian multi-intensity source")
    rng = np.random.default_rng(seed)
    y0 = hw.detector.dark_prob
    eta_sys = system_transmittance(hw.channel, hw.detector)
    beta = _pns_transmit_probability(source, hw) if attack else 0.0

    entries = []
    consistent = True
    for intensity in (source.mean_photons, *decoys):
        is_signal = intensity == source.mean_photons
        expected = link_quantities(
            PhotonSource(kind=SourceKind.POISSON, mean_photons=intensity,
                         rep_rate=source.rep_rate),
            hw,
        ).gain
        n_photons = rng.poisson(intensity, n_pulses)
        dark = rng.random(n_pulses) < y0
        if attack:
            passed = (n_photons >= 2) & (rng.random(n_pulses) < beta)
        else:
            passed = rng.binomial(n_photons, eta_sys) > 0
        gain = float((passed | dark).mean())
        sigma = float(np.sqrt(expected * (1.0 - expected) / n_pulses))
        z = (gain - expected) / sigma if sigma > 0 else 0.0
        entries.append(
            IntensityGain(
                intensity=intensity,
                simulated_gain=gain,
                expected_gain=expected,
                z_score=z,
                is_signal=is_signal,
            )
        )
        if not is_signal and abs(z) > flag_sigma:
            consistent = False

    return PnsReport(
        entries=tuple(entries),
        decoy_consistency=consistent,
        transmit_probability=beta,
    )


def one_time_pad(message, key) -> np.ndarray:
    """Bitwise exclusive-or of a message with a key; its own inverse."""
    m = np.asarray(message, dtype=np.uint8)
    k = np.asarray(key, dtype=np.uint8)
    if np.any(m > 1) or np.any(k > 1):
        raise ValueError("message and key must be bit sequences")
    if k.size < m.size:
        raise KeyTooShortError(
            f"key has {k.size} bits but the message needs {m.size}"
        )
    return m ^ k[: m.size]


def transcript_to_csv(transcript: StageTranscript) -> str:
    """One pulse per row, for external inspection."""
    buf = io.StringIO()
    buf.write("pulse,sent_bit,sent_basis,received_outcome,conclusive\n")
    for i in range(transcript.n_pulses):
        buf.write(
            f"{i},{transcript.sent_bits[i]},{transcript.sent_bases[i]},"
            f"{transcript.received_outcomes[i]},{int(transcript.conclusive_flags[i])}\n"
        )
    return buf.getvalue()
