"""Request and response validation models for the rate service.

These mirror the core dataclasses one-to-one; validation failures surface
as 422 responses whose locations name the offending field path.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from ..hardware import (
    ChannelSpec,
    DetectorSpec,
    HardwareConfig,
    PhotonSource,
    ProtocolSpec,
)
from ..scenarios import ScenarioPreset, SweepSpec, SweepVariable


class ChannelModel(BaseModel):
    attenuation_db_per_km: Optional[float] = Field(default=None, ge=0)
    length_km: float = Field(default=0.0, ge=0)
    fixed_loss_db: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_loss_mode(self):
        if (self.attenuation_db_per_km is None) == (self.fixed_loss_db is None):
            raise ValueError(
                "exactly one of attenuation_db_per_km and fixed_loss_db must be set"
            )
        return self

    def to_core(self) -> ChannelSpec:
        return ChannelSpec(
            attenuation_db_per_km=self.attenuation_db_per_km,
            length_km=self.length_km,
            fixed_loss_db=self.fixed_loss_db,
        )


class DetectorModel(BaseModel):
    efficiency: float = Field(ge=0.0, le=1.0)
    dark_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    misalignment: float = Field(default=0.0, ge=0.0, le=1.0)

    def to_core(self) -> DetectorSpec:
        return DetectorSpec(
            efficiency=self.efficiency,
            dark_prob=self.dark_prob,
            misalignment=self.misalignment,
        )


class HardwareModel(BaseModel):
    channel: ChannelModel
    detector: DetectorModel
    qber_override: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    def to_core(self) -> HardwareConfig:
        return HardwareConfig(
            channel=self.channel.to_core(),
            detector=self.detector.to_core(),
            qber_override=self.qber_override,
        )


class SourceModel(BaseModel):
    kind: Literal["poisson", "thermal", "single_photon", "heralded_pdc"] = "poisson"
    mean_photons: float = Field(default=0.5, ge=0)
    rep_rate: float = Field(default=2.0e7, gt=0)
    trigger_efficiency: float = Field(default=1.0, gt=0.0, le=1.0)

    def to_core(self) -> PhotonSource:
        return PhotonSource(
            kind=self.kind,
            mean_photons=self.mean_photons,
            rep_rate=self.rep_rate,
            trigger_efficiency=self.trigger_efficiency,
        )


class ProtocolModel(BaseModel):
    kind: Literal[
        "bb84", "bb84_decoy_active", "bb84_decoy_passive", "sarg04", "entangled_pdc"
    ] = "bb84"
    sifting_q: float = Field(default=1.0, gt=0.0, le=1.0)
    ec_efficiency: float = Field(default=1.0, ge=1.0)
    decoy_means: list[float] = Field(default_factory=list)

    def to_core(self) -> ProtocolSpec:
        return ProtocolSpec(
            kind=self.kind,
            sifting_q=self.sifting_q,
            ec_efficiency=self.ec_efficiency,
            decoy_means=tuple(self.decoy_means),
        )


class SweepModel(BaseModel):
    variable: Literal[
        "length", "e_det", "eta_det", "p_dark", "alpha", "mean_photons"
    ] = "length"
    grid: list[float] = Field(min_length=1, max_length=2048)


class RateRequest(BaseModel):
    protocol: ProtocolModel
    hardware: HardwareModel
    source: SourceModel
    sweep: Optional[SweepModel] = None

    def to_scenario(self) -> ScenarioPreset:
        return ScenarioPreset(
            name="request",
            hardware=self.hardware.to_core(),
            protocol=self.protocol.to_core(),
            source=self.source.to_core(),
        )

    def to_sweep(self) -> Optional[SweepSpec]:
        if self.sweep is None:
            return None
        return SweepSpec(
            variable=SweepVariable(self.sweep.variable),
            grid=tuple(self.sweep.grid),
            scenario=self.to_scenario(),
        )


class OptimizeRequest(BaseModel):
    protocol: ProtocolModel
    hardware: HardwareModel
    source: SourceModel
    length_km: float = Field(ge=0)

    def to_scenario(self) -> ScenarioPreset:
        return ScenarioPreset(
            name="request",
            hardware=self.hardware.to_core(),
            protocol=self.protocol.to_core(),
            source=self.source.to_core(),
        )


class MaxDistanceRequest(BaseModel):
    protocol: ProtocolModel
    hardware: HardwareModel
    source: SourceModel
    rate_floor: float = Field(default=1e-9, gt=0)

    def to_scenario(self) -> ScenarioPreset:
        return ScenarioPreset(
            name="request",
            hardware=self.hardware.to_core(),
            protocol=self.protocol.to_core(),
            source=self.source.to_core(),
        )


class AttackModel(BaseModel):
    kind: Literal["none", "intercept_resend", "photon_number_splitting"] = "none"
    fraction: float = Field(default=0.0, ge=0.0, le=1.0)


class SimulateRequest(BaseModel):
    protocol: ProtocolModel
    hardware: HardwareModel
    source: SourceModel
    n_pulses: int = Field(default=100_000, ge=1, le=50_000_000)
    attack: AttackModel = Field(default_factory=AttackModel)
    seed: int = Field(default=0, ge=0)

    def to_scenario(self) -> ScenarioPreset:
        return ScenarioPreset(
            name="request",
            hardware=self.hardware.to_core(),
            protocol=self.protocol.to_core(),
            source=self.source.to_core(),
        )
