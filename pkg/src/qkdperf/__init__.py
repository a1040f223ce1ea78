"""qkdperf: performance bounds and simulation for discrete-variable QKD.

Provable lower bounds on secret-key rates under realistic hardware,
intensity optimization, secure-distance solving, a pulse-level quantum
stage simulator with eavesdropping models, decoy-state estimation with
TMD statistics inversion, and an HTTP service plus CLI on top.
"""

from .hardware import (
    ChannelSpec,
    DetectorSpec,
    HardwareConfig,
    LinkQuantities,
    PhotonSource,
    ProtocolKind,
    ProtocolSpec,
    SourceKind,
    entangled_link_quantities,
    link_quantities,
    system_transmittance,
    yield_n,
)
from .numerics import (
    DistributionVec,
    binary_entropy,
    bisect_root,
    maximize_scalar,
    poisson_pn,
    solve_linear,
    thermal_pn,
)
from .rates import (
    RatePoint,
    TwoWayTransform,
    bits_per_second,
    rate_entangled,
    rate_one_way,
    rate_two_way,
)
from .scenarios import (
    RateCurve,
    ScenarioPreset,
    SweepSpec,
    SweepVariable,
    available_presets,
    evaluate_point,
    max_secure_distance,
    optimize_mean_photons,
    preset,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "DetectorSpec",
    "DistributionVec",
    "HardwareConfig",
    "LinkQuantities",
    "PhotonSource",
    "ProtocolKind",
    "ProtocolSpec",
    "RateCurve",
    "RatePoint",
    "ScenarioPreset",
    "SourceKind",
    "SweepSpec",
    "SweepVariable",
    "TwoWayTransform",
    "available_presets",
    "binary_entropy",
    "bisect_root",
    "bits_per_second",
    "entangled_link_quantities",
    "evaluate_point",
    "link_quantities",
    "max_secure_distance",
    "maximize_scalar",
    "optimize_mean_photons",
    "poisson_pn",
    "preset",
    "rate_entangled",
    "rate_one_way",
    "rate_two_way",
    "solve_linear",
    "sweep",
    "system_transmittance",
    "thermal_pn",
    "yield_n",
]
