"""Canonical machine-readable documents for curves and results.

The CLI and the HTTP service both render through these builders, so the
two paths emit byte-identical payloads for identical resolved
configurations.
"""

from __future__ import annotations

import json
from typing import Any

from .rates import RatePoint
from .scenarios import (
    RateCurve,
    ScenarioPreset,
    all_presets,
    scenario_config_dict,
)
from .simulate import StageTranscript

CSV_HEADER = "length_km,secret_rate_bits_per_pulse,bits_per_second,Q,E,omega,e1"
CSV_COLUMNS = CSV_HEADER.split(",")


def point_row(point: RatePoint) -> list[float]:
    return [
        point.length_km,
        point.secret_rate,
        point.bits_per_second,
        point.parts.gain,
        point.parts.qber,
        point.parts.omega,
        point.parts.e1,
    ]


def canonical_json(document: dict[str, Any]) -> str:
    """Stable rendering: sorted keys, two-space indent, trailing newline."""
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def curve_to_csv(curve: RateCurve) -> str:
    lines = [CSV_HEADER]
    for point in curve.points:
        lines.append(",".join(repr(v) for v in point_row(point)))
    return "\n".join(lines) + "\n"


def _sweep_meta(curve: RateCurve) -> dict[str, Any] | None:
    if curve.sweep is None:
        return None
    return {
        "variable": curve.sweep.variable.value,
        "grid": list(curve.sweep.grid),
    }


def curve_document(curve: RateCurve) -> dict[str, Any]:
    return {
        "columns": CSV_COLUMNS,
        "rows": [point_row(p) for p in curve.points],
        "meta": {
            **scenario_config_dict(curve.scenario),
            "sweep": _sweep_meta(curve),
        },
    }


def optimize_document(
    scenario: ScenarioPreset, length_km: float, mean: float, rate: float,
    bits_per_second: float,
) -> dict[str, Any]:
    return {
        "optimum": {
            "mean_photons": mean,
            "secret_rate_bits_per_pulse": rate,
            "bits_per_second": bits_per_second,
        },
        "length_km": length_km,
        "meta": scenario_config_dict(scenario),
    }


def max_distance_document(
    scenario: ScenarioPreset, rate_floor: float, distance_km: float
) -> dict[str, Any]:
    return {
        "max_distance_km": distance_km,
        "rate_floor_bits_per_pulse": rate_floor,
        "meta": scenario_config_dict(scenario),
    }


def simulate_document(
    scenario: ScenarioPreset,
    transcript: StageTranscript,
    attack_kind: str,
    attack_fraction: float,
    seed: int,
) -> dict[str, Any]:
    return {
        "summary": {
            "n_pulses": transcript.n_pulses,
            "gain": transcript.gain,
            "qber": transcript.qber,
            "sift_fraction": transcript.sift_fraction,
            "sifted_bits": int(transcript.sifted_key_a.size),
        },
        "attack": {"kind": attack_kind, "fraction": attack_fraction},
        "seed": seed,
        "meta": scenario_config_dict(scenario),
    }


def presets_document() -> dict[str, Any]:
    return {
        "presets": [
            {
                "name": p.name,
                "provenance": p.provenance,
                "config": scenario_config_dict(p),
            }
            for p in all_presets()
        ]
    }
