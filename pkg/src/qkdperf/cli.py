"""Command-line interface.

Every computing subcommand resolves a preset plus overrides into the same
configuration objects the HTTP service consumes and renders through the
same document builders, so both paths emit identical payloads.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

import numpy as np

from . import documents
from .decoy import TmdConfig, invert_statistics, read_click_records
from .hardware import ProtocolKind, SourceKind
from .numerics import DistributionVec
from .rates import bits_per_second
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
from .simulate import (
    AttackKind,
    AttackSpec,
    simulate_bb84,
    simulate_sarg04,
    transcript_to_csv,
)

# Protocol-kind defaults applied by --protocol; SARG04's sifting factor is
# its ideal conclusive fraction, the entangled scheme keeps random-basis
# sifting.
_PROTOCOL_DEFAULTS: dict[str, dict[str, Any]] = {
    "bb84": {"sifting_q": 1.0, "decoy_means": []},
    "bb84_decoy_active": {"sifting_q": 1.0, "decoy_means": [0.0, 0.05]},
    "bb84_decoy_passive": {"sifting_q": 1.0, "decoy_means": []},
    "sarg04": {"sifting_q": 0.25, "decoy_means": []},
    "entangled_pdc": {"sifting_q": 0.5, "decoy_means": []},
}


def _parse_set_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _apply_overrides(config: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        path, _, raw = item.partition("=")
        keys = path.strip().split(".")
        target = config
        for key in keys[:-1]:
            if key not in target or not isinstance(target[key], dict):
                raise ValueError(f"unknown configuration path {path!r}")
            target = target[key]
        if keys[-1] not in target:
            raise ValueError(f"unknown configuration field {path!r}")
        target[keys[-1]] = _parse_set_value(raw.strip())
    return config


def resolve_scenario(
    preset_name: str,
    protocol_kind: str | None = None,
    overrides: Sequence[str] = (),
) -> ScenarioPreset:
    """Preset + optional protocol switch + dotted-path overrides."""
    scenario = preset(preset_name)
    config = scenario.to_dict()

    if protocol_kind is not None:
        kind = ProtocolKind(protocol_kind)
        config["protocol"]["kind"] = kind.value
        config["protocol"].update(_PROTOCOL_DEFAULTS[kind.value])
        needs_pairs = kind in (ProtocolKind.ENTANGLED_PDC, ProtocolKind.BB84_DECOY_PASSIVE)
        if needs_pairs and config["source"]["kind"] != SourceKind.HERALDED_PDC.value:
            config["source"]["kind"] = SourceKind.HERALDED_PDC.value
            config["source"]["mean_photons"] = 0.1
            config["source"]["trigger_efficiency"] = (
                0.7 if kind == ProtocolKind.BB84_DECOY_PASSIVE else 1.0
            )

    config = _apply_overrides(config, overrides)
    return ScenarioPreset.from_dict(config)


def _parse_grid(spec: str) -> tuple[float, ...]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--grid expects lo:hi:n, got {spec!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid needs at least one point")
    return tuple(float(v) for v in np.linspace(lo, hi, n))


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as handle:
            handle.write(text)


def _emit_curve(curve: RateCurve, fmt: str, out_path: str | None) -> None:
    if fmt == "csv":
        _emit(documents.curve_to_csv(curve), out_path)
    else:
        _emit(documents.canonical_json(documents.curve_document(curve)), out_path)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default="standard",
                        help="scenario preset name (see `presets`)")
    parser.add_argument("--protocol", default=None,
                        choices=sorted(_PROTOCOL_DEFAULTS),
                        help="switch protocol kind, keeping preset hardware")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration field by dotted path, "
                             "e.g. hardware.detector.efficiency=0.2")


def _add_output_flags(parser: argparse.ArgumentParser, formats=("csv", "json")) -> None:
    parser.add_argument("--format", default="json", choices=formats)
    parser.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdperf",
        description="Secret-key-rate bounds and quantum-stage simulation "
                    "for discrete-variable QKD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rate = sub.add_parser("rate", help="single rate point")
    _add_config_flags(p_rate)
    p_rate.add_argument("--length", type=float, default=None,
                        help="channel length in km (default: preset length)")
    _add_output_flags(p_rate)

    p_sweep = sub.add_parser("sweep", help="rate curve over a parameter grid")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--variable", default="length",
                         choices=[v.value for v in SweepVariable])
    p_sweep.add_argument("--grid", required=True, metavar="LO:HI:N")
    _add_output_flags(p_sweep)

    p_opt = sub.add_parser("optimize-mu", help="best source intensity at a length")
    _add_config_flags(p_opt)
    p_opt.add_argument("--length", type=float, required=True)
    _add_output_flags(p_opt, formats=("json",))

    p_dist = sub.add_parser("max-distance", help="largest secure distance")
    _add_config_flags(p_dist)
    p_dist.add_argument("--floor", type=float, default=1e-9,
                        help="secret-rate floor in bits per pulse")
    _add_output_flags(p_dist, formats=("json",))

    p_sim = sub.add_parser("simulate", help="Monte-Carlo quantum stage")
    _add_config_flags(p_sim)
    p_sim.add_argument("--pulses", type=int, default=100_000)
    p_sim.add_argument("--attack", default="none",
                       choices=[k.value for k in AttackKind])
    p_sim.add_argument("--attack-fraction", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--transcript", default=None, metavar="PATH",
                       help="also write the per-pulse transcript CSV here")
    _add_output_flags(p_sim, formats=("json",))

    p_tmd = sub.add_parser("tmd-invert",
                           help="invert TMD click statistics to sent statistics")
    p_tmd.add_argument("--input", default="-",
                       help="click records, one integer per line (default stdin)")
    p_tmd.add_argument("--bins", type=int, default=8)
    p_tmd.add_argument("--tmd-eta", type=float, default=0.7)
    p_tmd.add_argument("--n-max", type=int, default=8)
    _add_output_flags(p_tmd, formats=("json",))

    p_presets = sub.add_parser("presets", help="list scenario presets")
    _add_output_flags(p_presets, formats=("json",))

    p_serve = sub.add_parser("serve", help="start the HTTP rate service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_rate(args) -> None:
    scenario = resolve_scenario(args.preset, args.protocol, args.set)
    point = evaluate_point(scenario, length_km=args.length)
    curve = RateCurve(points=(point,), scenario=scenario)
    _emit_curve(curve, args.format, args.out)


def _cmd_sweep(args) -> None:
    scenario = resolve_scenario(args.preset, args.protocol, args.set)
    spec = SweepSpec(
        variable=SweepVariable(args.variable),
        grid=_parse_grid(args.grid),
        scenario=scenario,
    )
    _emit_curve(sweep(spec), args.format, args.out)


def _cmd_optimize(args) -> None:
    scenario = resolve_scenario(args.preset, args.protocol, args.set)
    mean, rate = optimize_mean_photons(scenario, length_km=args.length)
    doc = documents.optimize_document(
        scenario, args.length, mean, rate,
        bits_per_second(rate, scenario.source.effective_rep_rate()),
    )
    _emit(documents.canonical_json(doc), args.out)


def _cmd_max_distance(args) -> None:
    scenario = resolve_scenario(args.preset, args.protocol, args.set)
    distance = max_secure_distance(scenario, rate_floor=args.floor)
    doc = documents.max_distance_document(scenario, args.floor, distance)
    _emit(documents.canonical_json(doc), args.out)


def _cmd_simulate(args) -> None:
    scenario = resolve_scenario(args.preset, args.protocol, args.set)
    attack = AttackSpec(kind=AttackKind(args.attack), fraction=args.attack_fraction)
    runner = (
        simulate_sarg04
        if scenario.protocol.kind == ProtocolKind.SARG04
        else simulate_bb84
    )
    transcript = runner(
        args.pulses, scenario.hardware, scenario.source, attack=attack, seed=args.seed
    )
    if args.transcript:
        with open(args.transcript, "w") as handle:
            handle.write(transcript_to_csv(transcript))
    doc = documents.simulate_document(
        scenario, transcript, args.attack, args.attack_fraction, args.seed
    )
    _emit(documents.canonical_json(doc), args.out)


def _cmd_tmd_invert(args) -> None:
    if args.input == "-":
        lines = sys.stdin.readlines()
    else:
        with open(args.input) as handle:
            lines = handle.readlines()
    clicks = read_click_records(lines)
    cfg = TmdConfig(bins=args.bins, tmd_efficiency=args.tmd_eta, n_max=args.n_max)
    if clicks.max() > cfg.n_max:
        raise ValueError(
            f"click count {clicks.max()} exceeds --n-max {cfg.n_max}"
        )
    histogram = np.bincount(clicks, minlength=cfg.n_max + 1).astype(float)
    measured = DistributionVec(histogram / histogram.sum())
    result = invert_statistics(measured, cfg)
    doc = {
        "records": int(clicks.size),
        "measured": measured.entries.tolist(),
        "recovered": result.distribution.entries.tolist(),
        "residual": result.residual,
        "meta": {
            "bins": cfg.bins,
            "tmd_efficiency": cfg.tmd_efficiency,
            "n_max": cfg.n_max,
        },
    }
    _emit(documents.canonical_json(doc), args.out)


def _cmd_presets(args) -> None:
    _emit(documents.canonical_json(documents.presets_document()), args.out)


def _cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)


_COMMANDS = {
    "rate": _cmd_rate,
    "sweep": _cmd_sweep,
    "optimize-mu": _cmd_optimize,
    "max-distance": _cmd_max_distance,
    "simulate": _cmd_simulate,
    "tmd-invert": _cmd_tmd_invert,
    "presets": _cmd_presets,
    "serve": _cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
