"""Stateless HTTP facade over the computation core.

Every endpoint resolves its request to core objects, computes through the
same document builders the CLI uses, and returns the canonical JSON bytes
unmodified, so identical configurations produce byte-identical payloads
on both paths.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from .. import documents
from ..hardware import ProtocolKind
from ..scenarios import (
    NeverSecureError,
    evaluate_point,
    max_secure_distance,
    optimize_mean_photons,
    sweep,
    RateCurve,
)
from ..rates import bits_per_second
from ..simulate import AttackKind, AttackSpec, simulate_bb84, simulate_sarg04
from .schemas import (
    MaxDistanceRequest,
    OptimizeRequest,
    RateRequest,
    SimulateRequest,
)


def _json_response(document: dict) -> Response:
    return Response(
        content=documents.canonical_json(document),
        media_type="application/json",
    )


def create_app(allow_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(
        title="qkdperf rate service",
        description="Secret-key-rate lower bounds for discrete-variable QKD",
        version="0.1.0",
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=allow_origins if allow_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/presets")
    def get_presets() -> Response:
        return _json_response(documents.presets_document())

    @app.post("/api/rate-curve")
    def post_rate_curve(request: RateRequest) -> Response:
        try:
            scenario = request.to_scenario()
            spec = request.to_sweep()
            if spec is None:
                curve = RateCurve(
                    points=(evaluate_point(scenario),), scenario=scenario
                )
            else:
                curve = sweep(spec)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json_response(documents.curve_document(curve))

    @app.post("/api/optimize")
    def post_optimize(request: OptimizeRequest) -> Response:
        try:
            scenario = request.to_scenario()
            mean, rate = optimize_mean_photons(scenario, length_km=request.length_km)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json_response(
            documents.optimize_document(
                scenario,
                request.length_km,
                mean,
                rate,
                bits_per_second(rate, scenario.source.effective_rep_rate()),
            )
        )

    @app.post("/api/max-distance")
    def post_max_distance(request: MaxDistanceRequest) -> Response:
        try:
            scenario = request.to_scenario()
            distance = max_secure_distance(scenario, rate_floor=request.rate_floor)
        except NeverSecureError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json_response(
            documents.max_distance_document(scenario, request.rate_floor, distance)
        )

    @app.post("/api/simulate")
    def post_simulate(request: SimulateRequest) -> Response:
        try:
            scenario = request.to_scenario()
            attack = AttackSpec(
                kind=AttackKind(request.attack.kind),
                fraction=request.attack.fraction,
            )
            if scenario.protocol.kind == ProtocolKind.SARG04:
                runner = simulate_sarg04
            elif scenario.protocol.kind in (
                ProtocolKind.BB84,
                ProtocolKind.BB84_DECOY_ACTIVE,
                ProtocolKind.BB84_DECOY_PASSIVE,
            ):
                runner = simulate_bb84
            else:
                raise ValueError(
                    "the quantum-stage simulator covers the prepare-and-measure "
                    "protocols, not entangled_pdc"
                )
            transcript = runner(
                request.n_pulses,
                scenario.hardware,
                scenario.source,
                attack=attack,
                seed=request.seed,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _json_response(
            documents.simulate_document(
                scenario,
                transcript,
                request.attack.kind,
                request.attack.fraction,
                request.seed,
            )
        )

    return app
