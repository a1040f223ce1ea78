from typing import Any

from qkdperf.scenarios import ScenarioPreset, scenario_config_dict


def request_body(
    scenario: ScenarioPreset,
    sweep: dict[str, Any] | None = None,
    **extra: Any,
) -> dict[str, Any]:
    """Service request body equivalent to a resolved scenario."""
    body = scenario_config_dict(scenario)
    if sweep is not None:
        body["sweep"] = sweep
    body.update(extra)
    return body
