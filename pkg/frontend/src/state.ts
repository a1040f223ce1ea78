/** Explorer state and its deterministic mapping onto service requests.
 *
 * The state holds a preset name plus a sparse override map keyed by the
 * dotted field path; the request builder re-applies overrides onto the
 * served preset configuration, so zero overrides reproduce the preset
 * exactly and every number sent comes from served data or an explicit
 * user edit.
 */

import type {
  CurveDocument,
  PresetInfo,
  ProtocolConfig,
  RateRequest,
  ScenarioConfig,
  SweepVariable,
} from "./types.js";

export interface SweepAxis {
  variable: SweepVariable;
  lo: number;
  hi: number;
  points: number;
}

export interface PinnedCurve {
  label: string;
  curve: CurveDocument;
}

export interface ExplorerState {
  activePreset: string;
  /** Dotted field path -> overridden value. */
  overrides: Record<string, number>;
  selectedProtocols: ProtocolConfig["kind"][];
  sweepAxis: SweepAxis;
  pinnedCurves: PinnedCurve[];
}

export class InvalidOverridePathError extends Error {}

/** Field paths the parameter panel may override. */
export const OVERRIDE_PATHS = [
  "hardware.channel.attenuation_db_per_km",
  "hardware.channel.length_km",
  "hardware.channel.fixed_loss_db",
  "hardware.detector.efficiency",
  "hardware.detector.dark_prob",
  "hardware.detector.misalignment",
  "protocol.sifting_q",
  "protocol.ec_efficiency",
  "source.mean_photons",
  "source.rep_rate",
  "source.trigger_efficiency",
] as const;

export function defaultState(presetName: string): ExplorerState {
  return {
    activePreset: presetName,
    overrides: {},
    selectedProtocols: [],
    sweepAxis: { variable: "length", lo: 0, hi: 250, points: 126 },
    pinnedCurves: [],
  };
}

function clone<T>(value: T): T {
  return JSON.parse(JSON.stringify(value)) as T;
}

function setPath(config: ScenarioConfig, path: string, value: number): void {
  if (!(OVERRIDE_PATHS as readonly string[]).includes(path)) {
    throw new InvalidOverridePathError(`unknown field path: ${path}`);
  }
  const keys = path.split(".");
  let target: Record<string, unknown> = config as unknown as Record<string, unknown>;
  for (const key of keys.slice(0, -1)) {
    target = target[key] as Record<string, unknown>;
  }
  target[keys[keys.length - 1]] = value;
}

/** Evenly spaced grid, endpoints included (n = 1 collapses to `lo`). */
export function linspace(lo: number, hi: number, n: number): number[] {
  if (n < 1 || !Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error(`invalid grid ${lo}:${hi}:${n}`);
  }
  if (n === 1) return [lo];
  const step = (hi - lo) / (n - 1);
  return Array.from({ length: n }, (_, i) => lo + i * step);
}

/** Resolve the active preset's served configuration. */
export function resolvePresetConfig(
  state: ExplorerState,
  presets: PresetInfo[],
): ScenarioConfig {
  const preset = presets.find((p) => p.name === state.activePreset);
  if (!preset) {
    throw new Error(`unknown preset: ${state.activePreset}`);
  }
  return clone(preset.config);
}

/** Deterministic state -> request mapping. */
export function buildRequest(
  state: ExplorerState,
  presets: PresetInfo[],
  protocolKind?: ProtocolConfig["kind"],
): RateRequest {
  const config = resolvePresetConfig(state, presets);
  for (const [path, value] of Object.entries(state.overrides)) {
    setPath(config, path, value);
  }
  if (protocolKind !== undefined && protocolKind !== config.protocol.kind) {
    applyProtocolKind(config, protocolKind);
  }
  const { variable, lo, hi, points } = state.sweepAxis;
  return {
    ...config,
    sweep: { variable, grid: linspace(lo, hi, points) },
  };
}

/** Switch the protocol kind of a resolved configuration, adjusting the
 * dependent fields the same way the service presets do. */
export function applyProtocolKind(
  config: ScenarioConfig,
  kind: ProtocolConfig["kind"],
): void {
  config.protocol.kind = kind;
  config.protocol.decoy_means = kind === "bb84_decoy_active" ? [0.0, 0.05] : [];
  config.protocol.sifting_q =
    kind === "sarg04" ? 0.25 : kind === "entangled_pdc" ? 0.5 : 1.0;
  const needsPairs = kind === "entangled_pdc" || kind === "bb84_decoy_passive";
  if (needsPairs && config.source.kind !== "heralded_pdc") {
    config.source.kind = "heralded_pdc";
    config.source.mean_photons = 0.1;
    config.source.trigger_efficiency =
      kind === "bb84_decoy_passive" ? 0.7 : 1.0;
  }
}

export function withOverride(
  state: ExplorerState,
  path: string,
  value: number,
): ExplorerState {
  if (!(OVERRIDE_PATHS as readonly string[]).includes(path)) {
    throw new InvalidOverridePathError(`unknown field path: ${path}`);
  }
  return { ...state, overrides: { ...state.overrides, [path]: value } };
}

export function pinCurve(
  state: ExplorerState,
  label: string,
  curve: CurveDocument,
): ExplorerState {
  // Pinned curves are snapshots; deep-copy so later mutations cannot
  // reach them.
  return {
    ...state,
    pinnedCurves: [...state.pinnedCurves, { label, curve: clone(curve) }],
  };
}

/** URL-fragment encoding of the shareable part of the state (pins stay
 * local: they are data snapshots, not parameters). */
export function encodeStateToHash(state: ExplorerState): string {
  const payload = {
    p: state.activePreset,
    o: state.overrides,
    s: state.selectedProtocols,
    a: state.sweepAxis,
  };
  return encodeURIComponent(JSON.stringify(payload));
}

export function decodeStateFromHash(hash: string): ExplorerState | null {
  if (!hash) return null;
  try {
    const payload = JSON.parse(decodeURIComponent(hash.replace(/^#/, "")));
    const base = defaultState(String(payload.p ?? "standard"));
    return {
      ...base,
      overrides: payload.o ?? {},
      selectedProtocols: payload.s ?? [],
      sweepAxis: payload.a ?? base.sweepAxis,
    };
  } catch {
    return null;
  }
}
