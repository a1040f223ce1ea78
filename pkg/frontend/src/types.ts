/** Wire types mirroring the rate service's JSON documents. */

export interface ChannelConfig {
  attenuation_db_per_km: number | null;
  length_km: number;
  fixed_loss_db: number | null;
}

export interface DetectorConfig {
  efficiency: number;
  dark_prob: number;
  misalignment: number;
}

export interface HardwareConfig {
  channel: ChannelConfig;
  detector: DetectorConfig;
  qber_override: number | null;
}

export interface ProtocolConfig {
  kind:
    | "bb84"
    | "bb84_decoy_active"
    | "bb84_decoy_passive"
    | "sarg04"
    | "entangled_pdc";
  sifting_q: number;
  ec_efficiency: number;
  decoy_means: number[];
}

export interface SourceConfig {
  kind: "poisson" | "thermal" | "single_photon" | "heralded_pdc";
  mean_photons: number;
  rep_rate: number;
  trigger_efficiency: number;
}

export interface ScenarioConfig {
  hardware: HardwareConfig;
  protocol: ProtocolConfig;
  source: SourceConfig;
}

export type SweepVariable =
  | "length"
  | "e_det"
  | "eta_det"
  | "p_dark"
  | "alpha"
  | "mean_photons";

export interface SweepRequest {
  variable: SweepVariable;
  grid: number[];
}

/** Body of POST /api/rate-curve. */
export interface RateRequest extends ScenarioConfig {
  sweep?: SweepRequest;
}

/** Response of POST /api/rate-curve: rows follow `columns` order. */
export interface CurveDocument {
  columns: string[];
  rows: number[][];
  meta: ScenarioConfig & { sweep: SweepRequest | null };
}

export interface PresetInfo {
  name: string;
  provenance: string;
  config: ScenarioConfig;
}

export interface PresetsDocument {
  presets: PresetInfo[];
}

/** Column indices of CurveDocument rows. */
export const COL = {
  length: 0,
  secretRate: 1,
  bitsPerSecond: 2,
  gain: 3,
  qber: 4,
  omega: 5,
  e1: 6,
} as const;
