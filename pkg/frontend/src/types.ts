// Wire shapes as the backend HTTP API emits them. The dashboard never
// derives numbers from these beyond formatting for display.

export interface EstimatePayload {
  room: string;
  window_start: number;
  window_duration_s: number;
  estimate_raw: number;
  estimate: number;
  alpha: number;
  beta: number;
  theta_dbm: number;
  n_valid: number[];
  n_random: number[];
}

export interface EnvironmentPayload {
  room: string;
  temperature_c: number;
  humidity_pct: number;
  pressure_hpa: number;
  light_lux: number;
}

export interface LatestResponse {
  room: string;
  estimate: EstimatePayload | null;
  environment: EnvironmentPayload | null;
}

export interface ParamsPoint {
  ts: number;
  alpha: number;
  beta: number;
  theta_dbm: number;
  trained_at: number;
}

export interface SeriesResponse<T> {
  room: string;
  kind: string;
  records: T[];
}

export interface GroundTruthAck {
  room: string;
  count: number;
  issued_at: number;
  ttl_s: number;
}
