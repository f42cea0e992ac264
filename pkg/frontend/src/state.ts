import type { LatestResponse, ParamsPoint } from "./types.js";

// Client-side cache of what the backend last told us, plus the derived
// display flags (staleness, connectivity). No occupancy math happens here.

export interface RoomState {
  room: string;
  latest: LatestResponse | null;
  params: ParamsPoint[];
}

export interface DashboardState {
  rooms: Map<string, RoomState>;
  backendDown: boolean;
}

export function newState(): DashboardState {
  return { rooms: new Map(), backendDown: false };
}

export function ensureRoom(state: DashboardState, room: string): RoomState {
  let rs = state.rooms.get(room);
  if (!rs) {
    rs = { room, latest: null, params: [] };
    state.rooms.set(room, rs);
  }
  return rs;
}

/**
 * Merge a /latest response. Polls can race: a response carrying an older
 * window_start than what we already display is dropped, never applied.
 * Returns true if the state changed.
 */
export function applyLatest(state: DashboardState, res: LatestResponse): boolean {
  const rs = ensureRoom(state, res.room);
  const prev = rs.latest?.estimate;
  const next = res.estimate;
  if (prev && next && next.window_start < prev.window_start) {
    return false;
  }
  if (prev && !next) {
    return false; // a room never un-reports; treat as a stale empty response
  }
  rs.latest = res;
  state.backendDown = false;
  return true;
}

export function applyParams(state: DashboardState, room: string, points: ParamsPoint[]): void {
  const rs = ensureRoom(state, room);
  if (points.length >= rs.params.length) {
    rs.params = points;
  }
}

export function markBackendDown(state: DashboardState): void {
  state.backendDown = true;
}

/** A room is stale when its newest report is more than two windows old. */
export function isStale(rs: RoomState, nowS: number): boolean {
  const est = rs.latest?.estimate;
  if (!est) return false;
  const windowEnd = est.window_start + est.window_duration_s;
  return nowS - windowEnd > 2 * est.window_duration_s;
}
