import type { BackendApi } from "./api.js";
import type { DashboardState } from "./state.js";
import { applyLatest, applyParams, ensureRoom, markBackendDown } from "./state.js";

export const POLL_INTERVAL_MS = 5000;

/**
 * One refresh pass: room list, each room's /latest, and the params series for
 * the room whose chart is showing. Concurrent calls coalesce — if a pass
 * is already in flight the new call awaits it instead of stacking requests.
 */
export class Poller {
  private inFlight: Promise<void> | null = null;

  constructor(
    private api: BackendApi,
    private state: DashboardState,
    private chartRoom: () => string | null,
  ) {}

  refresh(): Promise<void> {
    if (this.inFlight) return this.inFlight;
    this.inFlight = this.runOnce().finally(() => {
      this.inFlight = null;
    });
    return this.inFlight;
  }

  private async runOnce(): Promise<void> {
    let rooms: string[];
    try {
      rooms = await this.api.rooms();
    } catch {
      markBackendDown(this.state);
      return;
    }
    for (const room of rooms) {
      ensureRoom(this.state, room);
      try {
        applyLatest(this.state, await this.api.latest(room));
      } catch {
        markBackendDown(this.state);
        return;
      }
    }
    const chartTarget = this.chartRoom();
    if (chartTarget !== null) {
      try {
        applyParams(this.state, chartTarget, await this.api.paramsSeries(chartTarget));
      } catch {
        markBackendDown(this.state);
        return;
      }
    }
    this.state.backendDown = false;
  }
}
