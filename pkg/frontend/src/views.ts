import type { RoomState } from "./state.js";
import { isStale } from "./state.js";

// Render helpers return plain HTML strings; the entry script swaps them
// into the page. Numbers pass through String() untouched — the backend
// already sends rounded estimates, and theta stays in dBm.

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderRoomCard(rs: RoomState, nowS: number): string {
  const est = rs.latest?.estimate;
  const env = rs.latest?.environment;
  const stale = isStale(rs, nowS);

  let body: string;
  if (!est) {
    body = `<p class="no-data">no data</p>`;
  } else {
    const when = new Date(est.window_start * 1000).toISOString();
    body =
      `<p class="estimate">${String(est.estimate)}</p>` +
      `<p class="window">window ${esc(when)}</p>`;
  }

  let envRow = "";
  if (env) {
    envRow =
      `<p class="env">${String(env.temperature_c)} °C · ` +
      `${String(env.humidity_pct)} % RH · ` +
      `${String(env.pressure_hpa)} hPa · ` +
      `${String(env.light_lux)} lx</p>`;
  }

  const staleBadge = stale ? `<span class="stale">stale</span>` : "";
  return (
    `<div class="card${stale ? " is-stale" : ""}" data-room="${esc(rs.room)}">` +
    `<h2>${esc(rs.room)}${staleBadge}</h2>${body}${envRow}</div>`
  );
}

export function renderRoomGrid(
  rooms: RoomState[],
  nowS: number,
  backendDown: boolean,
): string {
  const banner = backendDown
    ? `<div class="banner error">backend unreachable — showing last known data</div>`
    : "";
  const cards = rooms.map((r) => renderRoomCard(r, nowS)).join("");
  return `${banner}<div class="grid">${cards}</div>`;
}
