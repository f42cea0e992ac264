import type { ParamsPoint } from "./types.js";

// Parameter-convergence chart as an inline SVG: alpha and beta share the
// left axis (dimensionless), theta gets the right axis in dBm. Values are
// plotted exactly as the backend sent them.

const W = 640;
const H = 240;
const PAD = 36;

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v) => hi - ((v - min) / span) * (hi - lo);
}

function polyline(xs: number[], ys: number[], cls: string): string {
  const pts = xs.map((x, i) => `${x.toFixed(1)},${ys[i].toFixed(1)}`).join(" ");
  return `<polyline class="${cls}" fill="none" points="${pts}"/>`;
}

export function renderConvergenceChart(points: ParamsPoint[]): string {
  if (points.length === 0) {
    return `<p class="empty">no calibration history yet</p>`;
  }
  const ordered = [...points].sort((a, b) => a.ts - b.ts);
  const n = ordered.length;
  const xs = ordered.map((_, i) =>
    n === 1 ? W / 2 : PAD + (i * (W - 2 * PAD)) / (n - 1),
  );

  const dimless = ordered.flatMap((p) => [p.alpha, p.beta]);
  const yLeft = scale(dimless, PAD, H - PAD);
  const yRight = scale(ordered.map((p) => p.theta_dbm), PAD, H - PAD);

  const lines =
    polyline(xs, ordered.map((p) => yLeft(p.alpha)), "alpha") +
    polyline(xs, ordered.map((p) => yLeft(p.beta)), "beta") +
    polyline(xs, ordered.map((p) => yRight(p.theta_dbm)), "theta");

  // Data values ride along as attributes so the page (and tests) can read
  // back exactly what was plotted.
  const markers = ordered
    .map(
      (p, i) =>
        `<circle class="pt" cx="${xs[i].toFixed(1)}" cy="${yLeft(p.alpha).toFixed(1)}" r="2" ` +
        `data-alpha="${String(p.alpha)}" data-beta="${String(p.beta)}" ` +
        `data-theta-dbm="${String(p.theta_dbm)}"/>`,
    )
    .join("");

  const legend =
    `<text x="${PAD}" y="14" class="alpha">alpha</text>` +
    `<text x="${PAD + 60}" y="14" class="beta">beta</text>` +
    `<text x="${PAD + 120}" y="14" class="theta">theta (dBm)</text>`;

  return (
    `<svg viewBox="0 0 ${W} ${H}" role="img" aria-label="parameter convergence">` +
    `${legend}${lines}${markers}</svg>`
  );
}

export function chartPointCount(svg: string): number {
  return (svg.match(/<circle class="pt"/g) ?? []).length;
}
