import { ApiError, BackendApi } from "./api.js";
import { renderConvergenceChart } from "./chart.js";
import { DEFAULT_TTL_S, checkGroundTruthForm, expiryText } from "./form.js";
import { POLL_INTERVAL_MS, Poller } from "./poll.js";
import { newState } from "./state.js";
import { renderRoomGrid } from "./views.js";

const api = new BackendApi();
const state = newState();

const grid = document.getElementById("rooms")!;
const chart = document.getElementById("chart")!;
const roomSelect = document.getElementById("gt-room") as HTMLSelectElement;
const countInput = document.getElementById("gt-count") as HTMLInputElement;
const ttlInput = document.getElementById("gt-ttl") as HTMLInputElement;
const submitBtn = document.getElementById("gt-submit") as HTMLButtonElement;
const formMsg = document.getElementById("gt-msg")!;

ttlInput.value = String(DEFAULT_TTL_S);

const poller = new Poller(api, state, () => roomSelect.value || null);

function redraw(): void {
  const nowS = Date.now() / 1000;
  grid.innerHTML = renderRoomGrid([...state.rooms.values()], nowS, state.backendDown);

  const existing = new Set([...roomSelect.options].map((o) => o.value));
  for (const room of state.rooms.keys()) {
    if (!existing.has(room)) {
      roomSelect.add(new Option(room, room));
    }
  }

  const rs = roomSelect.value ? state.rooms.get(roomSelect.value) : undefined;
  chart.innerHTML = renderConvergenceChart(rs ? rs.params : []);
}

function revalidate(): void {
  submitBtn.disabled = !checkGroundTruthForm(countInput.value, ttlInput.value).valid;
}
countInput.addEventListener("input", revalidate);
ttlInput.addEventListener("input", revalidate);
revalidate();

submitBtn.addEventListener("click", async (ev) => {
  ev.preventDefault();
  const check = checkGroundTruthForm(countInput.value, ttlInput.value);
  if (!check.valid || !check.body) return;
  try {
    const ack = await api.postGroundTruth(roomSelect.value, check.body);
    formMsg.textContent = expiryText(ack.issued_at, ack.ttl_s);
    formMsg.className = "ok";
  } catch (err) {
    formMsg.textContent = err instanceof ApiError ? err.message : "submit failed";
    formMsg.className = "error";
  }
});

roomSelect.addEventListener("change", () => {
  poller.refresh().then(redraw);
});

async function tick(): Promise<void> {
  await poller.refresh();
  redraw();
}

tick();
setInterval(tick, POLL_INTERVAL_MS);
