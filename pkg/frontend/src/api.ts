import type {
  GroundTruthAck,
  LatestResponse,
  ParamsPoint,
  SeriesResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function getJson<T>(fetchFn: FetchLike, url: string): Promise<T> {
  const res = await fetchFn(url);
  if (!res.ok) {
    throw new ApiError(res.status, await res.text());
  }
  return (await res.json()) as T;
}

export class BackendApi {
  constructor(private base: string = "", private fetchFn: FetchLike = fetch) {}

  rooms(): Promise<string[]> {
    return getJson<{ rooms: string[] }>(this.fetchFn, `${this.base}/rooms`).then(
      (r) => r.rooms,
    );
  }

  latest(room: string): Promise<LatestResponse> {
    return getJson(this.fetchFn, `${this.base}/rooms/${room}/latest`);
  }

  paramsSeries(room: string): Promise<ParamsPoint[]> {
    return getJson<SeriesResponse<ParamsPoint>>(
      this.fetchFn,
      `${this.base}/rooms/${room}/series?kind=params`,
    ).then((r) => r.records);
  }

  async postGroundTruth(
    room: string,
    body: { count: number; ttl_s: number },
  ): Promise<GroundTruthAck> {
    const res = await this.fetchFn(`${this.base}/rooms/${room}/groundtruth`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const parsed = await res.json();
        if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as GroundTruthAck;
  }
}
