import type {
  ClustersResponse,
  LabelDraft,
  LabelEntry,
  MetricReport,
  OverlayName,
  Vocabulary,
  WindowPayload,
  WorksheetResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export interface WindowQuery {
  start?: number;
  end?: number;
  maxPoints?: number;
  overlays?: OverlayName[];
}

/** Typed client for the labeling API; the base URL is the only configuration. */
export class LabelApi {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  clusters(): Promise<ClustersResponse> {
    return request(`${this.baseUrl}/clusters`);
  }

  worksheet(): Promise<WorksheetResponse> {
    return request(`${this.baseUrl}/worksheet`);
  }

  window(sampleId: number, query: WindowQuery = {}): Promise<WindowPayload> {
    const params = new URLSearchParams();
    if (query.start !== undefined) params.set("start", String(query.start));
    if (query.end !== undefined) params.set("end", String(query.end));
    if (query.maxPoints !== undefined) params.set("max_points", String(query.maxPoints));
    if (query.overlays && query.overlays.length > 0) params.set("overlays", query.overlays.join(","));
    const qs = params.toString();
    return request(`${this.baseUrl}/samples/${sampleId}/window${qs ? `?${qs}` : ""}`);
  }

  labels(): Promise<{ labels: LabelEntry[] }> {
    return request(`${this.baseUrl}/labels`);
  }

  postLabel(draft: LabelDraft): Promise<LabelEntry> {
    return request(`${this.baseUrl}/labels`, {
      method: "POST",
      body: JSON.stringify(draft),
    });
  }

  recompute(): Promise<MetricReport> {
    return request(`${this.baseUrl}/metrics/recompute`, { method: "POST" });
  }

  vocabulary(): Promise<Vocabulary> {
    return request(`${this.baseUrl}/vocabulary`);
  }
}

/** API base URL from ?api=... or the conventional local default. */
export function apiBaseFromLocation(search: string): string {
  const params = new URLSearchParams(search);
  return params.get("api") ?? "http://127.0.0.1:8765";
}
