import type {
  ClusterImagesPage,
  ClusterSummary,
  LabelsResponse,
  MarksResponse,
  MergeResponse,
  MetricsPayload,
  SessionPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body, fall through
  }
  return `${response.status} ${response.statusText}`;
}

/** Thin typed client over the /api contract. */
export class ReviewApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly base = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  private async requestText(path: string): Promise<string> {
    const response = await this.fetchImpl(this.base + path);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return response.text();
  }

  clusters(): Promise<ClusterSummary[]> {
    return this.request("/api/clusters");
  }

  clusterImages(clusterId: number, offset = 0, limit = 60): Promise<ClusterImagesPage> {
    return this.request(
      `/api/clusters/${clusterId}/images?offset=${offset}&limit=${limit}`,
    );
  }

  mark(imageId: string): Promise<MarksResponse> {
    return this.request("/api/marks", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ image_id: imageId }),
    });
  }

  unmark(imageId: string): Promise<MarksResponse> {
    return this.request(`/api/marks/${encodeURIComponent(imageId)}`, {
      method: "DELETE",
    });
  }

  setLabel(clusterId: number, keyword: string): Promise<LabelsResponse> {
    return this.request("/api/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ cluster_id: clusterId, keyword }),
    });
  }

  submitMerge(mergeMap: Record<string, number>): Promise<MergeResponse> {
    return this.request("/api/merge", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ merge_map: mergeMap }),
    });
  }

  metrics(): Promise<MetricsPayload> {
    return this.request("/api/metrics");
  }

  session(): Promise<SessionPayload> {
    return this.request("/api/session");
  }

  scatter(): Promise<string> {
    return this.requestText("/api/scatter");
  }

  imageUrl(imageId: string): string {
    return `${this.base}/api/images/${encodeURIComponent(imageId)}`;
  }

  /** "Download marks" is a plain anchor to this. */
  exportUrl(): string {
    return `${this.base}/api/export`;
  }
}
