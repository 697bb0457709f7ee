import { ApiError, ReviewApi } from "./api.js";
import type { MergeDraft } from "./merge.js";
import type {
  ClusterImagesPage,
  ClusterSummary,
  MetricsPayload,
} from "./types.js";

export interface StoreEvents {
  onChange?: () => void;
  onError?: (message: string) => void;
}

/**
 * All review state the widgets render from. Nothing here is
 * optimistic: marks, labels, and merges change only after the server
 * acknowledged them, and the marked set is replaced wholesale from
 * each acknowledgment so it always mirrors the session on disk.
 */
export class ReviewStore {
  clusters: ClusterSummary[] = [];
  page: ClusterImagesPage | null = null;
  markOrder: string[] = [];
  marked = new Set<string>();
  metrics: MetricsPayload | null = null;
  /** Set to an ISO timestamp while the metrics panel is showing stale
   * numbers because the endpoint stopped answering. */
  metricsStaleSince: string | null = null;
  mergeMap: Record<string, number> = {};
  lastError: string | null = null;

  constructor(
    readonly api: ReviewApi,
    private readonly events: StoreEvents = {},
    private readonly now: () => string = () => new Date().toISOString(),
  ) {}

  private changed(): void {
    this.events.onChange?.();
  }

  private fail(error: unknown): void {
    this.lastError =
      error instanceof ApiError
        ? error.message
        : `request failed: ${String(error)}`;
    this.events.onError?.(this.lastError);
    this.changed();
  }

  private applyMarks(marks: string[]): void {
    this.markOrder = marks;
    this.marked = new Set(marks);
    if (this.page) {
      for (const image of this.page.images) {
        image.marked = this.marked.has(image.image_id);
      }
    }
  }

  async load(): Promise<void> {
    const [clusters, session] = await Promise.all([
      this.api.clusters(),
      this.api.session(),
    ]);
    this.clusters = clusters;
    this.applyMarks(session.marks);
    this.mergeMap = session.merge_map;
    await this.refreshMetrics();
    this.changed();
  }

  async openCluster(clusterId: number, offset = 0, limit = 60): Promise<void> {
    try {
      this.page = await this.api.clusterImages(clusterId, offset, limit);
      this.lastError = null;
      this.changed();
    } catch (error) {
      this.fail(error);
    }
  }

  /**
   * Flip one image's marked state, visible page only. The flip
   * happens when the server answers; on failure the view is left
   * exactly as it was and the error is surfaced for a retry prompt.
   */
  async toggleMark(imageId: string): Promise<boolean> {
    if (!this.page || !this.page.images.some((i) => i.image_id === imageId)) {
      this.lastError = `image ${imageId} is not in the current view`;
      this.events.onError?.(this.lastError);
      return false;
    }
    try {
      const response = this.marked.has(imageId)
        ? await this.api.unmark(imageId)
        : await this.api.mark(imageId);
      this.applyMarks(response.marks);
      this.lastError = null;
      this.changed();
      await this.refreshMetrics();
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }

  /** Empty keywords never reach the network. */
  async setLabel(clusterId: number, keyword: string): Promise<boolean> {
    const trimmed = keyword.trim();
    if (!trimmed) {
      this.lastError = "label keyword must not be empty";
      this.events.onError?.(this.lastError);
      this.changed();
      return false;
    }
    try {
      const response = await this.api.setLabel(clusterId, trimmed);
      const label = response.labels[String(clusterId)] ?? trimmed;
      for (const cluster of this.clusters) {
        if (cluster.cluster_id === clusterId) cluster.label = label;
      }
      if (this.page && this.page.cluster_id === clusterId) {
        this.page.label = label;
      }
      this.lastError = null;
      this.changed();
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }

  /** Submit a complete merge draft atomically; the server's normalized
   * map (contiguous group ids) replaces the local one. */
  async submitMerge(draft: MergeDraft): Promise<boolean> {
    if (!draft.complete) {
      this.lastError = "merge draft must cover every cluster";
      this.events.onError?.(this.lastError);
      this.changed();
      return false;
    }
    try {
      const response = await this.api.submitMerge(draft.toApiMap());
      this.mergeMap = response.merge_map;
      this.lastError = null;
      this.changed();
      await this.refreshMetrics();
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }

  async refreshMetrics(): Promise<void> {
    try {
      this.metrics = await this.api.metrics();
      this.metricsStaleSince = null;
      this.changed();
    } catch {
      // keep showing the old numbers, but flag them as stale
      if (this.metricsStaleSince === null) {
        this.metricsStaleSince = this.now();
      }
      this.changed();
    }
  }
}
