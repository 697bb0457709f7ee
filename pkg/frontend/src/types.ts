// Payload shapes of the review API. These mirror the server exactly;
// the UI renders them and never derives its own numbers.

export interface ClusterSummary {
  cluster_id: number;
  size: number;
  label: string | null;
}

export interface ClusterImage {
  image_id: string;
  marked: boolean;
}

export interface ClusterImagesPage {
  cluster_id: number;
  total: number;
  offset: number;
  limit: number;
  label: string | null;
  images: ClusterImage[];
}

export interface ClusterMetrics {
  total: number;
  missed: number;
  precision: number;
}

export interface MetricsPayload {
  macro_precision: number;
  micro_precision: number;
  per_cluster: Record<string, ClusterMetrics>;
}

export interface SessionPayload {
  session_id: string;
  assignments_ref: string;
  marks: string[];
  labels: Record<string, string>;
  merge_map: Record<string, number>;
  created_at: string;
  updated_at: string;
}

export interface MarksResponse {
  marks: string[];
}

export interface LabelsResponse {
  labels: Record<string, string>;
}

export interface MergeResponse {
  merge_map: Record<string, number>;
}
