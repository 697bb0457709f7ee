import type { MetricsPayload } from "./types.js";

// Rendering helpers for the precision panel. The numbers come from
// /api/metrics untouched; this file only orders and formats them.

export interface PrecisionRow {
  clusterId: number;
  total: number;
  missed: number;
  precision: number;
}

export function precisionRows(payload: MetricsPayload): PrecisionRow[] {
  return Object.entries(payload.per_cluster)
    .map(([id, m]) => ({
      clusterId: Number(id),
      total: m.total,
      missed: m.missed,
      precision: m.precision,
    }))
    .sort((a, b) => a.clusterId - b.clusterId);
}

/** 0.89 -> "89.0%" */
export function formatPercent(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}
