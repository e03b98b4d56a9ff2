/** Payload shapes of the labeling API. */

export type OverlayName = "trend" | "residual" | "zero" | "anomaly";

export interface Envelope {
  min: number[];
  max: number[];
}

export interface RawSeries {
  values: number[];
}

export type Series = Envelope | RawSeries;

export function isEnvelope(s: Series): s is Envelope {
  return (s as Envelope).min !== undefined;
}

export interface WindowPayload {
  sample_id: number;
  start: number;
  end: number;
  decimated: boolean;
  sampling_rate_hz: number;
  bucket_starts?: number[];
  bucket_ends?: number[];
  indices?: number[];
  channels: Record<string, Series>;
  zero_sequence: { voltage: Series; current: Series };
  overlays?: {
    trend?: Record<string, Series>;
    residual?: Record<string, Series>;
    zero?: Record<string, boolean[]>;
    anomaly?: Record<string, boolean[]>;
  };
}

export interface ClusterRow {
  cluster: number;
  count: number;
  percent: number;
  sampled_ids: number[];
  labeled: number;
}

export interface ClustersResponse {
  k: number;
  clusters: ClusterRow[];
}

export interface WorksheetItem {
  cluster: number;
  sample_id: number;
  labeled: boolean;
}

export interface WorksheetResponse {
  items: WorksheetItem[];
  pending: number;
}

export interface LabelEntry {
  sample_id: number;
  fault_class: string;
  fault_type: string;
  phase: string;
  comment: string;
  revision: number;
  timestamp: string;
}

export interface LabelDraft {
  sample_id: number | null;
  fault_class: string;
  fault_type: string;
  phase: string;
  comment: string;
}

export interface MetricStats {
  mean: number;
  std: number;
}

export interface MetricReport {
  schema_version: number;
  level: string;
  n_labeled: number;
  silhouette_space: string | null;
  per_cluster: Array<{
    cluster: number;
    count: number;
    purity: number;
    entropy: number;
    silhouette?: number | null;
  }>;
  raw: Record<string, MetricStats>;
  weighted: Record<string, MetricStats>;
  global: Record<string, number | null>;
}

/** fault class -> fault type -> phase policy ("single" | "multi" | "na") */
export type Vocabulary = Record<string, Record<string, string>>;
