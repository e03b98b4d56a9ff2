import type { LabelDraft, OverlayName } from "./types.js";

export const MIN_VISIBLE_SAMPLES = 16;

export interface VisibleRange {
  start: number;
  end: number;
}

/** UI state for one labeling session. */
export interface ViewState {
  sampleId: number | null;
  timesteps: number;
  range: VisibleRange;
  overlays: Record<OverlayName, boolean>;
  draft: LabelDraft;
}

export function initialViewState(timesteps: number): ViewState {
  return {
    sampleId: null,
    timesteps,
    range: { start: 0, end: timesteps },
    overlays: { trend: false, residual: false, zero: false, anomaly: false },
    draft: { sample_id: null, fault_class: "", fault_type: "", phase: "", comment: "" },
  };
}

/** Clamp a range into [0, timesteps], preserving width where possible. */
export function clampRange(start: number, end: number, timesteps: number): VisibleRange {
  let width = Math.round(end - start);
  width = Math.max(MIN_VISIBLE_SAMPLES, Math.min(width, timesteps));
  let s = Math.round(start);
  if (s < 0) s = 0;
  if (s + width > timesteps) s = timesteps - width;
  return { start: s, end: s + width };
}

/**
 * Zoom around an anchor given as a fraction of the visible width.
 * factor < 1 zooms in, > 1 zooms out.
 */
export function zoomRange(range: VisibleRange, factor: number, anchorFrac: number,
                          timesteps: number): VisibleRange {
  const width = range.end - range.start;
  const newWidth = width * factor;
  const anchor = range.start + anchorFrac * width;
  const start = anchor - anchorFrac * newWidth;
  return clampRange(start, start + newWidth, timesteps);
}

/** Pan by a fraction of the visible width; clamps at the record bounds. */
export function panRange(range: VisibleRange, deltaFrac: number, timesteps: number): VisibleRange {
  const width = range.end - range.start;
  const shift = deltaFrac * width;
  return clampRange(range.start + shift, range.end + shift, timesteps);
}

export function fullRange(timesteps: number): VisibleRange {
  return { start: 0, end: timesteps };
}

export function toggleOverlay(state: ViewState, name: OverlayName): ViewState {
  return { ...state, overlays: { ...state.overlays, [name]: !state.overlays[name] } };
}

export function activeOverlays(state: ViewState): OverlayName[] {
  return (Object.keys(state.overlays) as OverlayName[]).filter((k) => state.overlays[k]);
}

export function selectSample(state: ViewState, sampleId: number): ViewState {
  return {
    ...state,
    sampleId,
    range: fullRange(state.timesteps),
    draft: { ...state.draft, sample_id: sampleId },
  };
}

/** labeled/total progress per cluster from worksheet items. */
export function worksheetProgress(
  items: Array<{ cluster: number; labeled: boolean }>,
): Map<number, { labeled: number; total: number }> {
  const out = new Map<number, { labeled: number; total: number }>();
  for (const item of items) {
    const entry = out.get(item.cluster) ?? { labeled: 0, total: 0 };
    entry.total += 1;
    if (item.labeled) entry.labeled += 1;
    out.set(item.cluster, entry);
  }
  return out;
}

/** The next unlabeled worksheet item after the current sample, if any. */
export function nextPending(
  items: Array<{ cluster: number; sample_id: number; labeled: boolean }>,
  currentSampleId: number | null,
): { cluster: number; sample_id: number } | null {
  const pending = items.filter((it) => !it.labeled);
  if (pending.length === 0) return null;
  if (currentSampleId !== null) {
    const idx = items.findIndex((it) => it.sample_id === currentSampleId);
    const after = items.slice(idx + 1).find((it) => !it.labeled);
    if (after) return after;
  }
  return pending[0];
}
