import { isEnvelope, type Series, type WindowPayload } from "./types.js";

export interface PlotGeometry {
  width: number;
  height: number;
  yMin: number;
  yMax: number;
}

export function yForValue(v: number, geom: PlotGeometry): number {
  if (geom.yMax === geom.yMin) return geom.height / 2;
  return ((geom.yMax - v) / (geom.yMax - geom.yMin)) * geom.height;
}

export function xForIndex(i: number, count: number, width: number): number {
  if (count <= 1) return width / 2;
  return (i / (count - 1)) * width;
}

export interface EnvelopeSpan {
  x: number;
  yTop: number;
  yBottom: number;
}

/**
 * Bucket envelopes as vertical spans; at low zoom each bucket becomes one
 * span from its min to its max so no transient is visually lost.
 */
export function envelopeSpans(mins: number[], maxs: number[], geom: PlotGeometry): EnvelopeSpan[] {
  const spans: EnvelopeSpan[] = [];
  for (let i = 0; i < mins.length; i++) {
    spans.push({
      x: xForIndex(i, mins.length, geom.width),
      yTop: yForValue(maxs[i], geom),
      yBottom: yForValue(mins[i], geom),
    });
  }
  return spans;
}

export interface LinePoint {
  x: number;
  y: number;
}

export function linePoints(values: number[], geom: PlotGeometry): LinePoint[] {
  return values.map((v, i) => ({ x: xForIndex(i, values.length, geom.width), y: yForValue(v, geom) }));
}

export function seriesExtent(series: Series[]): { min: number; max: number } {
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    if (isEnvelope(s)) {
      for (const v of s.min) lo = Math.min(lo, v);
      for (const v of s.max) hi = Math.max(hi, v);
    } else {
      for (const v of s.values) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (!isFinite(lo)) return { min: -1, max: 1 };
  if (lo === hi) return { min: lo - 1, max: hi + 1 };
  const pad = 0.05 * (hi - lo);
  return { min: lo - pad, max: hi + pad };
}

export const CHANNEL_COLORS: Record<string, string> = {
  V1: "#d62728",
  V2: "#2ca02c",
  V3: "#1f77b4",
  I1: "#d62728",
  I2: "#2ca02c",
  I3: "#1f77b4",
};

function drawSeries(ctx: CanvasRenderingContext2D, series: Series, geom: PlotGeometry,
                    color: string): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  if (isEnvelope(series)) {
    ctx.beginPath();
    for (const span of envelopeSpans(series.min, series.max, geom)) {
      ctx.moveTo(span.x, span.yTop);
      // a span shorter than a pixel still needs to leave a mark
      ctx.lineTo(span.x, Math.max(span.yBottom, span.yTop + 1));
    }
    ctx.stroke();
  } else {
    const pts = linePoints(series.values, geom);
    ctx.beginPath();
    pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
    ctx.stroke();
  }
}

function drawBooleanBand(ctx: CanvasRenderingContext2D, flags: boolean[], geom: PlotGeometry,
                         color: string): void {
  ctx.fillStyle = color;
  const cell = geom.width / flags.length;
  for (let i = 0; i < flags.length; i++) {
    if (flags[i]) ctx.fillRect(i * cell, 0, Math.max(cell, 1), geom.height);
  }
}

export interface PanelSpec {
  canvas: HTMLCanvasElement;
  channelNames: string[];
  title: string;
}

/** Render one waveform panel (a group of channels) from an API payload. */
export function renderPanel(spec: PanelSpec, payload: WindowPayload,
                            overlayAlpha = 0.15): void {
  const ctx = spec.canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = spec.canvas;
  ctx.clearRect(0, 0, width, height);

  const series = spec.channelNames
    .map((name) => payload.channels[name] ?? payload.zero_sequence[name as "voltage" | "current"])
    .filter((s): s is Series => s !== undefined);
  const extent = seriesExtent(series);
  const geom: PlotGeometry = { width, height, yMin: extent.min, yMax: extent.max };

  // anomaly/zero bands behind the traces
  const masks = payload.overlays;
  if (masks) {
    for (const name of spec.channelNames) {
      const anomaly = masks.anomaly?.[name];
      if (anomaly) {
        ctx.globalAlpha = overlayAlpha;
        drawBooleanBand(ctx, anomaly, geom, "#ff7f0e");
        ctx.globalAlpha = 1;
      }
      const zero = masks.zero?.[name];
      if (zero) {
        ctx.globalAlpha = overlayAlpha;
        drawBooleanBand(ctx, zero, geom, "#7f7f7f");
        ctx.globalAlpha = 1;
      }
    }
  }

  // zero line
  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  const y0 = yForValue(0, geom);
  ctx.moveTo(0, y0);
  ctx.lineTo(width, y0);
  ctx.stroke();

  for (const name of spec.channelNames) {
    const s = payload.channels[name] ?? payload.zero_sequence[name as "voltage" | "current"];
    if (!s) continue;
    drawSeries(ctx, s, geom, CHANNEL_COLORS[name] ?? "#444");
    const trend = masks?.trend?.[name];
    if (trend) {
      ctx.globalAlpha = 0.9;
      drawSeries(ctx, trend, geom, "#9467bd");
      ctx.globalAlpha = 1;
    }
    const residual = masks?.residual?.[name];
    if (residual) {
      ctx.globalAlpha = 0.5;
      drawSeries(ctx, residual, geom, "#8c564b");
      ctx.globalAlpha = 1;
    }
  }

  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(`${spec.title}  [${payload.start}, ${payload.end})`, 6, 12);
}
