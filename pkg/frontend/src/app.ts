import { ApiError, LabelApi } from "./api.js";
import { renderPanel } from "./render.js";
import type {
  ClustersResponse,
  MetricReport,
  OverlayName,
  Vocabulary,
  WindowPayload,
  WorksheetItem,
} from "./types.js";
import {
  activeOverlays,
  clampRange,
  fullRange,
  initialViewState,
  nextPending,
  panRange,
  selectSample,
  worksheetProgress,
  zoomRange,
  type ViewState,
} from "./viewstate.js";
import {
  DEFAULT_VOCABULARY,
  faultClasses,
  faultTypesFor,
  phaseMode,
  phaseOptionsFor,
  phaseSelectionEnabled,
  validateDraft,
} from "./vocabulary.js";

const MAX_POINTS = 800;
const OVERLAY_NAMES: OverlayName[] = ["trend", "residual", "zero", "anomaly"];
const CLASS_SHORTCUTS = ["1", "2", "3", "4", "5"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

export class App {
  state: ViewState = initialViewState(0);
  vocabulary: Vocabulary = DEFAULT_VOCABULARY;
  worksheet: WorksheetItem[] = [];
  clusters: ClustersResponse | null = null;
  lastPayload: WindowPayload | null = null;

  private clusterList!: HTMLElement;
  private statusLine!: HTMLElement;
  private metricsPanel!: HTMLElement;
  private voltageCanvas!: HTMLCanvasElement;
  private currentCanvas!: HTMLCanvasElement;
  private zeroSeqCanvas!: HTMLCanvasElement;
  private classSelect!: HTMLSelectElement;
  private typeSelect!: HTMLSelectElement;
  private phaseSelect!: HTMLSelectElement;
  private commentInput!: HTMLTextAreaElement;
  private submitButton!: HTMLButtonElement;
  private draftError!: HTMLElement;
  private overlayBoxes = new Map<OverlayName, HTMLInputElement>();
  private dragAnchor: number | null = null;

  constructor(private root: HTMLElement, private api: LabelApi) {}

  async init(): Promise<void> {
    this.buildLayout();
    try {
      this.vocabulary = await this.api.vocabulary();
    } catch {
      /* fall back to the built-in copy */
    }
    this.populateClassOptions();
    await this.refreshClusters();
    await this.refreshMetrics(false);
    const first = nextPending(this.worksheet, null);
    if (first) await this.openSample(first.sample_id);
    document.addEventListener("keydown", (ev) => this.onKey(ev));
  }

  private buildLayout(): void {
    this.root.innerHTML = "";
    this.statusLine = el("div", { class: "status" }, "loading…");
    this.clusterList = el("div", { class: "cluster-list" });
    this.metricsPanel = el("div", { class: "metrics" }, "no metrics yet");

    this.voltageCanvas = el("canvas", { width: "900", height: "170" });
    this.currentCanvas = el("canvas", { width: "900", height: "170" });
    this.zeroSeqCanvas = el("canvas", { width: "900", height: "120" });
    for (const canvas of [this.voltageCanvas, this.currentCanvas, this.zeroSeqCanvas]) {
      canvas.addEventListener("wheel", (ev) => this.onWheel(ev), { passive: false });
      canvas.addEventListener("mousedown", (ev) => (this.dragAnchor = ev.clientX));
      canvas.addEventListener("mousemove", (ev) => this.onDrag(ev));
      window.addEventListener("mouseup", () => (this.dragAnchor = null));
      canvas.addEventListener("dblclick", () => this.setRange(fullRange(this.state.timesteps)));
    }

    const overlayBar = el("div", { class: "overlay-bar" }, "overlays: ");
    for (const name of OVERLAY_NAMES) {
      const box = el("input", { type: "checkbox", id: `ov-${name}` });
      box.addEventListener("change", () => {
        this.state.overlays[name] = box.checked;
        void this.refreshWindow();
      });
      this.overlayBoxes.set(name, box);
      overlayBar.append(box, el("label", { for: `ov-${name}` }, name), " ");
    }
    const fullButton = el("button", {}, "full view (f)");
    fullButton.addEventListener("click", () => this.setRange(fullRange(this.state.timesteps)));
    const faultButton = el("button", {}, "fault window");
    faultButton.addEventListener("click", () => void this.zoomToFaultWindow());
    overlayBar.append(" ", fullButton, " ", faultButton);

    this.classSelect = el("select", { id: "fault-class" });
    this.typeSelect = el("select", { id: "fault-type" });
    this.phaseSelect = el("select", { id: "phase" });
    this.commentInput = el("textarea", { rows: "2", placeholder: "comment" });
    this.submitButton = el("button", { class: "submit" }, "submit label (enter)");
    this.draftError = el("div", { class: "draft-error" });

    this.classSelect.addEventListener("change", () => this.onClassChange());
    this.typeSelect.addEventListener("change", () => this.onTypeChange());
    this.phaseSelect.addEventListener("change", () => {
      this.state.draft.phase = this.phaseSelect.value;
      this.updateSubmitState();
    });
    this.commentInput.addEventListener("input", () => {
      this.state.draft.comment = this.commentInput.value;
    });
    this.submitButton.addEventListener("click", () => void this.submitLabel());

    const form = el(
      "div",
      { class: "label-form" },
      el("h3", {}, "label"),
      el("div", {}, el("label", {}, "class "), this.classSelect),
      el("div", {}, el("label", {}, "type "), this.typeSelect),
      el("div", {}, el("label", {}, "phase "), this.phaseSelect),
      this.commentInput,
      this.submitButton,
      this.draftError,
    );

    this.root.append(
      el("div", { class: "sidebar" }, el("h3", {}, "clusters"), this.clusterList),
      el(
        "div",
        { class: "main" },
        this.statusLine,
        el("div", { class: "panel-title" }, "voltage V1–V3"),
        this.voltageCanvas,
        el("div", { class: "panel-title" }, "current I1–I3"),
        this.currentCanvas,
        el("div", { class: "panel-title" }, "zero sequence (V, I)"),
        this.zeroSeqCanvas,
        overlayBar,
      ),
      el("div", { class: "rightbar" }, form, el("h3", {}, "metrics"), this.metricsPanel),
    );
  }

  private populateClassOptions(): void {
    this.classSelect.innerHTML = "";
    this.classSelect.append(el("option", { value: "" }, "— pick class —"));
    faultClasses(this.vocabulary).forEach((cls, i) => {
      const hint = i < CLASS_SHORTCUTS.length ? ` (${CLASS_SHORTCUTS[i]})` : "";
      this.classSelect.append(el("option", { value: cls }, cls + hint));
    });
    this.onClassChange();
  }

  private onClassChange(): void {
    this.state.draft.fault_class = this.classSelect.value;
    this.typeSelect.innerHTML = "";
    const types = faultTypesFor(this.vocabulary, this.classSelect.value);
    for (const t of types) this.typeSelect.append(el("option", { value: t }, t));
    this.typeSelect.disabled = types.length === 0;
    this.onTypeChange();
  }

  private onTypeChange(): void {
    this.state.draft.fault_type = this.typeSelect.value;
    this.phaseSelect.innerHTML = "";
    const mode = phaseMode(this.vocabulary, this.classSelect.value, this.typeSelect.value);
    if (mode === null) {
      this.phaseSelect.disabled = true;
      this.state.draft.phase = "";
    } else {
      for (const p of phaseOptionsFor(mode)) this.phaseSelect.append(el("option", { value: p }, p));
      this.phaseSelect.disabled = !phaseSelectionEnabled(mode);
      this.state.draft.phase = this.phaseSelect.value;
    }
    this.updateSubmitState();
  }

  private updateSubmitState(): void {
    const problem = validateDraft(this.vocabulary, this.state.draft);
    this.submitButton.disabled = problem !== null;
    this.draftError.textContent = problem ?? "";
  }

  async refreshClusters(): Promise<void> {
    try {
      const [clusters, worksheet] = await Promise.all([this.api.clusters(), this.api.worksheet()]);
      this.clusters = clusters;
      this.worksheet = worksheet.items;
    } catch (err) {
      this.statusLine.textContent = `cannot load clusters: ${(err as Error).message}`;
      return;
    }
    const progress = worksheetProgress(this.worksheet);
    this.clusterList.innerHTML = "";
    for (const row of this.clusters.clusters) {
      const p = progress.get(row.cluster) ?? { labeled: 0, total: 0 };
      const header = el(
        "div",
        { class: "cluster-row" },
        el("b", {}, `cluster ${row.cluster}`),
        ` ${row.count} samples (${row.percent.toFixed(1)}%) — ${p.labeled}/${p.total}`,
      );
      const ids = el("div", { class: "sample-ids" });
      for (const sid of row.sampled_ids) {
        const labeled = this.worksheet.find((it) => it.sample_id === sid)?.labeled ?? false;
        const link = el("a", { href: "#", class: labeled ? "labeled" : "pending" }, `#${sid}`);
        link.addEventListener("click", (ev) => {
          ev.preventDefault();
          void this.openSample(sid);
        });
        ids.append(link, " ");
      }
      this.clusterList.append(header, ids);
    }
  }

  async openSample(sampleId: number): Promise<void> {
    this.state = selectSample(this.state, sampleId);
    this.state.draft.sample_id = sampleId;
    await this.refreshWindow(true);
    this.updateSubmitState();
  }

  private setRange(range: { start: number; end: number }): void {
    this.state.range = clampRange(range.start, range.end, this.state.timesteps);
    void this.refreshWindow();
  }

  async refreshWindow(isNewSample = false): Promise<void> {
    if (this.state.sampleId === null) return;
    let payload: WindowPayload;
    try {
      payload = await this.api.window(this.state.sampleId, {
        start: isNewSample ? undefined : this.state.range.start,
        end: isNewSample ? undefined : this.state.range.end,
        maxPoints: MAX_POINTS,
        overlays: activeOverlays(this.state),
      });
    } catch (err) {
      this.statusLine.textContent = `window fetch failed: ${(err as Error).message}`;
      return;
    }
    this.lastPayload = payload;
    if (isNewSample) {
      this.state.timesteps = payload.end;
      this.state.range = { start: payload.start, end: payload.end };
    }
    const cluster = this.worksheet.find((it) => it.sample_id === payload.sample_id)?.cluster;
    this.statusLine.textContent =
      `sample #${payload.sample_id}` +
      (cluster !== undefined ? ` (cluster ${cluster})` : "") +
      ` — showing [${payload.start}, ${payload.end}) ` +
      (payload.decimated ? "as min/max envelopes" : "raw");

    renderPanel(
      { canvas: this.voltageCanvas, channelNames: ["V1", "V2", "V3"], title: "V" },
      payload,
    );
    renderPanel(
      { canvas: this.currentCanvas, channelNames: ["I1", "I2", "I3"], title: "I" },
      payload,
    );
    renderPanel(
      { canvas: this.zeroSeqCanvas, channelNames: ["voltage", "current"], title: "zero-seq" },
      payload,
    );
  }

  /** Zoom to the span flagged by the anomaly overlay (two-scale toggle). */
  async zoomToFaultWindow(): Promise<void> {
    if (this.state.sampleId === null) return;
    let payload: WindowPayload;
    try {
      payload = await this.api.window(this.state.sampleId, {
        maxPoints: MAX_POINTS,
        overlays: ["anomaly"],
      });
    } catch {
      return;
    }
    const masks = payload.overlays?.anomaly;
    const starts = payload.bucket_starts ?? payload.indices ?? [];
    const ends = payload.bucket_ends ?? payload.indices?.map((i) => i + 1) ?? [];
    if (!masks || starts.length === 0) return;
    let lo = Infinity;
    let hi = -Infinity;
    for (const flags of Object.values(masks)) {
      flags.forEach((flag, i) => {
        if (flag) {
          lo = Math.min(lo, starts[i]);
          hi = Math.max(hi, ends[i]);
        }
      });
    }
    if (!isFinite(lo)) return;
    const margin = Math.round((hi - lo) * 0.25) + 8;
    this.setRange({ start: lo - margin, end: hi + margin });
  }

  private onWheel(ev: WheelEvent): void {
    ev.preventDefault();
    const frac = ev.offsetX / (ev.target as HTMLCanvasElement).width;
    const factor = ev.deltaY > 0 ? 1.25 : 0.8;
    this.state.range = zoomRange(this.state.range, factor, frac, this.state.timesteps);
    void this.refreshWindow();
  }

  private onDrag(ev: MouseEvent): void {
    if (this.dragAnchor === null) return;
    const dx = ev.clientX - this.dragAnchor;
    if (Math.abs(dx) < 8) return;
    this.dragAnchor = ev.clientX;
    const widthPx = (ev.target as HTMLCanvasElement).width;
    this.state.range = panRange(this.state.range, -dx / widthPx, this.state.timesteps);
    void this.refreshWindow();
  }

  private onKey(ev: KeyboardEvent): void {
    const target = ev.target as HTMLElement;
    if (target.tagName === "TEXTAREA" || target.tagName === "INPUT" || target.tagName === "SELECT") {
      return;
    }
    const classIdx = CLASS_SHORTCUTS.indexOf(ev.key);
    if (classIdx >= 0 && classIdx < faultClasses(this.vocabulary).length) {
      this.classSelect.value = faultClasses(this.vocabulary)[classIdx];
      this.onClassChange();
    } else if (["a", "b", "c"].includes(ev.key) && !this.phaseSelect.disabled) {
      this.phaseSelect.value = ev.key.toUpperCase();
      this.state.draft.phase = this.phaseSelect.value;
      this.updateSubmitState();
    } else if (ev.key === "f") {
      this.setRange(fullRange(this.state.timesteps));
    } else if (ev.key === "n") {
      const next = nextPending(this.worksheet, this.state.sampleId);
      if (next) void this.openSample(next.sample_id);
    } else if (ev.key === "Enter" && !this.submitButton.disabled) {
      void this.submitLabel();
    }
  }

  async submitLabel(): Promise<void> {
    const problem = validateDraft(this.vocabulary, this.state.draft);
    if (problem !== null) {
      this.draftError.textContent = problem;
      return;
    }
    try {
      await this.api.postLabel(this.state.draft);
    } catch (err) {
      // server rejected: roll the optimistic state back to pre-submit
      this.draftError.textContent =
        err instanceof ApiError ? `rejected: ${err.message}` : String(err);
      return;
    }
    this.draftError.textContent = "";
    this.commentInput.value = "";
    this.state.draft.comment = "";
    await this.refreshClusters();
    await this.refreshMetrics(true);
    const next = nextPending(this.worksheet, this.state.sampleId);
    if (next) await this.openSample(next.sample_id);
  }

  async refreshMetrics(expectLabels: boolean): Promise<void> {
    let report: MetricReport;
    try {
      report = await this.api.recompute();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && !expectLabels) {
        this.metricsPanel.textContent = "no labels yet — metrics appear after the first submit";
        return;
      }
      this.metricsPanel.textContent = `metrics unavailable: ${(err as Error).message}`;
      return;
    }
    this.renderMetrics(report);
  }

  private renderMetrics(report: MetricReport): void {
    const fmt = (v: number | null | undefined) => (v === null || v === undefined ? "n/a" : v.toFixed(3));
    const rows = report.per_cluster
      .map(
        (row) =>
          `<tr><td>${row.cluster}</td><td>${row.count}</td><td>${fmt(row.purity)}</td>` +
          `<td>${fmt(row.entropy)}</td><td>${fmt(row.silhouette)}</td></tr>`,
      )
      .join("");
    const stat = (s: { mean: number; std: number } | undefined) =>
      s ? `${s.mean.toFixed(3)} ± ${s.std.toFixed(3)}` : "n/a";
    this.metricsPanel.innerHTML = `
      <div>labeled: ${report.n_labeled} — global purity ${fmt(report.global.purity)},
           entropy ${fmt(report.global.entropy)}, silhouette ${fmt(report.global.silhouette)}</div>
      <table class="stats">
        <tr><th></th><th>purity</th><th>entropy</th><th>silhouette</th></tr>
        <tr><td>raw</td><td>${stat(report.raw.purity)}</td><td>${stat(report.raw.entropy)}</td>
            <td>${stat(report.raw.silhouette)}</td></tr>
        <tr><td>weighted</td><td>${stat(report.weighted.purity)}</td><td>${stat(report.weighted.entropy)}</td>
            <td>${stat(report.weighted.silhouette)}</td></tr>
      </table>
      <table class="per-cluster">
        <tr><th>cluster</th><th>n</th><th>purity</th><th>entropy</th><th>sil</th></tr>
        ${rows}
      </table>`;
  }
}
