import type { LabelDraft, Vocabulary } from "./types.js";

/**
 * Fallback copy of the server vocabulary, used until GET /vocabulary
 * resolves. The server remains authoritative; submits it rejects are
 * surfaced to the user.
 */
export const DEFAULT_VOCABULARY: Vocabulary = {
  Normal: { Normal: "na" },
  "Short-circuit": {
    "1-P-SC": "single",
    "2-P-SC": "multi",
    "2-P-G-SC": "multi",
    "3-P-SC": "multi",
  },
  Switching: { "Switch On": "na", "Switch Off": "na" },
  Transients: { Transients: "na" },
  Other: { "Off - No Switch": "na", "Open Circuit": "single", Other: "na" },
};

export function faultClasses(vocab: Vocabulary): string[] {
  return Object.keys(vocab);
}

export function faultTypesFor(vocab: Vocabulary, faultClass: string): string[] {
  const types = vocab[faultClass];
  return types ? Object.keys(types) : [];
}

export type PhaseMode = "single" | "multi" | "na";

export function phaseMode(vocab: Vocabulary, faultClass: string, faultType: string): PhaseMode | null {
  const mode = vocab[faultClass]?.[faultType];
  return mode === "single" || mode === "multi" || mode === "na" ? mode : null;
}

/** Selectable phases for a fault type; "na"/"multi" types have one forced value. */
export function phaseOptionsFor(mode: PhaseMode): string[] {
  if (mode === "single") return ["A", "B", "C"];
  if (mode === "multi") return ["multi"];
  return ["N/A"];
}

export function phaseSelectionEnabled(mode: PhaseMode): boolean {
  return mode === "single";
}

/** Null when the draft is vocabulary-valid, else a human-readable reason. */
export function validateDraft(vocab: Vocabulary, draft: LabelDraft): string | null {
  if (draft.sample_id === null) return "no sample selected";
  if (!vocab[draft.fault_class]) return `unknown fault class: ${draft.fault_class || "(none)"}`;
  const mode = phaseMode(vocab, draft.fault_class, draft.fault_type);
  if (mode === null) {
    return `fault type ${draft.fault_type || "(none)"} is not valid for ${draft.fault_class}`;
  }
  if (!phaseOptionsFor(mode).includes(draft.phase)) {
    return mode === "single"
      ? "this fault type needs a phase (A, B or C)"
      : `phase must be ${phaseOptionsFor(mode)[0]}`;
  }
  return null;
}
