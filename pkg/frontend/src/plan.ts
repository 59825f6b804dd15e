// Session state and plan-building logic. Pure functions only; everything
// here must behave identically under vitest and in the browser.

export const ALPHA_MIN = 0;
export const ALPHA_MAX = 2.0;
export const ALPHA_STEP = 0.1;

// The strength set the pipeline defaults to; offered as one-click chips.
export const CANONICAL_ALPHAS = [0, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0];

export const CONDITIONS = ["low_light", "intense_light", "sand_dust", "fog", "rain"];

export interface SessionState {
  selectedContent: string | null;
  selectedStyle: string | null;
  alpha: number;
  approvedStyles: string[]; // unique ids
  chosenAlphas: number[]; // sorted unique
}

export function initialSession(): SessionState {
  return {
    selectedContent: null,
    selectedStyle: null,
    alpha: 1.0,
    approvedStyles: [],
    chosenAlphas: [],
  };
}

/** Snap to the 0.1 slider grid inside [0, 2]; one decimal kills float dust. */
export function clampAlpha(value: number): number {
  if (!Number.isFinite(value)) return ALPHA_MIN;
  const snapped = Math.round(value / ALPHA_STEP) * ALPHA_STEP;
  const bounded = Math.min(ALPHA_MAX, Math.max(ALPHA_MIN, snapped));
  return Math.round(bounded * 10) / 10;
}

export function toggleAlpha(alphas: number[], value: number): number[] {
  const v = clampAlpha(value);
  const next = alphas.includes(v) ? alphas.filter((a) => a !== v) : [...alphas, v];
  return next.sort((a, b) => a - b);
}

export function toggleApproval(approved: string[], styleId: string): string[] {
  return approved.includes(styleId)
    ? approved.filter((s) => s !== styleId)
    : [...approved, styleId];
}

export interface PlanBody {
  content_root: string;
  styles_root: string;
  content_ids: string[];
  style_refs: [string, string][];
  alphas: number[];
  output_root: string;
  dedup_alpha_zero: boolean;
  mix_in_originals: boolean;
}

/** Human-readable reason the session cannot export yet, or null if it can. */
export function validateSession(state: SessionState): string | null {
  if (state.approvedStyles.length === 0) return "approve at least one style";
  if (state.chosenAlphas.length === 0) return "choose at least one strength value";
  return null;
}

/**
 * Assemble the export body. Roots stay blank: the server knows its own
 * paths and fills them when saving. Styles are sorted so identical choices
 * always export identical bytes.
 */
export function buildPlan(
  state: SessionState,
  contentIds: string[],
  conditionsById: Map<string, string>,
): PlanBody {
  const refs = [...state.approvedStyles].sort().map((id): [string, string] => {
    const condition = conditionsById.get(id);
    if (condition === undefined) throw new Error(`unknown style id ${id}`);
    return [id, condition];
  });
  return {
    content_root: "",
    styles_root: "",
    content_ids: [...contentIds],
    style_refs: refs,
    alphas: [...state.chosenAlphas],
    output_root: "",
    dedup_alpha_zero: true,
    mix_in_originals: true,
  };
}

export function exportPlanJson(plan: PlanBody): string {
  return JSON.stringify(plan, null, 2) + "\n";
}

/**
 * Mirror of the pipeline's cardinality rule, for live display: raw is the
 * full product; with dedup and alpha 0 present, the style axis collapses to
 * one identity copy per content at that strength.
 */
export function planCardinality(
  nContents: number,
  nStyles: number,
  alphas: number[],
  dedup = true,
): [number, number] {
  const nAlphas = alphas.length;
  const raw = nContents * nStyles * nAlphas;
  if (raw === 0) return [0, 0];
  if (dedup && alphas.includes(0)) {
    return [raw, nContents * nStyles * (nAlphas - 1) + nContents];
  }
  return [raw, raw];
}
