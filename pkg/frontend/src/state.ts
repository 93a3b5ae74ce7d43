// In-memory UI state. Everything here is either fetched from the API or a
// pure view preference (sort order, filter toggle); truth lives server-side
// and a reload rebuilds all of it from the endpoints.

import type { Candidate, DecodingParams, SessionSummary, SessionView } from "./types.js";

export type SortOrder = "arrival" | "score";

export class AppState {
  sessions: SessionSummary[] = [];
  selected: SessionView | null = null;
  /** Params staged in the panel; sent with the next batch only. */
  draft: DecodingParams | null = null;
  /** Session ids with a generate request currently running. */
  inflight = new Set<string>();
  sortOrder: SortOrder = "arrival";
  showFiltered = true;
  lastError = "";
}

export function cloneParams(params: DecodingParams): DecodingParams {
  return { ...params, stop: [...params.stop] };
}

export function paramsEqual(a: DecodingParams, b: DecodingParams): boolean {
  return (
    a.max_tokens === b.max_tokens &&
    a.temperature === b.temperature &&
    a.top_k === b.top_k &&
    a.top_p === b.top_p &&
    a.presence_penalty === b.presence_penalty &&
    a.frequency_penalty === b.frequency_penalty &&
    a.seed === b.seed &&
    a.n_candidates === b.n_candidates &&
    a.stop.length === b.stop.length &&
    a.stop.every((s, i) => s === b.stop[i])
  );
}

/** A candidate the evaluator gated out: scored, but composite forced to 0. */
export function isFilteredOut(candidate: Candidate): boolean {
  return candidate.scores !== null && candidate.scores.composite === 0;
}

export function sortCandidates(history: Candidate[], order: SortOrder): Candidate[] {
  const out = [...history];
  if (order === "score") {
    // Sort by the composite the API reported; ties fall back to id so the
    // order is stable across renders.
    out.sort((a, b) => {
      const ca = a.scores ? a.scores.composite : -1;
      const cb = b.scores ? b.scores.composite : -1;
      if (cb !== ca) {
        return cb - ca;
      }
      return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
    });
  }
  return out;
}
