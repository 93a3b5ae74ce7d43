// Client-side checks mirroring what the server rejects, so bad input is
// caught before a request goes out. The temperature range is the one the
// panel enforces: above the greedy cutoff (0.01) and at most 2.0.

import type { CreateSessionRequest, DecodingParams } from "./types.js";

export const TEMPERATURE_MIN = 0.01; // exclusive
export const TEMPERATURE_MAX = 2.0; // inclusive
export const MAX_STOP_SEQUENCES = 4;

export function validateParams(params: DecodingParams): string[] {
  const errors: string[] = [];
  if (!Number.isInteger(params.max_tokens) || params.max_tokens < 1) {
    errors.push("max_tokens must be an integer >= 1");
  }
  if (!(params.temperature > TEMPERATURE_MIN) || params.temperature > TEMPERATURE_MAX) {
    errors.push(`temperature must lie in (${TEMPERATURE_MIN}, ${TEMPERATURE_MAX}]`);
  }
  if (!Number.isInteger(params.top_k) || params.top_k < 0) {
    errors.push("top_k must be an integer >= 0 (0 disables it)");
  }
  if (!(params.top_p > 0) || params.top_p > 1) {
    errors.push("top_p must lie in (0, 1]");
  }
  if (params.presence_penalty < 0 || params.frequency_penalty < 0) {
    errors.push("penalties must be >= 0");
  }
  if (params.stop.length > MAX_STOP_SEQUENCES) {
    errors.push(`at most ${MAX_STOP_SEQUENCES} stop strings allowed`);
  }
  if (params.stop.some((s) => s.length === 0)) {
    errors.push("stop strings must be nonempty");
  }
  if (!Number.isInteger(params.seed)) {
    errors.push("seed must be an integer");
  }
  if (!Number.isInteger(params.n_candidates) || params.n_candidates < 1) {
    errors.push("n_candidates must be an integer >= 1");
  }
  return errors;
}

export function validateCreateRequest(req: CreateSessionRequest): string[] {
  const errors: string[] = [];
  if (req.mode === "problem_driven") {
    const inputs = req.inputs as { category?: string; problem_statement?: string };
    if (!inputs.category || !inputs.category.trim()) {
      errors.push("category must be nonempty");
    }
    if (!inputs.problem_statement || !inputs.problem_statement.trim()) {
      errors.push("problem statement must be nonempty");
    }
  } else {
    const inputs = req.inputs as { query_source?: string; query_target?: string };
    if (!inputs.query_source || !inputs.query_source.trim()) {
      errors.push("query source must be nonempty");
    }
    if (!inputs.query_target || !inputs.query_target.trim()) {
      errors.push("query target must be nonempty");
    }
  }
  return errors;
}
