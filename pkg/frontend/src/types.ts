// Wire types for the ideaforge session API. These mirror the JSON the
// server returns; the UI never invents fields beyond what arrives here.

export type Mode = "problem_driven" | "analogy";

export type Verdict = "pending" | "accepted" | "rejected";

export interface DecodingParams {
  max_tokens: number;
  temperature: number;
  top_k: number;
  top_p: number;
  presence_penalty: number;
  frequency_penalty: number;
  stop: string[];
  seed: number;
  n_candidates: number;
}

export interface EvaluationScores {
  novelty: number;
  relevance: number;
  repetition_flag: boolean;
  length_ok: boolean;
  composite: number;
}

export interface BankRow {
  source_domain: string;
  target_domain: string;
  description: string;
  provenance?: string;
}

export interface ProblemInputs {
  category: string;
  problem_statement: string;
}

export interface AnalogyInputs {
  examples: BankRow[];
  query_source: string;
  query_target: string;
}

export type SessionInputs = ProblemInputs | AnalogyInputs;

export interface BackendInfo {
  kind: "local" | "remote";
  model_path?: string;
  base_url?: string;
  model?: string;
  credential_env?: string;
  timeout: number;
  max_retries: number;
  backoff_base: number;
  max_in_flight: number;
}

export interface Candidate {
  id: string;
  text: string;
  mode: Mode;
  inputs: Record<string, unknown>;
  params: DecodingParams | null;
  backend: Record<string, unknown> | null;
  scores: EvaluationScores | null;
  verdict: Verdict;
}

export interface SessionView {
  id: string;
  mode: Mode;
  inputs: SessionInputs;
  params: DecodingParams;
  backend: BackendInfo;
  created_at: number;
  updated_at: number;
  batches: number;
  history: Candidate[];
}

export interface SessionSummary {
  id: string;
  mode: Mode;
  created_at: number;
  updated_at: number;
  batches: number;
  candidates: number;
}

export interface GenerateResult {
  session: SessionView;
  candidates: Candidate[];
}

export interface CreateSessionRequest {
  mode: Mode;
  // For analogy sessions "examples" may be omitted; the server then fills
  // in its bundled example bank.
  inputs: ProblemInputs | (Partial<AnalogyInputs> & Pick<AnalogyInputs, "query_source" | "query_target">);
  params?: Partial<DecodingParams>;
  backend?: Record<string, unknown>;
  id?: string;
}

export function isAnalogyInputs(inputs: SessionInputs): inputs is AnalogyInputs {
  return "examples" in inputs;
}
