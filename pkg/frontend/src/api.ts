// Typed client for the glyphkit HTTP service. Every call goes through
// `request`, which decodes the service's one error envelope.

export interface DbSummary {
  groups: number;
  merged_groups: number;
  skipped_rows: number;
}

export interface GlyphEntry {
  codepoint: string; // uppercase hex
  char: string;
  readability: "unrated" | "readable" | "marginal" | "unreadable";
  recognizability: Record<string, string>;
}

export interface HomoglyphListing {
  codepoint: string;
  char: string;
  group_id: string | null;
  canonical: string | null;
  homoglyphs: GlyphEntry[];
}

export interface PlanEdit {
  position: number; // scalar index
  original: string; // hex
  replacement: string; // hex
}

export interface Plan {
  format: string;
  version: number;
  hash: string;
  source_hash: string;
  edits: PlanEdit[];
}

export interface PerturbResult {
  text: string;
  perturbed_char_count: number;
}

export interface Violation {
  rule: string;
  position: number | null;
  message: string;
}

export interface SummaryStats {
  n: number;
  min: number;
  max: number;
  mean: number;
  std: number;
}

export interface StatsPayload {
  model: string;
  attempts_to_fool: SummaryStats;
  perturbed_chars: SummaryStats;
  question_chars: SummaryStats | null;
}

export interface AttemptBody {
  question_id: string;
  model: string;
  attempt_number: number;
  source_text: string;
  perturbed_text: string;
  plan: Plan;
  perturbed_char_count: number;
  verdict: "fooled" | "not_fooled" | "unclear";
  timestamp?: string;
}

export interface AttemptAck {
  recorded: boolean;
  question_id: string;
  model: string;
  attempt_number: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (response.ok) return response;
    let code = "bad_request";
    let message = `${response.status} ${response.statusText}`;
    let detail: unknown = null;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
      detail = body.detail ?? null;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(response.status, code, message, detail);
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    return (await this.request(path, init)).json() as Promise<T>;
  }

  health(): Promise<{ status: string; db_loaded: boolean }> {
    return this.json("/api/health");
  }

  uploadDb(bytes: Uint8Array, format = "auto"): Promise<DbSummary> {
    return this.json(`/api/db?format=${format}`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: bytes as unknown as BodyInit,
    });
  }

  dbSummary(): Promise<DbSummary> {
    return this.json("/api/db");
  }

  homoglyphs(hex: string): Promise<HomoglyphListing> {
    return this.json(`/api/homoglyphs/${hex}`);
  }

  candidates(hex: string, model: string): Promise<{ candidates: GlyphEntry[] }> {
    return this.json(
      `/api/candidates/${hex}?model=${encodeURIComponent(model)}`,
    );
  }

  perturb(text: string, plan: Plan): Promise<PerturbResult> {
    return this.json("/api/perturb", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text, plan }),
    });
  }

  /** Raw probe prompt; the body bytes are the contract, so return text(). */
  async probePrompt(hex: string): Promise<string> {
    const response = await this.request(`/api/probe-prompt/${hex}`);
    return response.text();
  }

  sendPrompt(
    provider: string,
    prompt: string,
    model?: string,
  ): Promise<Record<string, unknown>> {
    return this.json("/api/llm", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ provider, prompt, ...(model ? { model } : {}) }),
    });
  }

  recordAttempt(body: AttemptBody): Promise<AttemptAck> {
    return this.json("/api/sessions/attempts", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listAttempts(
    questionId?: string,
    model?: string,
  ): Promise<{ attempts: Array<Record<string, unknown>> }> {
    const params = new URLSearchParams();
    if (questionId) params.set("question_id", questionId);
    if (model) params.set("model", model);
    const query = params.toString();
    return this.json(`/api/sessions/attempts${query ? `?${query}` : ""}`);
  }

  stats(model: string): Promise<StatsPayload> {
    return this.json(`/api/stats?model=${encodeURIComponent(model)}`);
  }

  referenceStats(): Promise<Record<string, unknown>> {
    return this.json("/api/reference-stats");
  }
}
