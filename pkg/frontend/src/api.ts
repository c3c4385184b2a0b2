/**
 * Typed client for the exam service. Response submission retries on
 * network failure: the server is idempotent per step, so resubmitting the
 * same step is always safe.
 */

export interface Stimulus {
  step: number;
  size_arcmin: number;
  size_logmar: number;
  optotype: string;
}

export interface SessionConfig {
  prior: { mu: number; beta: number };
  max_questions: number;
  optotype_count: number;
  tau: number;
  slip_model: number;
  policy: string;
  mode: { kind: string; rel_eps: number; confidence: number; cap: number };
}

export interface CreateSessionResponse {
  session_id: string;
  optotypes: string[];
  config: SessionConfig;
  stimulus: Stimulus;
}

export interface TraceItem {
  step: number;
  size_arcmin: number;
  size_logmar: number;
  correct: boolean;
}

export interface ExamResult {
  predicted_arcmin: number;
  predicted_logmar: number;
  snellen_denominator: number;
  confidence: number;
  questions_asked: number;
  converged: boolean;
  trace: TraceItem[];
}

export interface SubmitResponse {
  status: "in_progress" | "finished";
  stimulus: Stimulus | null;
  result: ExamResult | null;
}

export interface Quantile {
  q: number;
  arcmin: number;
  logmar: number;
}

export interface HistogramBin {
  logmar_lo: number;
  logmar_hi: number;
  mass: number;
}

export interface Belief {
  map_arcmin: number;
  map_logmar: number;
  confidence_in_band: number;
  rel_eps: number;
  quantiles: Quantile[];
  histogram: HistogramBin[];
}

export interface SessionState {
  session_id: string;
  state: "awaiting_response" | "finished";
  steps_taken: number;
  optotypes: string[];
  config: SessionConfig;
  stimulus: Stimulus | null;
  created_at: string;
  updated_at: string;
  flags: string[];
}

export interface CreateSessionRequest {
  prior?: { mu: number; beta: number };
  max_questions?: number;
  optotype_count?: number;
  mode?: { kind: "fixed_length" | "until_confident"; rel_eps?: number; confidence?: number; cap?: number };
  seed?: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "http_error";
  let message = response.statusText;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(response.status, code, message);
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ExamApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private retryDelayMs = 250,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseOrThrow<T>(response);
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    return parseOrThrow<T>(response);
  }

  createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.post("/sessions", req);
  }

  /**
   * Submit one answer; network failures are retried with the same step
   * number. If a retry races a delivered-but-unacknowledged first attempt
   * the server replays its recorded reply.
   */
  async submitResponse(
    sessionId: string,
    step: number,
    chosen: string,
    attempts = 4,
  ): Promise<SubmitResponse> {
    let lastError: unknown;
    for (let attempt = 0; attempt < attempts; attempt++) {
      try {
        return await this.post<SubmitResponse>(`/sessions/${sessionId}/responses`, {
          step,
          chosen,
        });
      } catch (err) {
        if (err instanceof ApiError) throw err; // server spoke; don't retry
        lastError = err;
        await sleep(this.retryDelayMs * (attempt + 1));
      }
    }
    throw lastError instanceof Error ? lastError : new Error("network failure");
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.get(`/sessions/${sessionId}`);
  }

  getBelief(sessionId: string): Promise<Belief> {
    return this.get(`/sessions/${sessionId}/belief`);
  }

  getResult(sessionId: string): Promise<ExamResult> {
    return this.get(`/sessions/${sessionId}/result`);
  }
}
