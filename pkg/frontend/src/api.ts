/**
 * Scoring-service client. All model math happens server-side; this module
 * only moves JSON and enforces the latest-wins concurrency contract: issuing
 * a new request aborts any in-flight one, so at most one request is ever
 * outstanding and only the newest response is delivered.
 */

export interface ScoreRequest {
  features: Record<string, number>;
  sex: "male" | "female";
  subgroup: string;
  flags: Record<string, number>;
}

export interface ScoreResponse {
  probability: number;
  log_odds: number;
  odds: number;
  base_value: number;
  contributions: Record<string, number>;
  model_id: string;
  model_hash: string;
  capped: string[];
  policy_decision: number | null;
  policy_constraint: string | null;
}

export interface FieldError {
  field: string;
  error: string;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errors: FieldError[],
  ) {
    super(`scoring service returned ${status}`);
  }
}

/** Resolution of a score call: superseded requests resolve to null. */
export type ScoreOutcome = ScoreResponse | null;

export class ScoringClient {
  private seq = 0;
  private inFlight: AbortController | null = null;

  constructor(
    private readonly baseUrl = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async score(request: ScoreRequest): Promise<ScoreOutcome> {
    const mySeq = ++this.seq;
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;

    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/v1/score`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
    } catch (err) {
      if (controller.signal.aborted || mySeq !== this.seq) return null;
      throw err;
    }
    if (mySeq !== this.seq) return null; // a newer request superseded this one

    const body = await response.json();
    if (!response.ok) {
      throw new ServiceError(response.status, body.errors ?? []);
    }
    return body as ScoreResponse;
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/v1/health`);
      return response.ok;
    } catch {
      return false;
    }
  }
}
