/** Typed client for the annotation service HTTP API.
 *
 * The service is the only backend this UI talks to; its base URL is the
 * single piece of configuration. All responses are JSON. Non-2xx
 * responses carry `{error, message}` and become ApiError; transport
 * failures reject with whatever the fetch implementation throws.
 */

export type Label = "L1" | "L2" | "BL" | "NL";

export interface PairDescriptor {
  pair_id: string;
  img1: string;
  img2: string;
}

export interface AnnotatorInfo {
  id: string;
  completed: number;
  gold_correct: number;
  gold_attempted: number;
  status: "active" | "disqualified";
}

export interface SessionResponse {
  token: string;
  annotator: AnnotatorInfo;
}

export interface BatchResponse {
  pairs: PairDescriptor[];
}

export interface LabelAck {
  ok: boolean;
  annotator: AnnotatorInfo;
}

export interface ExportResponse {
  annotations: string;
  stats: Record<string, unknown>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = "HttpError";
  let message = `HTTP ${response.status}`;
  try {
    const doc = (await response.json()) as { error?: string; message?: string };
    if (doc.error) code = doc.error;
    if (doc.message) message = doc.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => parseOrThrow<T>(r));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(this.base + path).then((r) => parseOrThrow<T>(r));
  }

  createSession(annotatorId: string): Promise<SessionResponse> {
    return this.post("/session", { annotator_id: annotatorId });
  }

  getBatch(token: string): Promise<BatchResponse> {
    return this.get(`/batch?token=${encodeURIComponent(token)}`);
  }

  submitLabel(token: string, pairId: string, label: Label): Promise<LabelAck> {
    return this.post("/label", { token, pair_id: pairId, label });
  }

  advanceRound(force = false): Promise<unknown> {
    return this.post("/admin/round/advance", { force });
  }

  exportDataset(): Promise<ExportResponse> {
    return this.get("/admin/export");
  }

  /** Absolute URL for a service-relative image path. */
  imageUrl(path: string): string {
    return path.startsWith("http") ? path : this.base + path;
  }
}
