import type {
  MatchCard,
  OnboardRequest,
  OnboardResponse,
  Problem,
  SessionInfo,
  Side,
  VoteReceipt,
} from "./types.js";

/** Error carrying the service's JSON problem document. */
export class ApiError extends Error {
  readonly status: number;
  readonly problem: Problem;

  constructor(status: number, problem: Problem) {
    super(`${problem.code}: ${problem.detail}`);
    this.status = status;
    this.problem = problem;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Observer for every raw response body; the blinding audit hooks in here. */
export type PayloadObserver = (path: string, status: number, body: string) => void;

export class ArenaClient {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
    private readonly observer?: PayloadObserver,
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["content-type"] = "application/json";
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    this.observer?.(path, response.status, text);
    const doc: unknown = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, doc as Problem);
    }
    return doc as T;
  }

  async onboard(profile: OnboardRequest): Promise<OnboardResponse> {
    const out = await this.request<OnboardResponse>("POST", "/onboard", profile);
    this.setToken(out.token);
    return out;
  }

  startSession(): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", "/session/start");
  }

  getMatch(): Promise<MatchCard> {
    return this.request<MatchCard>("GET", "/match");
  }

  vote(matchId: string, choice: Side, fullViewAcknowledged: boolean, latencyMs = 0): Promise<VoteReceipt> {
    return this.request<VoteReceipt>("POST", "/vote", {
      match_id: matchId,
      choice,
      full_view_acknowledged: fullViewAcknowledged,
      latency_ms: latencyMs,
    });
  }
}
