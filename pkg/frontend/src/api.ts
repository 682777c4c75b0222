import type {
  Agreement,
  PairingPayload,
  TournamentState,
  Verdict,
} from "./types.js";

// ── Errors ──────────────────────────────────────────

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service answers 409 when a rater re-submits a pairing it already
 *  resolved for them; callers treat that as "refresh, don't record". */
export function isStale(err: unknown): boolean {
  return err instanceof ApiError && err.status === 409;
}

// ── Client ──────────────────────────────────────────

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const body = await res.text();
    if (!res.ok) {
      let detail = body;
      try {
        detail = (JSON.parse(body) as { error?: string }).error ?? body;
      } catch {
        // non-JSON error body, keep raw text
      }
      throw new ApiError(res.status, detail);
    }
    return JSON.parse(body) as T;
  }

  tournament(): Promise<TournamentState> {
    return this.request<TournamentState>("/api/tournament");
  }

  pairing(): Promise<PairingPayload> {
    return this.request<PairingPayload>("/api/pairing");
  }

  agreement(): Promise<Agreement> {
    return this.request<Agreement>("/api/agreement");
  }

  submitVerdict(
    pairingId: string,
    verdict: Verdict,
    rater: string,
  ): Promise<TournamentState> {
    return this.request<TournamentState>("/api/verdict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ pairing_id: pairingId, verdict, rater }),
    });
  }

  assetUrl(name: string): string {
    return `${this.baseUrl}/assets/${encodeURIComponent(name)}`;
  }
}
