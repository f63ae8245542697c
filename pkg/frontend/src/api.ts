import type { AlertView, ApiError, Contract, TweetView, UserView } from "./types.js";

/** Thin JSON client for the platform's wire API (one endpoint per operation). */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = (await resp.json()) as T | ApiError;
    if (!resp.ok || (payload as ApiError).ok === false) {
      const err = payload as ApiError;
      throw new RequestFailed(err.code ?? "unknown", err.message ?? resp.statusText);
    }
    return payload as T;
  }

  op<T = { ok: true }>(op: string, body: Record<string, unknown>): Promise<T> {
    return this.post<T>(`/api/${op}`, body);
  }

  signup(username: string, password: string) {
    return this.op<{ ok: true; token: string }>("signup", { username, password });
  }

  login(username: string, password: string) {
    return this.op<{ ok: true; token: string }>("login", { username, password });
  }

  getFeed(token: string) {
    return this.op<{ ok: true; tweets: TweetView[] }>("get_feed", { token });
  }

  listUsers(token: string) {
    return this.op<{ ok: true; users: UserView[] }>("list_users", { token });
  }

  getAlerts(token: string) {
    return this.op<{ ok: true; alerts: AlertView[] }>("get_alerts", { token });
  }

  whoLiked(token: string, tweetId: number) {
    return this.op<{ ok: true; users: string[] }>("who_liked", {
      token,
      tweet_id: tweetId,
    });
  }

  async contract(): Promise<Contract> {
    const resp = await this.fetchFn(`${this.baseUrl}/ui/contract.json`);
    return (await resp.json()) as Contract;
  }
}

export class RequestFailed extends Error {
  constructor(
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}
