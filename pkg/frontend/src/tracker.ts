import type { ReportedAction } from "./types.js";

/**
 * Fire-and-forget action reporting. One retry on failure; after that the
 * event is dropped and counted, and the debug panel shows the tally.
 * Posting must never block the interaction that produced the event.
 */
export class ActionReporter {
  dropped = 0;
  private inFlight: Promise<void> = Promise.resolve();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  report(event: ReportedAction): void {
    // chain sends so seq assignment server-side sees them in order
    this.inFlight = this.inFlight.then(() => this.send(event));
  }

  /** Resolves when every event reported so far has been sent or dropped. */
  flush(): Promise<void> {
    return this.inFlight;
  }

  private async send(event: ReportedAction): Promise<void> {
    for (let attempt = 0; attempt < 2; attempt++) {
      try {
        const resp = await this.fetchFn(`${this.baseUrl}/track/report-action`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(event),
        });
        if (resp.ok) return;
      } catch {
        // fall through to retry
      }
    }
    this.dropped += 1;
  }
}
