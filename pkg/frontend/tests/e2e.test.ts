import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderView, taggedIds } from "../src/render.js";
import { ActionReporter } from "../src/tracker.js";
import { UiSession } from "../src/viewmodel.js";
import type { ActionKind, View } from "../src/types.js";

/**
 * End-to-end: a real server process, the real contract, the real tracker.
 * Covers id parity for all seven views, a scripted >=15-action session that
 * becomes a loadable trace and model, and a frequency replay of that model
 * on the same target without any off-model fallback.
 */

const PKG_ROOT = join(import.meta.dirname, "..", "..");

let proc: ChildProcess;
let baseUrl: string;
let tracePath: string;
let workDir: string;

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "synthuser-e2e-"));
  tracePath = join(workDir, "web-traces.jsonl");
  proc = spawn(
    "python3",
    ["-u", "-m", "synthuser.cli", "serve", "--host", "127.0.0.1", "--port", "0",
     "--traces", tracePath, "--fault-follow-p", "0"],
    { cwd: PKG_ROOT, stdio: ["ignore", "pipe", "inherit"] },
  );
  baseUrl = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error("server did not start")), 15_000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    proc.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}, 30_000);

afterAll(() => {
  proc?.kill();
});

async function activeIdsEndpoint(
  view: View,
  token?: string | null,
  context?: Record<string, unknown>,
): Promise<string[]> {
  const resp = await fetch(`${baseUrl}/track/active-ids`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ view, token, context }),
  });
  const doc = (await resp.json()) as { ok: boolean; ids: string[] };
  expect(doc.ok).toBe(true);
  return doc.ids;
}

function act(session: UiSession, id: string, kind: ActionKind = "click", payload?: string) {
  return session.performAction(id, kind, payload);
}

const NAV = (label: string) => `window[main]#0/panel[nav]#0/button[${label}]#0`;

describe("browser client against the live server", () => {
  it("id parity holds for every view, and a scripted session becomes a model that replays without fallback", async () => {
    const api = new ApiClient(baseUrl);
    const reporter = new ActionReporter(baseUrl);
    const contract = await api.contract();
    expect(contract.format).toBe("synthuser-ui-contract");
    const session = new UiSession("e2e-main", api, contract, reporter);

    const expectParity = async (
      view: View,
      context?: Record<string, unknown>,
    ) => {
      const rendered = taggedIds(renderView(session));
      const derived = session.activeIds();
      const served = await activeIdsEndpoint(view, session.token, context);
      expect(rendered).toEqual(derived);
      expect(derived).toEqual(served);
    };

    // -- scripted session, >=15 actions, recorded through report-action ------
    await expectParity("login");
    await act(session, "window[main]#0/button[Sign up]#0");           // 1
    await expectParity("signup");
    await act(session, "window[main]#0/field[username]#0", "text-input", "e2e-user"); // 2
    await act(session, "window[main]#0/field[password]#0", "text-input", "pw");       // 3
    await act(session, "window[main]#0/button[Create account]#0");    // 4 -> feed

    await act(session, NAV("Compose"));                               // 5
    await expectParity("composer");  // Post hidden: no text yet
    await act(session, "window[main]#0/field[text]#0", "text-input", "hello world"); // 6
    await expectParity("composer", { buffers: { text: "hello world" } });
    await act(session, "window[main]#0/button[Post]#0");              // 7 -> feed
    await act(session, NAV("Compose"));                               // 8
    await act(session, "window[main]#0/field[text]#0", "text-input", "second post"); // 9
    await act(session, "window[main]#0/button[Post]#0");              // 10 -> feed
    await act(session, "window[main]#0/panel[tweets]#0/button[Like]#0"); // 11 self-like
    await expectParity("feed");

    // a second human shows up, follows and likes: alerts for e2e-user
    const helper = new ApiClient(baseUrl);
    const helperToken = (await helper.signup("helper", "pw")).token;
    await helper.op("follow", { token: helperToken, username: "e2e-user" });
    await helper.op("like", { token: helperToken, tweet_id: 1 });

    await act(session, NAV("Users"));                                 // 12
    await expectParity("users");
    await act(session, "window[main]#0/panel[users]#0/button[Follow]#0"); // 13
    await act(session, NAV("Feed"));                                  // 14
    await act(session, NAV("Alerts"));                                // 15
    expect(session.alerts.length).toBe(2);
    await expectParity("alerts");
    await act(session, "window[main]#0/panel[alerts]#0/alert[liked]#0"); // 16 -> feed
    expect(session.view).toBe("feed");
    await act(session, NAV("Alerts"));                                // 17
    await act(session, NAV("Feed"));                                  // 18
    await act(session, "window[main]#0/panel[tweets]#0/button[Who liked]#0"); // 19
    await expectParity("who_liked", { who_liked: session.pending.whoLiked });
    await act(session, "window[main]#0/button[Back]#0");              // 20

    await reporter.flush();
    expect(reporter.dropped).toBe(0);

    // -- the trace loads and a model builds from it (via the CLI) ------------
    const modelPath = join(workDir, "web-model.json");
    const synth = spawnSync(
      "python3",
      ["-m", "synthuser.cli", "synthesize", tracePath, "-o", modelPath],
      { cwd: PKG_ROOT, encoding: "utf-8" },
    );
    expect(synth.status, synth.stderr).toBe(0);
    const model = JSON.parse(readFileSync(modelPath, "utf-8")) as {
      action_counts: Record<string, Record<string, Record<string, number>>>;
    };
    const trace = readFileSync(tracePath, "utf-8").trim().split("\n");
    expect(trace.length).toBe(21); // header + 20 reported actions

    // -- frequency replay on the same target, no off-model fallback ----------
    const rng = mulberry32(42);
    const replay = new UiSession("e2e-replay", api, contract, null);
    const replayName = `replay-${Date.now().toString(36)}`;
    let reachedFeed = false;
    for (let step = 0; step < 60; step++) {
      const row = model.action_counts[replay.view] ?? {};
      const available = new Set(replay.activeIds());
      const restricted: [string, ActionKind, number][] = [];
      for (const [component, kinds] of Object.entries(row)) {
        if (!available.has(component)) continue;
        for (const [kind, count] of Object.entries(kinds)) {
          restricted.push([component, kind as ActionKind, count]);
        }
      }
      expect(
        restricted.length,
        `off-model fallback needed at ${replay.view} on step ${step}`,
      ).toBeGreaterThan(0);
      restricted.sort((a, b) =>
        a[0] === b[0] ? a[1].localeCompare(b[1]) : a[0].localeCompare(b[0]),
      );
      const total = restricted.reduce((acc, r) => acc + r[2], 0);
      const threshold = rng() * total;
      let cumulative = 0;
      let chosen = restricted[restricted.length - 1]!;
      for (const entry of restricted) {
        cumulative += entry[2];
        if (threshold < cumulative) {
          chosen = entry;
          break;
        }
      }
      const [component, kind] = chosen;
      let payload: string | undefined;
      if (kind === "text-input") {
        const label = /field\[([^\]]*)\]#\d+$/.exec(component)?.[1] ?? "";
        payload =
          label === "username" ? replayName :
          label === "password" ? "pw" :
          label === "media" ? `pic-${step}` : `note ${step}`;
      }
      await replay.performAction(component, kind, payload);
      if (replay.view === "feed") reachedFeed = true;
    }
    expect(reachedFeed).toBe(true);
  }, 60_000);
});

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
