import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { AlertView, Contract, TweetView, UserView } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixtureContract(): Contract {
  return JSON.parse(
    readFileSync(join(here, "fixtures", "contract.json"), "utf-8"),
  ) as Contract;
}

/**
 * Minimal in-memory stand-in for the platform server, good enough for
 * view-model unit tests. The real server is exercised by the e2e suite.
 */
export class FakeBackend {
  tweets: TweetView[] = [];
  users: UserView[] = [];
  alerts: AlertView[] = [];
  likers: Record<number, string[]> = {};
  failNext: { code: string; message: string } | null = null;
  nextTweetId = 1;

  readonly fetchFn: typeof fetch = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const path = String(url);
    const body = init?.body ? JSON.parse(String(init.body)) : {};
    return this.handle(path, body);
  }) as typeof fetch;

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), { status });
  }

  private handle(path: string, body: Record<string, unknown>): Response {
    if (this.failNext) {
      const err = this.failNext;
      this.failNext = null;
      return this.json({ ok: false, ...err }, 500);
    }
    switch (path.replace(/^https?:\/\/[^/]+/, "")) {
      case "/api/signup":
      case "/api/login":
        return this.json({ ok: true, token: "tok-1" });
      case "/api/logout":
        return this.json({ ok: true });
      case "/api/get_feed":
        return this.json({ ok: true, tweets: this.tweets });
      case "/api/list_users":
        return this.json({ ok: true, users: this.users });
      case "/api/get_alerts":
        return this.json({ ok: true, alerts: this.alerts });
      case "/api/who_liked":
        return this.json({
          ok: true,
          users: this.likers[body["tweet_id"] as number] ?? [],
        });
      case "/api/post_tweet": {
        const tweet: TweetView = {
          id: this.nextTweetId++,
          author: "me",
          text: body["text"] as string,
          media: (body["media"] as string | undefined) ?? null,
          parent_id: null,
          likes: 0,
          liked_by_me: false,
        };
        this.tweets.push(tweet);
        return this.json({ ok: true, tweet_id: tweet.id });
      }
      case "/api/retweet": {
        const tweet: TweetView = {
          id: this.nextTweetId++,
          author: "me",
          text: body["text"] as string,
          media: (body["media"] as string | undefined) ?? null,
          parent_id: body["tweet_id"] as number,
          likes: 0,
          liked_by_me: false,
        };
        this.tweets.push(tweet);
        return this.json({ ok: true, tweet_id: tweet.id });
      }
      case "/api/like": {
        const tweet = this.tweets.find((t) => t.id === body["tweet_id"]);
        if (tweet) {
          tweet.liked_by_me = true;
          tweet.likes += 1;
        }
        return this.json({ ok: true, likes: tweet?.likes ?? 0 });
      }
      case "/api/unlike": {
        const tweet = this.tweets.find((t) => t.id === body["tweet_id"]);
        if (tweet) {
          tweet.liked_by_me = false;
          tweet.likes -= 1;
        }
        return this.json({ ok: true, likes: tweet?.likes ?? 0 });
      }
      case "/api/follow": {
        const user = this.users.find((u) => u.username === body["username"]);
        if (user) user.following = true;
        return this.json({ ok: true });
      }
      case "/api/unfollow": {
        const user = this.users.find((u) => u.username === body["username"]);
        if (user) user.following = false;
        return this.json({ ok: true });
      }
      default:
        return this.json({ ok: false, code: "not_found", message: path }, 404);
    }
  }
}
