import type { UiSession } from "./viewmodel.js";
import type { UiComponent } from "./types.js";

/**
 * Pure HTML-string rendering. Every actionable control carries
 * data-component-id and data-kind attributes; nothing else does, so the set
 * of tagged ids on a page is exactly the session's actionable set.
 */

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function button(c: UiComponent, cls = ""): string {
  return (
    `<button class="${cls}" data-component-id="${esc(c.id)}" data-kind="click">` +
    `${esc(c.label ?? "")}</button>`
  );
}

function field(c: UiComponent, value: string): string {
  const name = c.label ?? "";
  const type = name === "password" ? "password" : "text";
  return (
    `<input type="${type}" placeholder="${esc(name)}" value="${esc(value)}"` +
    ` data-component-id="${esc(c.id)}" data-kind="text-input">`
  );
}

function byBinding(components: UiComponent[], ...types: string[]): UiComponent[] {
  return components.filter((c) => types.includes(c.binding.type));
}

function tweetControls(components: UiComponent[], tweetId: number): string {
  return components
    .filter((c) => "tweetId" in c.binding && c.binding.tweetId === tweetId)
    .map((c) => button(c))
    .join(" ");
}

export function renderView(s: UiSession): string {
  const components = s.components();
  const parts: string[] = [];

  if (s.lastError) {
    parts.push(`<div class="banner error">${esc(s.lastError)}</div>`);
  }

  const nav = byBinding(components, "nav", "logout");
  if (s.token) {
    parts.push(`<nav>${nav.map((c) => button(c, "nav")).join(" ")}</nav>`);
  }

  switch (s.view) {
    case "login":
    case "signup": {
      const fields = components.filter((c) => c.binding.type === "field");
      const submits = byBinding(components, "login", "signup");
      parts.push(
        `<section class="auth"><h1>${s.view === "login" ? "Log in" : "Create an account"}</h1>`,
        ...fields.map((c) => field(c, s.buffers[c.label ?? ""] ?? "")),
        ...submits.map((c) => button(c, "primary")),
        ...components
          .filter((c) => c.binding.type === "nav" && !s.token)
          .map((c) => button(c, "link")),
        `</section>`,
      );
      break;
    }
    case "feed": {
      const rows = [...s.feed]
        .sort((a, b) => b.id - a.id) // newest first on screen
        .map((t) => {
          const media = t.media ? ` <span class="media">[${esc(t.media)}]</span>` : "";
          const parent =
            t.parent_id !== null
              ? `<span class="retweet-of">retweet of #${t.parent_id}</span> `
              : "";
          return (
            `<li class="tweet">${parent}<strong>${esc(t.author)}</strong>` +
            ` ${esc(t.text)}${media} <span class="likes">${t.likes} likes</span> ` +
            tweetControls(components, t.id) +
            `</li>`
          );
        });
      parts.push(`<ul class="tweets">${rows.join("")}</ul>`);
      break;
    }
    case "users": {
      const rows = s.users.map((u) => {
        const control = components.find(
          (c) =>
            (c.binding.type === "follow" || c.binding.type === "unfollow") &&
            c.binding.username === u.username,
        );
        return (
          `<li class="user"><strong>${esc(u.username)}</strong> ` +
          (control ? button(control) : "") +
          `</li>`
        );
      });
      parts.push(`<ul class="users">${rows.join("")}</ul>`);
      break;
    }
    case "alerts": {
      const alertControls = components.filter((c) => c.binding.type === "alert");
      const rows = s.alerts.map((a, i) => {
        const c = alertControls[i]!;
        const text =
          a.kind === "liked"
            ? `${a.actor} liked your tweet #${a.tweet_id}`
            : `${a.actor} started following you`;
        return (
          `<li class="alert-row ${a.kind}">` +
          `<button data-component-id="${esc(c.id)}" data-kind="click">${esc(text)}</button>` +
          `</li>`
        );
      });
      parts.push(`<ul class="alerts">${rows.join("")}</ul>`);
      if (!rows.length) parts.push(`<p class="empty">No alerts yet.</p>`);
      break;
    }
    case "composer": {
      const fields = components.filter((c) => c.binding.type === "field");
      const post = byBinding(components, "post");
      const cancel = byBinding(components, "cancel");
      const heading =
        s.pending.composeParent !== undefined
          ? `Retweet #${s.pending.composeParent}`
          : "Compose";
      parts.push(
        `<section class="composer"><h1>${heading}</h1>`,
        ...fields.map((c) => field(c, s.buffers[c.label ?? ""] ?? "")),
        ...post.map((c) => button(c, "primary")),
        ...cancel.map((c) => button(c)),
        `</section>`,
      );
      break;
    }
    case "who_liked": {
      const back = byBinding(components, "back");
      parts.push(
        `<section class="who-liked"><h1>Who liked #${s.pending.whoLiked}</h1>`,
        `<ul class="likers">${s.likers.map((n) => `<li>${esc(n)}</li>`).join("")}</ul>`,
        ...back.map((c) => button(c)),
        `</section>`,
      );
      break;
    }
  }

  return parts.join("\n");
}

/** Extract the tagged component ids from rendered HTML (debug/tests). */
export function taggedIds(html: string): string[] {
  const ids = [...html.matchAll(/data-component-id="([^"]*)"/g)].map((m) =>
    unescapeHtml(m[1]!),
  );
  return ids.sort();
}

function unescapeHtml(text: string): string {
  return text
    .replace(/&quot;/g, '"')
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&amp;/g, "&");
}
