import { ApiClient, RequestFailed } from "./api.js";
import { listEntityIds, walkContractTree } from "./componentIds.js";
import type { ActionReporter } from "./tracker.js";
import type {
  ActionKind,
  AlertView,
  Binding,
  Contract,
  ContractNode,
  TweetView,
  UiComponent,
  UserView,
  View,
} from "./types.js";

/**
 * The browser session's state machine. Views, controls, and navigation all
 * derive from the contract the server publishes; this module performs the
 * server requests itself and reports every completed action to the tracker.
 *
 * It deliberately mirrors the headless client: list controls are numbered in
 * append order, the composer's Post button exists only once text is typed,
 * and when the server is armed with the alert-navigation bug (exposed in the
 * contract) clicking a liked alert stops leading home after the configured
 * number of received alerts.
 */
export class UiSession {
  view: View = "login";
  token: string | null = null;
  username: string | null = null;
  lastError: string | null = null;
  alertsSeen = 0;

  feed: TweetView[] = [];
  users: UserView[] = [];
  alerts: AlertView[] = [];
  likers: string[] = [];
  buffers: Record<string, string> = {};
  pending: { composeParent?: number; whoLiked?: number } = {};

  constructor(
    readonly sessionId: string,
    private readonly api: ApiClient,
    private readonly contract: Contract,
    private readonly reporter: ActionReporter | null = null,
  ) {}

  // -- component derivation --------------------------------------------------

  components(): UiComponent[] {
    const out: UiComponent[] = [];
    for (const { id, node } of walkContractTree(this.contract.views[this.view])) {
      if (!node.actions?.length) continue;
      if (this.view === "composer" && node.label === "Post" && !this.buffers["text"]) {
        continue; // Post stays disabled until there is text
      }
      out.push({
        id,
        kind: node.kind,
        label: node.label ?? null,
        actions: node.actions,
        binding: this.staticBinding(node),
      });
    }
    out.push(...this.listComponents());
    return out;
  }

  activeIds(): string[] {
    return this.components()
      .map((c) => c.id)
      .sort();
  }

  find(id: string): UiComponent | undefined {
    return this.components().find((c) => c.id === id);
  }

  private staticBinding(node: ContractNode): Binding {
    const label = node.label ?? "";
    if (node.kind === "field") return { type: "field", name: label };
    switch (label) {
      case "Feed":
        return { type: "nav", view: "feed" };
      case "Users":
        return { type: "nav", view: "users" };
      case "Alerts":
        return { type: "nav", view: "alerts" };
      case "Compose":
        return { type: "nav", view: "composer" };
      case "Log out":
        return { type: "logout" };
      case "Sign up":
        return this.view === "login" ? { type: "nav", view: "signup" } : { type: "signup" };
      case "Log in":
        return this.view === "signup" ? { type: "nav", view: "login" } : { type: "login" };
      case "Create account":
        return { type: "signup" };
      case "Post":
        return { type: "post" };
      case "Cancel":
        return { type: "cancel" };
      case "Back":
        return { type: "back" };
      default:
        throw new Error(`unmapped control ${node.kind}[${label}]`);
    }
  }

  private listComponents(): UiComponent[] {
    const out: UiComponent[] = [];
    if (this.view === "feed") {
      const panel = this.contract.list_templates["feed"]!.panel;
      const rows = this.feed.map((t) => [
        {
          kind: "button",
          label: t.liked_by_me ? "Unlike" : "Like",
          binding: (t.liked_by_me
            ? { type: "unlike", tweetId: t.id }
            : { type: "like", tweetId: t.id }) as Binding,
        },
        { kind: "button", label: "Retweet", binding: { type: "retweet", tweetId: t.id } as Binding },
        { kind: "button", label: "Who liked", binding: { type: "who_liked", tweetId: t.id } as Binding },
      ]);
      const ids = listEntityIds(
        panel,
        rows.map((r) => r.map(({ kind, label }) => ({ kind, label }))),
      );
      rows.forEach((controls, i) =>
        controls.forEach((c, j) =>
          out.push({
            id: ids[i]![j]!,
            kind: c.kind,
            label: c.label,
            actions: ["click"],
            binding: c.binding,
          }),
        ),
      );
    } else if (this.view === "users") {
      const panel = this.contract.list_templates["users"]!.panel;
      const rows = this.users.map((u) => [
        {
          kind: "button",
          label: u.following ? "Unfollow" : "Follow",
          binding: (u.following
            ? { type: "unfollow", username: u.username }
            : { type: "follow", username: u.username }) as Binding,
        },
      ]);
      const ids = listEntityIds(
        panel,
        rows.map((r) => r.map(({ kind, label }) => ({ kind, label }))),
      );
      rows.forEach((controls, i) =>
        controls.forEach((c, j) =>
          out.push({
            id: ids[i]![j]!,
            kind: c.kind,
            label: c.label,
            actions: ["click"],
            binding: c.binding,
          }),
        ),
      );
    } else if (this.view === "alerts") {
      const panel = this.contract.list_templates["alerts"]!.panel;
      const rows = this.alerts.map((a) => [
        {
          kind: "alert",
          label: a.kind,
          binding: { type: "alert", kind: a.kind } as Binding,
        },
      ]);
      const ids = listEntityIds(
        panel,
        rows.map((r) => r.map(({ kind, label }) => ({ kind, label }))),
      );
      rows.forEach((controls, i) =>
        controls.forEach((c, j) =>
          out.push({
            id: ids[i]![j]!,
            kind: c.kind,
            label: c.label,
            actions: ["click"],
            binding: c.binding,
          }),
        ),
      );
    }
    return out;
  }

  // -- performing actions -----------------------------------------------------

  /**
   * Perform the action bound to a component. Completed actions are reported
   * to the tracker; actions whose server request failed show an error banner
   * and report nothing.
   */
  async performAction(id: string, kind: ActionKind, payload?: string): Promise<void> {
    const component = this.find(id);
    if (!component || !component.actions.includes(kind)) {
      throw new Error(`${id} (${kind}) is not available on ${this.view}`);
    }
    const before = this.view;
    this.lastError = null;
    let completed = true;
    try {
      await this.dispatch(component.binding, payload);
    } catch (e) {
      if (e instanceof RequestFailed) {
        this.lastError = `${e.code}: ${e.message}`;
        completed = false;
      } else {
        throw e;
      }
    }
    if (completed && this.reporter) {
      const action: { component: string; kind: ActionKind; payload?: string } = {
        component: id,
        kind,
      };
      if (kind === "text-input") action.payload = payload ?? "";
      this.reporter.report({
        session: this.sessionId,
        state_before: before,
        state_after: this.view,
        action,
      });
    }
  }

  private async dispatch(binding: Binding, payload?: string): Promise<void> {
    switch (binding.type) {
      case "field":
        this.buffers[binding.name] = payload ?? "";
        return;
      case "nav":
        return this.enter(binding.view);
      case "logout":
        if (this.token) await this.api.op("logout", { token: this.token });
        this.token = null;
        this.username = null;
        return this.enter("login");
      case "login": {
        const name = this.buffers["username"] ?? "";
        const resp = await this.api.login(name, this.buffers["password"] ?? "");
        this.token = resp.token;
        this.username = name;
        return this.enter("feed");
      }
      case "signup": {
        const name = this.buffers["username"] ?? "";
        const resp = await this.api.signup(name, this.buffers["password"] ?? "");
        this.token = resp.token;
        this.username = name;
        return this.enter("feed");
      }
      case "like":
        await this.api.op("like", { token: this.token, tweet_id: binding.tweetId });
        return this.refreshFeed();
      case "unlike":
        await this.api.op("unlike", { token: this.token, tweet_id: binding.tweetId });
        return this.refreshFeed();
      case "follow":
        await this.api.op("follow", { token: this.token, username: binding.username });
        return this.refreshUsers();
      case "unfollow":
        await this.api.op("unfollow", { token: this.token, username: binding.username });
        return this.refreshUsers();
      case "retweet":
        return this.enter("composer", { composeParent: binding.tweetId });
      case "who_liked":
        return this.enter("who_liked", { whoLiked: binding.tweetId });
      case "alert": {
        if (binding.kind === "liked") {
          const faults = this.contract.faults;
          const bugArmed =
            !!faults?.alert_nav_bug_enabled &&
            this.alertsSeen >= (faults?.alert_nav_bug_threshold ?? Infinity);
          if (bugArmed) return; // the seeded bug swallows the navigation
          return this.enter("feed");
        }
        return this.enter("users");
      }
      case "post": {
        const text = this.buffers["text"] ?? "";
        const media = this.buffers["media"] || undefined;
        const parent = this.pending.composeParent;
        if (parent === undefined) {
          await this.api.op("post_tweet", { token: this.token, text, media });
        } else {
          await this.api.op("retweet", {
            token: this.token,
            tweet_id: parent,
            text,
            media,
          });
        }
        return this.enter("feed");
      }
      case "cancel":
      case "back":
        return this.enter("feed");
    }
  }

  private async enter(
    view: View,
    pending: { composeParent?: number; whoLiked?: number } = {},
  ): Promise<void> {
    this.view = view;
    this.buffers = {};
    this.pending = pending;
    if (view === "feed") await this.refreshFeed();
    else if (view === "users") await this.refreshUsers();
    else if (view === "alerts") await this.refreshAlerts();
    else if (view === "who_liked") await this.refreshLikers();
  }

  private async refreshFeed(): Promise<void> {
    if (!this.token) return;
    const resp = await this.api.getFeed(this.token);
    this.feed = [...resp.tweets].sort((a, b) => a.id - b.id); // append order
  }

  private async refreshUsers(): Promise<void> {
    if (!this.token) return;
    this.users = (await this.api.listUsers(this.token)).users;
  }

  async refreshAlerts(): Promise<void> {
    if (!this.token) return;
    const resp = await this.api.getAlerts(this.token);
    this.alerts = resp.alerts;
    this.alertsSeen = Math.max(this.alertsSeen, this.alerts.length);
  }

  private async refreshLikers(): Promise<void> {
    if (!this.token || this.pending.whoLiked === undefined) return;
    this.likers = (await this.api.whoLiked(this.token, this.pending.whoLiked)).users;
  }
}
