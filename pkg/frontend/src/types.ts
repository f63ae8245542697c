export type View =
  | "login"
  | "signup"
  | "feed"
  | "users"
  | "alerts"
  | "composer"
  | "who_liked";

export type ActionKind = "click" | "text-input";

export interface ContractNode {
  kind: string;
  label?: string;
  actions?: ActionKind[];
  children?: ContractNode[];
}

export interface ListTemplate {
  panel: string;
  order: string;
  per_entity: { kind: string; labels: string[] }[];
}

export interface Contract {
  format: string;
  version: number;
  views: Record<View, ContractNode>;
  list_templates: Record<string, ListTemplate>;
  enablement: Record<string, string>;
  navigation: Record<string, Record<string, string>>;
  faults?: {
    alert_nav_bug_enabled: boolean;
    alert_nav_bug_threshold: number;
  };
}

export interface TweetView {
  id: number;
  author: string;
  text: string;
  media: string | null;
  parent_id: number | null;
  likes: number;
  liked_by_me: boolean;
}

export interface UserView {
  username: string;
  following: boolean;
}

export interface AlertView {
  kind: "liked" | "followed";
  actor: string;
  tweet_id: number | null;
  ts: number;
}

/** An actionable control computed for the current view. */
export interface UiComponent {
  id: string;
  kind: string;
  label: string | null;
  actions: ActionKind[];
  /** what performing it means; mirrors the published navigation contract */
  binding: Binding;
}

export type Binding =
  | { type: "field"; name: string }
  | { type: "nav"; view: View }
  | { type: "logout" }
  | { type: "login" }
  | { type: "signup" }
  | { type: "like"; tweetId: number }
  | { type: "unlike"; tweetId: number }
  | { type: "retweet"; tweetId: number }
  | { type: "who_liked"; tweetId: number }
  | { type: "follow"; username: string }
  | { type: "unfollow"; username: string }
  | { type: "alert"; kind: "liked" | "followed" }
  | { type: "post" }
  | { type: "cancel" }
  | { type: "back" };

export interface ReportedAction {
  session: string;
  state_before: View;
  state_after: View;
  action: { component: string; kind: ActionKind; payload?: string };
}

export interface ApiError {
  ok: false;
  code: string;
  message: string;
}
