"""The client state machine: views, component trees, actions, navigation.

Both clients (the browser UI and the headless agent client) drive the
platform exclusively through this model, so instrumenting it instruments
every path. The application state visible to behavior models is just the
name of the current view.

View catalog (all trees rooted at ``window[main]#0``; the shared nav panel
``panel[nav]#0`` with buttons Feed/Users/Alerts/Compose/Log out appears on
every authenticated view):

===========  ==================================================================
view         components besides nav
===========  ==================================================================
login        field[username], field[password] (text-input);
             button[Log in], button[Sign up] (click)
signup       field[username], field[password]; button[Create account],
             button[Log in]
feed         panel[tweets]#0 with, per visible tweet, button[Like] or
             button[Unlike], button[Retweet], button[Who liked]
users        panel[users]#0 with button[Follow] or button[Unfollow] per
             other user
alerts       panel[alerts]#0 with one clickable alert[liked] / alert[followed]
             row per alert delivered to the session
composer     field[text], field[media]; button[Post] (only once text has been
             typed), button[Cancel]
who_liked    panel[likers]#0 with one label row per liker; button[Back]
===========  ==================================================================

Navigation table (canonical behavior):

* successful login or signup -> feed; failed attempt stays put
* nav buttons -> their view; Log out -> login
* clicking an alert[liked] row -> feed; alert[followed] -> users
* button[Retweet] -> composer (pre-targeted at that tweet)
* button[Who liked] -> who_liked for that tweet
* composer Post -> feed on success (stays on validation failure); Cancel -> feed
* who_liked Back -> feed
* Like/Unlike and Follow/Unfollow stay on their view with data refreshed
* typing into a field stays on the view and buffers the text

Seeded navigation bug: when ``alert_nav_bug_enabled`` and the session has
received at least ``alert_nav_bug_threshold`` alerts, clicking an
alert[liked] row stays on the alerts view instead of going to the feed.
Below the threshold behavior is identical to canonical.

List components are numbered in append order within their (kind, label)
class: entities are ranked by creation (tweet id, registration, alert
delivery), so adding an entity never shifts existing indices, while label
flips (Like -> Unlike) renumber only the affected classes. Ids are
recomputed on every structural change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Protocol

from .errors import UnavailableActionError
from .target import FaultConfig
from .traces import ActionKind, ComponentId, Segment, encode_component_id

VIEWS = ("login", "signup", "users", "feed", "alerts", "composer", "who_liked")
ANON_VIEWS = ("login", "signup")

ViewId = str


class Target(Protocol):
    def request(self, request: dict) -> dict: ...


@dataclass(frozen=True)
class Widget:
    kind: str
    label: str | None = None
    action_kinds: tuple[ActionKind, ...] = ()
    binding: tuple | None = None
    children: tuple["Widget", ...] = ()


@dataclass(frozen=True)
class UiAction:
    component: ComponentId
    kind: ActionKind
    payload: str | None = None

    @property
    def component_text(self) -> str:
        return encode_component_id(self.component)

    def key(self) -> tuple[str, str]:
        return (self.component_text, self.kind.value)


def _window(*children: Widget) -> Widget:
    return Widget(kind="window", label="main", children=children)


def _button(label: str, binding: tuple) -> Widget:
    return Widget(kind="button", label=label, action_kinds=(ActionKind.CLICK,),
                  binding=binding)


def _field(label: str) -> Widget:
    return Widget(kind="field", label=label,
                  action_kinds=(ActionKind.TEXT_INPUT,), binding=("field", label))


def _nav_panel() -> Widget:
    return Widget(
        kind="panel",
        label="nav",
        children=(
            _button("Feed", ("nav", "feed")),
            _button("Users", ("nav", "users")),
            _button("Alerts", ("nav", "alerts")),
            _button("Compose", ("nav", "composer")),
            _button("Log out", ("logout",)),
        ),
    )


def iter_components(root: Widget) -> Iterator[tuple[ComponentId, Widget]]:
    """Yield (id, widget) pairs with append-order sibling numbering."""

    def walk(widget: Widget, prefix: ComponentId):
        counters: dict[tuple[str, str | None], int] = {}
        for child in widget.children:
            klass = (child.kind, child.label)
            index = counters.get(klass, 0)
            counters[klass] = index + 1
            cid = prefix + (Segment(child.kind, child.label, index),)
            yield cid, child
            yield from walk(child, cid)

    root_id: ComponentId = (Segment(root.kind, root.label, 0),)
    yield root_id, root
    yield from walk(root, root_id)


@dataclass
class ViewState:
    """Snapshot of what a session currently shows; compared bit-for-bit in
    transparency tests."""

    view: ViewId
    tree: Widget
    pending: dict
    last_error: dict | None


class ClientSession:
    """One user's client, headless. Drives the target through the documented
    wire operations and exposes exactly the actions a rendered UI would."""

    def __init__(self, target: Target, faults: FaultConfig | None = None,
                 session_id: str = "session"):
        self.target = target
        self.faults = faults if faults is not None else FaultConfig()
        self.session_id = session_id
        self.view: ViewId = "login"
        self.token: str | None = None
        self.username: str | None = None
        self.last_error: dict | None = None
        self.alert_count_seen = 0
        self._buffers: dict[str, str] = {}
        self._pending: dict = {}
        self._alerts: list[dict] = []
        self._alert_watermarks: dict[str, int] = {}
        self._feed: list[dict] = []
        self._users: list[dict] = []
        self._likers: list[str] = []
        self._tree: Widget = _window()
        self._components: dict[str, tuple[ComponentId, Widget]] = {}
        self._rebuild()

    # -- observation ---------------------------------------------------------

    def observe_state(self) -> ViewId:
        return self.view

    def snapshot(self) -> ViewState:
        return ViewState(
            view=self.view,
            tree=self._tree,
            pending=dict(self._pending),
            last_error=self.last_error,
        )

    def available_actions(self) -> list[UiAction]:
        actions = []
        for cid, widget in self._components.values():
            for kind in widget.action_kinds:
                actions.append(UiAction(component=cid, kind=kind))
        return actions

    def find_action(self, component_text: str) -> tuple[ComponentId, Widget] | None:
        return self._components.get(component_text)

    # -- the single entry point for user actions ------------------------------

    def perform(self, action: UiAction) -> ViewState:
        entry = self._components.get(encode_component_id(action.component))
        if entry is None or action.kind not in entry[1].action_kinds:
            raise UnavailableActionError(
                f"{encode_component_id(action.component)} ({action.kind.value})"
                f" is not available on view {self.view!r}"
            )
        self.last_error = None
        widget = entry[1]
        self._dispatch(widget.binding, action.payload)
        return self.snapshot()

    def poll_alerts(self) -> int:
        """Fetch alerts once; returns how many new ones were delivered."""
        if self.token is None or self.username is None:
            return 0
        resp = self.target.request({"op": "get_alerts", "token": self.token})
        if not resp.get("ok"):
            return 0
        alerts = resp["alerts"]
        watermark = self._alert_watermarks.get(self.username, 0)
        fresh = alerts[watermark:]
        self._alert_watermarks[self.username] = len(alerts)
        self._alerts = alerts
        self.alert_count_seen += len(fresh)
        if fresh and self.view == "alerts":
            self._rebuild()
        return len(fresh)

    # -- dispatch -------------------------------------------------------------

    def _dispatch(self, binding: tuple, payload: str | None) -> None:
        match binding:
            case ("field", name):
                self._buffers[name] = payload or ""
                self._rebuild()  # text presence can enable/disable controls
            case ("nav", view):
                self._enter(view)
            case ("logout",):
                if self.token is not None:
                    self.target.request({"op": "logout", "token": self.token})
                self.token = None
                self.username = None
                self._alerts = []  # alert_count_seen stays: it is session-scoped
                self._enter("login")
            case ("login",):
                self._submit_auth("login")
            case ("signup",):
                self._submit_auth("signup")
            case ("like", tweet_id):
                self._toggle_like("like", tweet_id)
            case ("unlike", tweet_id):
                self._toggle_like("unlike", tweet_id)
            case ("follow", username):
                self._toggle_follow("follow", username)
            case ("unfollow", username):
                self._toggle_follow("unfollow", username)
            case ("retweet", tweet_id):
                self._enter("composer", pending={"compose_parent": tweet_id})
            case ("who_liked", tweet_id):
                self._enter("who_liked", pending={"who_liked": tweet_id})
            case ("alert", kind, _index):
                self._click_alert(kind)
            case ("post",):
                self._submit_post()
            case ("cancel",) | ("back",):
                self._enter("feed")
            case _:
                raise AssertionError(f"unhandled binding {binding!r}")

    def _submit_auth(self, op: str) -> None:
        username = self._buffers.get("username", "")
        password = self._buffers.get("password", "")
        resp = self.target.request(
            {"op": op, "username": username, "password": password}
        )
        if resp.get("ok"):
            self.token = resp["token"]
            self.username = username
            self._enter("feed")
        else:
            self._record_error(resp)

    def _toggle_like(self, op: str, tweet_id: int) -> None:
        resp = self.target.request(
            {"op": op, "token": self.token, "tweet_id": tweet_id}
        )
        if resp.get("ok"):
            self._fetch_feed()
            self._rebuild()
        else:
            self._record_error(resp)

    def _toggle_follow(self, op: str, username: str) -> None:
        resp = self.target.request(
            {"op": op, "token": self.token, "username": username}
        )
        if resp.get("ok"):
            self._fetch_users()
            self._rebuild()
        else:
            self._record_error(resp)

    def _click_alert(self, kind: str) -> None:
        if kind == "liked":
            bug_armed = (
                self.faults.alert_nav_bug_enabled
                and self.alert_count_seen >= self.faults.alert_nav_bug_threshold
            )
            if bug_armed:
                return  # the seeded bug: navigation silently dropped
            self._enter("feed")
        else:
            self._enter("users")

    def _submit_post(self) -> None:
        text = self._buffers.get("text", "")
        media = self._buffers.get("media") or None
        parent = self._pending.get("compose_parent")
        if parent is None:
            request = {"op": "post_tweet", "token": self.token, "text": text}
        else:
            request = {
                "op": "retweet",
                "token": self.token,
                "tweet_id": parent,
                "text": text,
            }
        if media is not None:
            request["media"] = media
        resp = self.target.request(request)
        if resp.get("ok"):
            self._enter("feed")
        else:
            self._record_error(resp)

    def _record_error(self, resp: dict) -> None:
        self.last_error = {
            "code": resp.get("code", "unknown"),
            "message": resp.get("message", ""),
        }

    # -- view entry and data fetching -----------------------------------------

    def _enter(self, view: ViewId, pending: dict | None = None) -> None:
        if view not in VIEWS:
            raise AssertionError(f"unknown view {view!r}")
        if self.token is None and view not in ANON_VIEWS:
            raise AssertionError(f"view {view!r} requires authentication")
        self.view = view
        self._buffers = {}
        self._pending = pending or {}
        if view == "feed":
            self._fetch_feed()
        elif view == "users":
            self._fetch_users()
        elif view == "alerts":
            self.poll_alerts()
        elif view == "who_liked":
            self._fetch_likers()
        self._rebuild()

    def _fetch_feed(self) -> None:
        resp = self.target.request({"op": "get_feed", "token": self.token})
        self._feed = sorted(resp["tweets"], key=lambda t: t["id"]) if resp.get("ok") else []

    def _fetch_users(self) -> None:
        resp = self.target.request({"op": "list_users", "token": self.token})
        self._users = resp["users"] if resp.get("ok") else []

    def _fetch_likers(self) -> None:
        tweet_id = self._pending.get("who_liked")
        resp = self.target.request(
            {"op": "who_liked", "token": self.token, "tweet_id": tweet_id}
        )
        self._likers = resp["users"] if resp.get("ok") else []

    # -- widget trees ----------------------------------------------------------

    def _rebuild(self) -> None:
        builder = getattr(self, f"_tree_{self.view}")
        self._tree = builder()
        self._components = {
            encode_component_id(cid): (cid, widget)
            for cid, widget in iter_components(self._tree)
            if widget.action_kinds
        }

    def _tree_login(self) -> Widget:
        return _window(
            _field("username"),
            _field("password"),
            _button("Log in", ("login",)),
            _button("Sign up", ("nav", "signup")),
        )

    def _tree_signup(self) -> Widget:
        return _window(
            _field("username"),
            _field("password"),
            _button("Create account", ("signup",)),
            _button("Log in", ("nav", "login")),
        )

    def _tree_feed(self) -> Widget:
        rows = []
        for tweet in self._feed:  # already in id (append) order
            like_label = "Unlike" if tweet["liked_by_me"] else "Like"
            like_op = "unlike" if tweet["liked_by_me"] else "like"
            rows.append(_button(like_label, (like_op, tweet["id"])))
            rows.append(_button("Retweet", ("retweet", tweet["id"])))
            rows.append(_button("Who liked", ("who_liked", tweet["id"])))
        return _window(
            _nav_panel(),
            Widget(kind="panel", label="tweets", children=tuple(rows)),
        )

    def _tree_users(self) -> Widget:
        rows = []
        for user in self._users:  # registration order from the server
            label = "Unfollow" if user["following"] else "Follow"
            op = "unfollow" if user["following"] else "follow"
            rows.append(_button(label, (op, user["username"])))
        return _window(
            _nav_panel(),
            Widget(kind="panel", label="users", children=tuple(rows)),
        )

    def _tree_alerts(self) -> Widget:
        rows = tuple(
            Widget(
                kind="alert",
                label=alert["kind"],
                action_kinds=(ActionKind.CLICK,),
                binding=("alert", alert["kind"], i),
            )
            for i, alert in enumerate(self._alerts)
        )
        return _window(
            _nav_panel(),
            Widget(kind="panel", label="alerts", children=rows),
        )

    def _tree_composer(self) -> Widget:
        children = [
            _nav_panel(),
            _field("text"),
            _field("media"),
        ]
        if self._buffers.get("text"):  # Post stays disabled until there is text
            children.append(_button("Post", ("post",)))
        children.append(_button("Cancel", ("cancel",)))
        return _window(*children)

    def _tree_who_liked(self) -> Widget:
        rows = tuple(Widget(kind="label", label=name) for name in self._likers)
        return _window(
            _nav_panel(),
            Widget(kind="panel", label="likers", children=rows),
            _button("Back", ("back",)),
        )


def available_actions(session: ClientSession) -> list[UiAction]:
    return session.available_actions()


def perform(session: ClientSession, action: UiAction) -> ViewState:
    return session.perform(action)


def observe_state(session: ClientSession) -> ViewId:
    return session.observe_state()


def view_catalog() -> dict:
    """Machine-readable view/navigation contract consumed by the web UI."""
    session = ClientSession.__new__(ClientSession)  # only for tree templates
    session._feed = []
    session._users = []
    session._alerts = []
    session._likers = []
    session._buffers = {"text": "x"}  # show the enabled composer

    def describe(widget: Widget) -> dict:
        node: dict[str, Any] = {"kind": widget.kind}
        if widget.label is not None:
            node["label"] = widget.label
        if widget.action_kinds:
            node["actions"] = [k.value for k in widget.action_kinds]
        if widget.children:
            node["children"] = [describe(c) for c in widget.children]
        return node

    views = {}
    for view in VIEWS:
        tree = getattr(session, f"_tree_{view}")()
        views[view] = describe(tree)
    return {
        "format": "synthuser-ui-contract",
        "version": 1,
        "views": views,
        "list_templates": {
            "feed": {
                "panel": "window[main]#0/panel[tweets]#0",
                "order": "tweet id ascending",
                "per_entity": [
                    {"kind": "button", "labels": ["Like", "Unlike"]},
                    {"kind": "button", "labels": ["Retweet"]},
                    {"kind": "button", "labels": ["Who liked"]},
                ],
            },
            "users": {
                "panel": "window[main]#0/panel[users]#0",
                "order": "registration order",
                "per_entity": [
                    {"kind": "button", "labels": ["Follow", "Unfollow"]}
                ],
            },
            "alerts": {
                "panel": "window[main]#0/panel[alerts]#0",
                "order": "delivery order",
                "per_entity": [
                    {"kind": "alert", "labels": ["liked", "followed"]}
                ],
            },
            "who_liked": {
                "panel": "window[main]#0/panel[likers]#0",
                "order": "like order",
                "per_entity": [{"kind": "label", "labels": []}],
            },
        },
        "enablement": {
            "composer": "button[Post] is present only while field[text] holds text"
        },
        "navigation": {
            "login": {"Log in": "feed (on success)", "Sign up": "signup"},
            "signup": {"Create account": "feed (on success)", "Log in": "login"},
            "nav": {
                "Feed": "feed",
                "Users": "users",
                "Alerts": "alerts",
                "Compose": "composer",
                "Log out": "login",
            },
            "feed": {"Retweet": "composer", "Who liked": "who_liked",
                     "Like": "feed", "Unlike": "feed"},
            "alerts": {"alert[liked]": "feed", "alert[followed]": "users"},
            "composer": {"Post": "feed (on success)", "Cancel": "feed"},
            "who_liked": {"Back": "feed"},
        },
    }


def session_at_view(
    target: Target,
    faults: FaultConfig | None,
    view: ViewId,
    token: str | None = None,
    context: dict | None = None,
) -> ClientSession:
    """Materialize a session showing ``view`` with current server data.

    Backs the stateless active-ids debug endpoint: the browser client owns
    its view state, so the endpoint reconstructs an equivalent headless
    session on demand to project the actionable component set.
    """
    session = ClientSession(target, faults)
    if view in ANON_VIEWS:
        session.view = view
        session._rebuild()
        return session
    if token is None:
        raise UnavailableActionError(f"view {view!r} requires a token")
    session.token = token
    resp = target.request({"op": "get_alerts", "token": token})
    if not resp.get("ok"):
        raise UnavailableActionError(f"invalid token for view {view!r}")
    session.username = "(external)"
    session._alerts = resp["alerts"]
    session.alert_count_seen = len(resp["alerts"])
    session._alert_watermarks["(external)"] = len(resp["alerts"])
    pending = dict(context or {})
    session._buffers = dict(pending.pop("buffers", {}))
    session.view = view
    session._pending = pending
    if view == "feed":
        session._fetch_feed()
    elif view == "users":
        session._fetch_users()
    elif view == "who_liked":
        session._fetch_likers()
    session._rebuild()
    return session
