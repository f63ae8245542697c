"""In-memory social-platform server: the system under test.

Accounts, a follow graph, tweets/retweets, likes, and pollable alerts,
plus two configurable seeded faults:

* a probabilistic internal error on ``follow`` requests, and
* a client-side navigation bug armed by the alert threshold (consumed by
  the client state machine, carried here so one object configures a run).

State lives only in memory and is owned by a single logical writer;
:class:`InProcessTarget` serializes concurrent callers with a lock. All
randomness comes from the injected ``random.Random``.
"""

from __future__ import annotations

import hashlib
import random
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

from .clock import Clock, VirtualClock


class AlertKind(str, Enum):
    LIKED = "liked"
    FOLLOWED = "followed"


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    actor: str
    subject: int | None  # tweet id for liked alerts
    ts: int

    def __post_init__(self):
        if self.kind is AlertKind.LIKED and self.subject is None:
            raise ValueError("liked alerts reference a tweet")
        if self.kind is AlertKind.FOLLOWED and self.subject is not None:
            raise ValueError("followed alerts carry no tweet")


@dataclass
class FaultConfig:
    """Seeded defects the target can be armed with."""

    follow_error_probability: float = 0.2
    alert_nav_bug_enabled: bool = False
    alert_nav_bug_threshold: int = 10

    def __post_init__(self):
        if not 0.0 <= self.follow_error_probability <= 1.0:
            raise ValueError("follow_error_probability must be in [0, 1]")
        if self.alert_nav_bug_threshold < 1:
            raise ValueError("alert_nav_bug_threshold must be positive")

    @classmethod
    def none(cls) -> "FaultConfig":
        return cls(follow_error_probability=0.0, alert_nav_bug_enabled=False)


@dataclass(frozen=True)
class Tweet:
    id: int
    author: str
    text: str
    media: str | None
    parent_id: int | None  # set for retweets
    created_ts: int


@dataclass
class UserRecord:
    password_hash: str
    created_ts: int


@dataclass
class ServerState:
    users: dict[str, UserRecord] = field(default_factory=dict)
    follows: set[tuple[str, str]] = field(default_factory=set)
    tweets: dict[int, Tweet] = field(default_factory=dict)
    likes: dict[tuple[str, int], int] = field(default_factory=dict)  # -> like ts
    alerts: dict[str, list[Alert]] = field(default_factory=dict)
    tokens: dict[str, str] = field(default_factory=dict)
    next_tweet_id: int = 1
    next_token: int = 1


def _hash_password(password: str) -> str:
    return hashlib.sha256(password.encode()).hexdigest()


def fault_follow(rng: random.Random, p: float) -> bool:
    """Draw once; True means the injected follow fault fires."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability must be in [0, 1]")
    return rng.random() < p


def generate_alert(
    state: ServerState,
    kind: AlertKind,
    actor: str,
    *,
    tweet: Tweet | None = None,
    followee: str | None = None,
    ts: int = 0,
) -> ServerState:
    """Enqueue one alert for the affected user; self-events produce none."""
    if kind is AlertKind.LIKED:
        assert tweet is not None
        if tweet.author == actor:
            return state
        alert = Alert(kind=kind, actor=actor, subject=tweet.id, ts=ts)
        state.alerts.setdefault(tweet.author, []).append(alert)
    else:
        assert followee is not None
        if followee == actor:
            return state
        alert = Alert(kind=kind, actor=actor, subject=None, ts=ts)
        state.alerts.setdefault(followee, []).append(alert)
    return state


def _err(code: str, message: str) -> dict:
    return {"ok": False, "code": code, "message": message}


def _ok(**payload: Any) -> dict:
    return {"ok": True, **payload}


def _tweet_view(state: ServerState, tweet: Tweet, viewer: str) -> dict:
    return {
        "id": tweet.id,
        "author": tweet.author,
        "text": tweet.text,
        "media": tweet.media,
        "parent_id": tweet.parent_id,
        "likes": sum(1 for (_, tid) in state.likes if tid == tweet.id),
        "liked_by_me": (viewer, tweet.id) in state.likes,
    }


class _Reject(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.response = _err(code, message)


def _require(state: ServerState, request: dict, *fields: str) -> list:
    values = []
    for name in fields:
        if name not in request:
            raise _Reject("bad_request", f"missing field {name!r}")
        values.append(request[name])
    return values


def _auth(state: ServerState, request: dict) -> str:
    (token,) = _require(state, request, "token")
    username = state.tokens.get(token)
    if username is None:
        raise _Reject("auth", "unknown or expired token")
    return username


def handle_request(
    state: ServerState,
    request: dict,
    rng: random.Random,
    faults: FaultConfig,
    *,
    now_ms: int = 0,
) -> tuple[ServerState, dict]:
    """Apply one request to the state; returns (state, response).

    Deterministic in (state, request, rng state, faults). The passed state
    object is mutated in place and returned; on any error response it is
    left unchanged.
    """
    op = request.get("op")
    handler = _HANDLERS.get(op)
    if handler is None:
        return state, _err("bad_request", f"unknown operation {op!r}")
    try:
        return state, handler(state, request, rng, faults, now_ms)
    except _Reject as e:
        return state, e.response


def _handle_signup(state, request, rng, faults, now_ms):
    username, password = _require(state, request, "username", "password")
    if not username or not isinstance(username, str):
        raise _Reject("validation", "username must be a non-empty string")
    if not isinstance(password, str) or not password:
        raise _Reject("validation", "password must be a non-empty string")
    if username in state.users:
        raise _Reject("conflict", f"username {username!r} is taken")
    state.users[username] = UserRecord(_hash_password(password), now_ms)
    token = f"tok-{state.next_token}"
    state.next_token += 1
    state.tokens[token] = username
    return _ok(token=token)


def _handle_login(state, request, rng, faults, now_ms):
    username, password = _require(state, request, "username", "password")
    user = state.users.get(username)
    if user is None or user.password_hash != _hash_password(password or ""):
        raise _Reject("auth", "invalid credentials")
    token = f"tok-{state.next_token}"
    state.next_token += 1
    state.tokens[token] = username
    return _ok(token=token)


def _handle_logout(state, request, rng, faults, now_ms):
    (token,) = _require(state, request, "token")
    if token not in state.tokens:
        raise _Reject("auth", "unknown or expired token")
    del state.tokens[token]
    return _ok()


def _handle_list_users(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    users = [
        {"username": name, "following": (me, name) in state.follows}
        for name in state.users
        if name != me
    ]
    return _ok(users=users)


def _handle_follow(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    if fault_follow(rng, faults.follow_error_probability):
        raise _Reject("internal", "internal error while processing follow")
    (other,) = _require(state, request, "username")
    if other == me:
        raise _Reject("validation", "cannot follow yourself")
    if other not in state.users:
        raise _Reject("validation", f"no such user {other!r}")
    if (me, other) in state.follows:
        raise _Reject("validation", f"already following {other!r}")
    state.follows.add((me, other))
    generate_alert(state, AlertKind.FOLLOWED, me, followee=other, ts=now_ms)
    return _ok()


def _handle_unfollow(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    (other,) = _require(state, request, "username")
    if (me, other) not in state.follows:
        raise _Reject("validation", f"not following {other!r}")
    state.follows.remove((me, other))
    return _ok()


def _handle_post_tweet(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    (text,) = _require(state, request, "text")
    if not isinstance(text, str) or not text:
        raise _Reject("validation", "tweet text must be a non-empty string")
    media = request.get("media") or None
    tweet = Tweet(state.next_tweet_id, me, text, media, None, now_ms)
    state.next_tweet_id += 1
    state.tweets[tweet.id] = tweet
    return _ok(tweet_id=tweet.id)


def _handle_retweet(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    tweet_id, text = _require(state, request, "tweet_id", "text")
    parent = state.tweets.get(tweet_id)
    if parent is None:
        raise _Reject("validation", f"no such tweet {tweet_id!r}")
    if not isinstance(text, str) or not text:
        raise _Reject("validation", "retweet text must be a non-empty string")
    media = request.get("media") or None
    tweet = Tweet(state.next_tweet_id, me, text, media, parent.id, now_ms)
    state.next_tweet_id += 1
    state.tweets[tweet.id] = tweet
    return _ok(tweet_id=tweet.id)


def _handle_like(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    (tweet_id,) = _require(state, request, "tweet_id")
    tweet = state.tweets.get(tweet_id)
    if tweet is None:
        raise _Reject("validation", f"no such tweet {tweet_id!r}")
    if (me, tweet_id) in state.likes:
        raise _Reject("validation", "already liked")
    state.likes[(me, tweet_id)] = now_ms
    generate_alert(state, AlertKind.LIKED, me, tweet=tweet, ts=now_ms)
    likes = sum(1 for (_, tid) in state.likes if tid == tweet_id)
    return _ok(likes=likes)


def _handle_unlike(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    (tweet_id,) = _require(state, request, "tweet_id")
    if (me, tweet_id) not in state.likes:
        raise _Reject("validation", "not liked")
    del state.likes[(me, tweet_id)]
    likes = sum(1 for (_, tid) in state.likes if tid == tweet_id)
    return _ok(likes=likes)


def _handle_get_feed(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    visible = {me} | {b for (a, b) in state.follows if a == me}
    tweets = [t for t in state.tweets.values() if t.author in visible]
    tweets.sort(key=lambda t: t.id, reverse=True)
    return _ok(tweets=[_tweet_view(state, t, me) for t in tweets])


def _handle_get_my_tweets(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    tweets = sorted(
        (t for t in state.tweets.values() if t.author == me),
        key=lambda t: t.id,
        reverse=True,
    )
    return _ok(tweets=[_tweet_view(state, t, me) for t in tweets])


def _handle_get_retweets_of(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    (tweet_id,) = _require(state, request, "tweet_id")
    if tweet_id not in state.tweets:
        raise _Reject("validation", f"no such tweet {tweet_id!r}")
    tweets = sorted(
        (t for t in state.tweets.values() if t.parent_id == tweet_id),
        key=lambda t: t.id,
        reverse=True,
    )
    return _ok(tweets=[_tweet_view(state, t, me) for t in tweets])


def _handle_who_liked(state, request, rng, faults, now_ms):
    _auth(state, request)
    (tweet_id,) = _require(state, request, "tweet_id")
    if tweet_id not in state.tweets:
        raise _Reject("validation", f"no such tweet {tweet_id!r}")
    users = [u for (u, tid) in state.likes if tid == tweet_id]
    return _ok(users=users)


def _handle_get_alerts(state, request, rng, faults, now_ms):
    me = _auth(state, request)
    alerts = [
        {"kind": a.kind.value, "actor": a.actor, "tweet_id": a.subject, "ts": a.ts}
        for a in state.alerts.get(me, [])
    ]
    return _ok(alerts=alerts)


_HANDLERS: dict[str, Callable] = {
    "signup": _handle_signup,
    "login": _handle_login,
    "logout": _handle_logout,
    "list_users": _handle_list_users,
    "follow": _handle_follow,
    "unfollow": _handle_unfollow,
    "post_tweet": _handle_post_tweet,
    "retweet": _handle_retweet,
    "like": _handle_like,
    "unlike": _handle_unlike,
    "get_feed": _handle_get_feed,
    "get_my_tweets": _handle_get_my_tweets,
    "get_retweets_of": _handle_get_retweets_of,
    "who_liked": _handle_who_liked,
    "get_alerts": _handle_get_alerts,
}

OPERATIONS = tuple(_HANDLERS)


class InProcessTarget:
    """A fresh target instance: state + PRNG + faults behind one lock.

    Request handling is serialized, so any number of concurrent sessions
    (threads or HTTP handlers) can share an instance.
    """

    def __init__(
        self,
        seed: int = 0,
        faults: FaultConfig | None = None,
        clock: Clock | None = None,
    ):
        self.state = ServerState()
        self.faults = faults if faults is not None else FaultConfig()
        self.clock = clock if clock is not None else VirtualClock()
        self.rng = random.Random(seed)
        self._lock = threading.Lock()

    def request(self, request: dict) -> dict:
        with self._lock:
            _, response = handle_request(
                self.state,
                request,
                self.rng,
                self.faults,
                now_ms=self.clock.now_ms(),
            )
            return response
