from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthuser.errors import UnavailableActionError
from synthuser.target import FaultConfig, InProcessTarget
from synthuser.traces import ActionKind, encode_component_id
from synthuser.views import VIEWS, ClientSession, UiAction, view_catalog

NO_FAULTS = FaultConfig.none()


def ids(session):
    return sorted(a.component_text for a in session.available_actions())


def action(session, component_text, kind=ActionKind.CLICK, payload=None):
    entry = session.find_action(component_text)
    assert entry is not None, f"{component_text} not active; have {ids(session)}"
    return UiAction(component=entry[0], kind=kind, payload=payload)


def do(session, component_text, kind=ActionKind.CLICK, payload=None):
    return session.perform(action(session, component_text, kind, payload))


def login_fresh(target, name, *, faults=NO_FAULTS):
    session = ClientSession(target, faults)
    do(session, "window[main]#0/button[Sign up]#0")
    do(session, "window[main]#0/field[username]#0", ActionKind.TEXT_INPUT, name)
    do(session, "window[main]#0/field[password]#0", ActionKind.TEXT_INPUT, "pw")
    do(session, "window[main]#0/button[Create account]#0")
    assert session.view == "feed"
    return session


@pytest.fixture
def target():
    return InProcessTarget(seed=0, faults=NO_FAULTS)


def test_login_view_catalog(target):
    session = ClientSession(target, NO_FAULTS)
    assert session.observe_state() == "login"
    assert ids(session) == [
        "window[main]#0/button[Log in]#0",
        "window[main]#0/button[Sign up]#0",
        "window[main]#0/field[password]#0",
        "window[main]#0/field[username]#0",
    ]


def test_feed_like_buttons_numbered_per_class(target):
    session = login_fresh(target, "u1")
    for text in ("a", "b", "c"):
        do(session, "window[main]#0/panel[nav]#0/button[Compose]#0")
        do(session, "window[main]#0/field[text]#0", ActionKind.TEXT_INPUT, text)
        do(session, "window[main]#0/button[Post]#0")
    like_ids = [i for i in ids(session) if "button[Like]" in i]
    assert like_ids == [
        "window[main]#0/panel[tweets]#0/button[Like]#0",
        "window[main]#0/panel[tweets]#0/button[Like]#1",
        "window[main]#0/panel[tweets]#0/button[Like]#2",
    ]


def test_alerts_view_without_alerts_has_nav_only(target):
    session = login_fresh(target, "u1")
    do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
    assert session.view == "alerts"
    assert all("panel[nav]" in i for i in ids(session))


def test_observe_state_is_a_pure_projection(target):
    session = login_fresh(target, "u1")
    before = session.snapshot()
    assert session.observe_state() == "feed"
    after = session.snapshot()
    assert before == after


def test_unauthenticated_restricted_to_login_signup(target):
    session = ClientSession(target, NO_FAULTS)
    do(session, "window[main]#0/button[Sign up]#0")
    assert session.view == "signup"
    do(session, "window[main]#0/button[Log in]#0")
    assert session.view == "login"


def test_failed_login_stays_with_error(target):
    session = ClientSession(target, NO_FAULTS)
    do(session, "window[main]#0/field[username]#0", ActionKind.TEXT_INPUT, "ghost")
    do(session, "window[main]#0/field[password]#0", ActionKind.TEXT_INPUT, "x")
    do(session, "window[main]#0/button[Log in]#0")
    assert session.view == "login"
    assert session.last_error and session.last_error["code"] == "auth"


def test_like_stays_on_feed_and_updates_counter(target):
    session = login_fresh(target, "u1")
    do(session, "window[main]#0/panel[nav]#0/button[Compose]#0")
    do(session, "window[main]#0/field[text]#0", ActionKind.TEXT_INPUT, "hello")
    do(session, "window[main]#0/button[Post]#0")
    do(session, "window[main]#0/panel[tweets]#0/button[Like]#0")
    assert session.view == "feed"
    # label flipped to Unlike: the Like class is renumbered
    assert "window[main]#0/panel[tweets]#0/button[Unlike]#0" in ids(session)
    assert not any("button[Like]" in i for i in ids(session))
    assert target.state.likes


def test_unavailable_action_rejected(target):
    session = login_fresh(target, "u1")
    stale = action(session, "window[main]#0/panel[nav]#0/button[Users]#0")
    session.perform(stale)  # navigates to users
    with pytest.raises(UnavailableActionError):
        # feed-only component used from users view
        session.perform(
            UiAction(component=stale.component, kind=ActionKind.TEXT_INPUT)
        )


def test_follow_unfollow_labels_flip(target):
    session = login_fresh(target, "u1")
    other = ClientSession(target, NO_FAULTS)
    login_fresh(target, "u2")
    do(session, "window[main]#0/panel[nav]#0/button[Users]#0")
    do(session, "window[main]#0/panel[users]#0/button[Follow]#0")
    assert session.view == "users"
    assert "window[main]#0/panel[users]#0/button[Unfollow]#0" in ids(session)
    do(session, "window[main]#0/panel[users]#0/button[Unfollow]#0")
    assert "window[main]#0/panel[users]#0/button[Follow]#0" in ids(session)


def test_retweet_goes_through_composer(target):
    session = login_fresh(target, "u1")
    do(session, "window[main]#0/panel[nav]#0/button[Compose]#0")
    do(session, "window[main]#0/field[text]#0", ActionKind.TEXT_INPUT, "base")
    do(session, "window[main]#0/button[Post]#0")
    do(session, "window[main]#0/panel[tweets]#0/button[Retweet]#0")
    assert session.view == "composer"
    do(session, "window[main]#0/field[text]#0", ActionKind.TEXT_INPUT, "echo")
    do(session, "window[main]#0/button[Post]#0")
    assert session.view == "feed"
    parents = [t.parent_id for t in target.state.tweets.values()]
    assert parents.count(1) == 1


def test_who_liked_view_and_back(target):
    session = login_fresh(target, "u1")
    do(session, "window[main]#0/panel[nav]#0/button[Compose]#0")
    do(session, "window[main]#0/field[text]#0", ActionKind.TEXT_INPUT, "t")
    do(session, "window[main]#0/button[Post]#0")
    do(session, "window[main]#0/panel[tweets]#0/button[Who liked]#0")
    assert session.view == "who_liked"
    do(session, "window[main]#0/button[Back]#0")
    assert session.view == "feed"


def _deliver_liked_alerts(target, session, count):
    """Another user likes/unlikes the session user's tweet repeatedly."""
    stim = target.request({"op": "signup", "username": "stim", "password": "pw"})
    token = stim["token"]
    target.request({"op": "follow", "token": token, "username": session.username})
    tweet_id = target.request(
        {"op": "post_tweet", "token": session.token, "text": "bait"}
    )["tweet_id"]
    delivered = 0
    while delivered < count:
        resp = target.request({"op": "like", "token": token, "tweet_id": tweet_id})
        assert resp["ok"], resp
        target.request({"op": "unlike", "token": token, "tweet_id": tweet_id})
        delivered += 1


def test_liked_alert_navigates_to_feed_when_bug_disabled(target):
    session = login_fresh(target, "u1")
    _deliver_liked_alerts(target, session, 1)
    do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
    do(session, "window[main]#0/panel[alerts]#0/alert[liked]#0")
    assert session.view == "feed"


def test_followed_alert_navigates_to_users(target):
    session = login_fresh(target, "u1")
    _deliver_liked_alerts(target, session, 1)  # the stim follow also alerts
    do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
    do(session, "window[main]#0/panel[alerts]#0/alert[followed]#0")
    assert session.view == "users"


def test_nav_bug_arms_only_at_threshold():
    faults = FaultConfig(
        follow_error_probability=0.0,
        alert_nav_bug_enabled=True,
        alert_nav_bug_threshold=10,
    )
    target = InProcessTarget(seed=0, faults=faults)
    session = login_fresh(target, "u1", faults=faults)
    _deliver_liked_alerts(target, session, 8)
    do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
    assert session.alert_count_seen == 9  # 8 likes + 1 follow
    do(session, "window[main]#0/panel[alerts]#0/alert[liked]#0")
    assert session.view == "feed"  # below threshold: canonical
    _deliver_liked_alerts_more(target, session, 1)
    do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
    assert session.alert_count_seen == 10
    do(session, "window[main]#0/panel[alerts]#0/alert[liked]#0")
    assert session.view == "alerts"  # armed: navigation dropped


def _deliver_liked_alerts_more(target, session, count):
    token = target.request({"op": "login", "username": "stim", "password": "pw"})["token"]
    tweet_id = min(t.id for t in target.state.tweets.values())
    for _ in range(count):
        resp = target.request({"op": "like", "token": token, "tweet_id": tweet_id})
        if not resp["ok"]:
            target.request({"op": "unlike", "token": token, "tweet_id": tweet_id})
            target.request({"op": "like", "token": token, "tweet_id": tweet_id})
        target.request({"op": "unlike", "token": token, "tweet_id": tweet_id})


def test_bug_identical_to_canonical_below_threshold():
    faults_on = FaultConfig(
        follow_error_probability=0.0,
        alert_nav_bug_enabled=True,
        alert_nav_bug_threshold=10,
    )

    def run(faults):
        target = InProcessTarget(seed=0, faults=faults)
        session = login_fresh(target, "u1", faults=faults)
        _deliver_liked_alerts(target, session, 3)
        do(session, "window[main]#0/panel[nav]#0/button[Alerts]#0")
        do(session, "window[main]#0/panel[alerts]#0/alert[liked]#0")
        return session.snapshot()

    assert run(faults_on) == run(NO_FAULTS)


def test_closure_and_prefix_over_random_walk(target):
    session = login_fresh(target, "u1")
    rng = random.Random(99)
    for _ in range(120):
        actions = session.available_actions()
        assert actions, f"dead end at {session.view}"
        chosen = sorted(actions, key=lambda a: a.key())[rng.randrange(len(actions))]
        if chosen.kind is ActionKind.TEXT_INPUT:
            chosen = UiAction(chosen.component, chosen.kind, payload="u1")
        session.perform(chosen)
        assert session.view in VIEWS
        for act in session.available_actions():
            assert act.component_text.startswith("window[main]#0")


def test_view_catalog_covers_all_views():
    catalog = view_catalog()
    assert sorted(catalog["views"]) == sorted(VIEWS)
    assert catalog["views"]["login"]["kind"] == "window"
