from __future__ import annotations

import json

import httpx
import pytest

from synthuser.target import FaultConfig, InProcessTarget
from synthuser.traces import TraceWriter, load_trace
from synthuser.webserver import AppServer

NO_FAULTS = FaultConfig.none()


@pytest.fixture
def server(tmp_path):
    target = InProcessTarget(seed=0, faults=NO_FAULTS)
    writer = TraceWriter.open(tmp_path / "traces.jsonl")
    app = AppServer(target, writer=writer, web_dir=None, port=0)
    app.start()
    app.trace_path = tmp_path / "traces.jsonl"
    yield app
    app.stop()
    writer.close()


@pytest.fixture
def client(server):
    with httpx.Client(base_url=f"http://127.0.0.1:{server.port}") as c:
        yield c


def signup(client, name):
    resp = client.post("/api/signup", json={"username": name, "password": "pw"})
    assert resp.status_code == 200
    return resp.json()["token"]


def test_api_round_trip(client):
    token = signup(client, "u1")
    resp = client.post("/api/post_tweet", json={"token": token, "text": "hi"})
    assert resp.status_code == 200
    tweet_id = resp.json()["tweet_id"]
    feed = client.post("/api/get_feed", json={"token": token}).json()
    assert [t["id"] for t in feed["tweets"]] == [tweet_id]


def test_error_status_mapping(client):
    token = signup(client, "u1")
    assert client.post("/api/get_feed", json={"token": "nope"}).status_code == 401
    assert (
        client.post("/api/signup", json={"username": "u1", "password": "x"}).status_code
        == 409
    )
    assert (
        client.post("/api/like", json={"token": token, "tweet_id": 5}).status_code
        == 400
    )
    assert client.post("/api/nonsense", json={}).status_code == 404


def test_internal_fault_maps_to_500(tmp_path):
    target = InProcessTarget(seed=0, faults=FaultConfig(follow_error_probability=1.0))
    app = AppServer(target, writer=None, port=0)
    app.start()
    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{app.port}") as client:
            t1 = signup(client, "u1")
            signup(client, "u2")
            resp = client.post("/api/follow", json={"token": t1, "username": "u2"})
            assert resp.status_code == 500
            assert resp.json()["code"] == "internal"
    finally:
        app.stop()


def test_report_action_assigns_seq_and_persists(server, client):
    body = {
        "session": "web-1",
        "state_before": "feed",
        "state_after": "feed",
        "action": {
            "component": "window[main]#0/panel[tweets]#0/button[Like]#0",
            "kind": "click",
        },
    }
    first = client.post("/track/report-action", json=body).json()
    second = client.post("/track/report-action", json=body).json()
    assert (first["seq"], second["seq"]) == (0, 1)
    traces = load_trace(server.trace_path)
    assert len(traces[0].events) == 2
    assert traces[0].session == "web-1"


def test_report_action_validates(client):
    resp = client.post(
        "/track/report-action",
        json={"session": "s", "state_before": "feed", "state_after": "feed",
              "action": {"component": "button#0", "kind": "click"}},
    )
    assert resp.status_code == 400


def test_active_ids_projection(client):
    resp = client.post("/track/active-ids", json={"view": "login"})
    assert resp.json()["ids"] == [
        "window[main]#0/button[Log in]#0",
        "window[main]#0/button[Sign up]#0",
        "window[main]#0/field[password]#0",
        "window[main]#0/field[username]#0",
    ]
    token = signup(client, "u1")
    client.post("/api/post_tweet", json={"token": token, "text": "x"})
    resp = client.post("/track/active-ids", json={"view": "feed", "token": token})
    ids = resp.json()["ids"]
    assert "window[main]#0/panel[tweets]#0/button[Like]#0" in ids
    assert "window[main]#0/panel[nav]#0/button[Log out]#0" in ids
    # who_liked needs its context; composer honors typed-text enablement
    resp = client.post(
        "/track/active-ids",
        json={"view": "who_liked", "token": token, "context": {"who_liked": 1}},
    )
    assert "window[main]#0/button[Back]#0" in resp.json()["ids"]
    resp = client.post(
        "/track/active-ids",
        json={"view": "composer", "token": token,
              "context": {"buffers": {"text": "draft"}}},
    )
    assert "window[main]#0/button[Post]#0" in resp.json()["ids"]
    resp = client.post("/track/active-ids", json={"view": "composer", "token": token})
    assert "window[main]#0/button[Post]#0" not in resp.json()["ids"]


def test_active_ids_requires_valid_token(client):
    resp = client.post("/track/active-ids", json={"view": "feed"})
    assert resp.status_code == 400
    resp = client.post("/track/active-ids", json={"view": "feed", "token": "bad"})
    assert resp.status_code == 400


def test_contract_served(client):
    resp = client.get("/ui/contract.json")
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["format"] == "synthuser-ui-contract"
    assert "feed" in doc["views"]


def test_static_serving(tmp_path):
    web_dir = tmp_path / "web"
    web_dir.mkdir()
    (web_dir / "index.html").write_text("<html>demo</html>")
    (web_dir / "app.js").write_text("console.log('hi')")
    target = InProcessTarget(seed=0, faults=NO_FAULTS)
    app = AppServer(target, web_dir=web_dir, port=0)
    app.start()
    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{app.port}") as client:
            assert "demo" in client.get("/").text
            resp = client.get("/app.js")
            assert resp.status_code == 200
            assert "javascript" in resp.headers["content-type"]
            assert client.get("/../etc/passwd").status_code in (400, 404)
            assert client.get("/missing.js").status_code == 404
    finally:
        app.stop()


def test_concurrent_clients(server):
    import threading

    results = []

    def hammer(i):
        with httpx.Client(base_url=f"http://127.0.0.1:{server.port}") as client:
            token = signup(client, f"user-{i}")
            for n in range(5):
                r = client.post(
                    "/api/post_tweet", json={"token": token, "text": f"t{i}-{n}"}
                )
                results.append(r.status_code)

    threads = [threading.Thread(target=hammer, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results.count(200) == 20
    assert len(server.target.state.tweets) == 20
