import json

import pytest
from fastapi.testclient import TestClient

from drs.api import ACCESS_TABLE, create_app

from conftest import sample_meta


@pytest.fixture
def client(service):
    app = create_app(service)
    with TestClient(app) as c:
        yield c


@pytest.fixture
def admin_token(service, client):
    service.auth.bootstrap_admin("rootadmin", "admin-pass-1", "STAFF0001", "Root Admin")
    resp = client.post(
        "/api/login", json={"username": "rootadmin", "password": "admin-pass-1"}
    )
    assert resp.status_code == 200
    return resp.json()["token"]


@pytest.fixture
def member_token(service, client, admin_token):
    client.post(
        "/api/users",
        json={"matrix_number": "WGA100001", "full_name": "A. Student", "degree": "Master"},
        headers=bearer(admin_token),
    )
    resp = client.post(
        "/api/signup",
        json={
            "matrix_number": "WGA100001",
            "username": "student1",
            "password": "member-pass-1",
            "email": "s1@example.edu",
        },
    )
    assert resp.status_code == 201
    resp = client.post(
        "/api/login", json={"username": "student1", "password": "member-pass-1"}
    )
    assert resp.status_code == 200
    return resp.json()["token"]


def bearer(token):
    return {"Authorization": f"Bearer {token}"}


def upload_via_api(client, token, **overrides):
    payload = overrides.pop("file_bytes", b"%PDF-1.4 body")
    resp = client.post(
        "/api/dissertations",
        headers=bearer(token),
        data={"meta": json.dumps(sample_meta(**overrides))},
        files={"file": ("thesis.pdf", payload, "application/pdf")},
    )
    assert resp.status_code == 201, resp.text
    return resp.json()


def test_health_is_public(client):
    resp = client.get("/api/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_login_failure_shapes_are_byte_identical(client, member_token):
    wrong_pw = client.post("/api/login", json={"username": "student1", "password": "bad-pass"})
    no_user = client.post("/api/login", json={"username": "nobody", "password": "bad-pass"})
    assert wrong_pw.status_code == 401
    assert no_user.status_code == 401
    assert wrong_pw.json()["code"] == "AUTH_FAILED"
    assert wrong_pw.content == no_user.content


def test_guest_can_search_but_not_download(client, admin_token):
    record = upload_via_api(client, admin_token, title="Guest Visible Study")
    search = client.get("/api/search", params={"q": "guest"})
    assert search.status_code == 200
    body = search.json()
    assert body["total"] == 1
    assert body["results"][0]["dissertation"]["dissertation_id"] == record["dissertation_id"]
    download = client.get(f"/api/dissertations/{record['dissertation_id']}/file")
    assert download.status_code == 401


def test_member_download_round_trips(client, admin_token, member_token):
    payload = b"\x00\x01binary dissertation bytes\xff" * 3
    record = upload_via_api(client, admin_token, file_bytes=payload)
    resp = client.get(
        f"/api/dissertations/{record['dissertation_id']}/file", headers=bearer(member_token)
    )
    assert resp.status_code == 200
    assert resp.content == payload
    assert resp.headers["content-type"].startswith("application/pdf")
    assert 'filename="thesis.pdf"' in resp.headers["content-disposition"]


def test_metadata_view_omits_uploader(client, admin_token):
    record = upload_via_api(client, admin_token)
    resp = client.get(f"/api/dissertations/{record['dissertation_id']}")
    assert resp.status_code == 200
    assert "uploaded_by" not in resp.json()
    assert "uploaded_by" not in record


def test_signup_unknown_matrix_conflict(client):
    resp = client.post(
        "/api/signup",
        json={
            "matrix_number": "WGA999999",
            "username": "newuser",
            "password": "long-enough-pw",
            "email": "n@example.edu",
        },
    )
    assert resp.status_code == 409
    assert resp.json()["code"] == "UNKNOWN_MATRIX"


def test_logout_is_idempotent_and_kills_token(client, member_token):
    assert client.post("/api/logout", headers=bearer(member_token)).status_code == 200
    resp = client.get("/api/favorites", headers=bearer(member_token))
    assert resp.status_code == 401
    assert client.post("/api/logout", headers=bearer(member_token)).status_code == 200
    assert client.post("/api/logout").status_code == 200  # guests may call it


def test_malformed_json_body(client):
    resp = client.post(
        "/api/login", content=b"{not json", headers={"Content-Type": "application/json"}
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "VALIDATION"


def test_unknown_route_is_json_404(client):
    resp = client.get("/api/nonsense")
    assert resp.status_code == 404
    assert resp.json()["code"] == "NOT_FOUND"


def test_bad_bearer_header_is_401(client):
    assert client.get("/api/search?q=x", headers={"Authorization": "Basic abc"}).status_code == 401
    assert client.get("/api/search?q=x", headers={"Authorization": "Bearer bogus"}).status_code == 401
    body = client.get("/api/search?q=x", headers={"Authorization": "Bearer bogus"}).json()
    assert body["code"] == "UNAUTHENTICATED"


def test_expired_session_is_401(client, member_token, clock):
    clock.advance(24 * 3600 + 1)
    resp = client.get("/api/favorites", headers=bearer(member_token))
    assert resp.status_code == 401


def test_upload_requires_multipart_parts(client, admin_token):
    resp = client.post(
        "/api/dissertations",
        headers=bearer(admin_token),
        data={"meta": json.dumps(sample_meta())},
    )
    assert resp.status_code == 400
    assert resp.json()["code"] == "VALIDATION"
    resp = client.post(
        "/api/dissertations",
        headers=bearer(admin_token),
        data={"meta": "{broken"},
        files={"file": ("f.bin", b"x", "application/octet-stream")},
    )
    assert resp.status_code == 400


def test_patch_dissertation_and_unknown_field(client, admin_token):
    record = upload_via_api(client, admin_token, title="Before Patch")
    resp = client.patch(
        f"/api/dissertations/{record['dissertation_id']}",
        json={"title": "After Patch"},
        headers=bearer(admin_token),
    )
    assert resp.status_code == 200
    assert resp.json()["title"] == "After Patch"
    resp = client.patch(
        f"/api/dissertations/{record['dissertation_id']}",
        json={"file": "nope"},
        headers=bearer(admin_token),
    )
    assert resp.status_code == 400


def test_empty_query_code(client):
    resp = client.get("/api/search", params={"q": "  !!"})
    assert resp.status_code == 400
    assert resp.json()["code"] == "EMPTY_QUERY"


def test_search_pagination_and_limits(client, admin_token):
    for i in range(5):
        upload_via_api(client, admin_token, title=f"pagination study {i}")
    page = client.get("/api/search", params={"q": "pagination", "offset": 2, "limit": 2}).json()
    assert page["total"] == 5
    assert len(page["results"]) == 2
    assert page["offset"] == 2
    everything = client.get("/api/search", params={"q": "pagination", "limit": 1000}).json()
    assert everything["limit"] == 100  # clamped
    assert client.get("/api/search", params={"q": "x", "offset": -1}).status_code == 400
    assert client.get("/api/search", params={"q": "x", "limit": 0}).status_code == 400
    assert client.get("/api/search", params={"q": "x", "limit": "uh"}).status_code == 400


def test_advanced_search_requires_login_and_filters(client, admin_token, member_token):
    upload_via_api(client, admin_token, title="deep learning agents", year=1990, degree="PhD")
    upload_via_api(client, admin_token, title="database agents", year=2005, degree="Master")
    assert client.post("/api/search/advanced", json={"keywords": "agents"}).status_code == 401
    resp = client.post(
        "/api/search/advanced",
        json={"keywords": "agents", "year_from": 2000},
        headers=bearer(member_token),
    )
    assert resp.status_code == 200
    results = resp.json()["results"]
    assert [r["dissertation"]["title"] for r in results] == ["database agents"]
    resp = client.post(
        "/api/search/advanced",
        json={"degree": "Doctorate"},
        headers=bearer(member_token),
    )
    assert resp.status_code == 400
    resp = client.post("/api/search/advanced", json={}, headers=bearer(member_token))
    assert resp.status_code == 400


def test_favorites_flow_over_api(client, admin_token, member_token):
    first = upload_via_api(client, admin_token, title="first favorite")
    second = upload_via_api(client, admin_token, title="second favorite")
    put = client.put(
        f"/api/favorites/{first['dissertation_id']}", headers=bearer(member_token)
    )
    assert put.status_code == 200
    client.put(f"/api/favorites/{second['dissertation_id']}", headers=bearer(member_token))
    listing = client.get("/api/favorites", headers=bearer(member_token)).json()
    assert [r["dissertation_id"] for r in listing["results"]] == [
        first["dissertation_id"],
        second["dissertation_id"],
    ]
    removed = client.post(
        "/api/favorites/remove",
        json={"ids": [first["dissertation_id"], "missing"]},
        headers=bearer(member_token),
    )
    assert removed.json()["items"] == [second["dissertation_id"]]


def test_user_admin_flow_over_api(client, admin_token):
    created = client.post(
        "/api/users",
        json={"matrix_number": "WGA300001", "full_name": "Target User", "degree": "PhD"},
        headers=bearer(admin_token),
    )
    assert created.status_code == 201
    user_id = created.json()["user_id"]
    assert "credential" not in created.json()

    found = client.get(
        "/api/users", params={"name": "target"}, headers=bearer(admin_token)
    ).json()
    assert found["total"] == 1

    patched = client.patch(
        f"/api/users/{user_id}", json={"full_name": "Renamed User"}, headers=bearer(admin_token)
    )
    assert patched.status_code == 200
    assert patched.json()["full_name"] == "Renamed User"

    deleted = client.delete(f"/api/users/{user_id}", headers=bearer(admin_token))
    assert deleted.status_code == 200
    assert client.get(
        "/api/users", params={"name": "renamed"}, headers=bearer(admin_token)
    ).json()["total"] == 0


def test_users_search_requires_criterion(client, admin_token):
    resp = client.get("/api/users", headers=bearer(admin_token))
    assert resp.status_code == 400


def test_last_admin_delete_is_403(client, admin_token, service):
    admin_id = next(iter(service.store.state.users))
    resp = client.delete(f"/api/users/{admin_id}", headers=bearer(admin_token))
    assert resp.status_code == 403
    assert resp.json()["code"] == "LAST_ADMIN"


def test_password_change_revokes_other_sessions(client, service, member_token):
    other = client.post(
        "/api/login", json={"username": "student1", "password": "member-pass-1"}
    ).json()["token"]
    resp = client.post(
        "/api/password",
        json={"old_password": "member-pass-1", "new_password": "fresh-new-pass"},
        headers=bearer(member_token),
    )
    assert resp.status_code == 200
    assert client.get("/api/favorites", headers=bearer(member_token)).status_code == 200
    assert client.get("/api/favorites", headers=bearer(other)).status_code == 401
    assert (
        client.post(
            "/api/login", json={"username": "student1", "password": "fresh-new-pass"}
        ).status_code
        == 200
    )


def test_responses_are_json_except_download(client, admin_token, member_token):
    record = upload_via_api(client, admin_token)
    json_endpoints = [
        client.get("/api/health"),
        client.get("/api/search", params={"q": "index"}),
        client.get(f"/api/dissertations/{record['dissertation_id']}"),
        client.get("/api/favorites", headers=bearer(member_token)),
        client.get("/api/nonsense"),
        client.post("/api/login", json={"username": "x", "password": "y"}),
    ]
    for resp in json_endpoints:
        assert resp.headers["content-type"].startswith("application/json")
    download = client.get(
        f"/api/dissertations/{record['dissertation_id']}/file", headers=bearer(member_token)
    )
    assert not download.headers["content-type"].startswith("application/json")


def test_cors_preflight_for_configured_origin(service):
    app = create_app(service, cors_origins=["http://localhost:8080"])
    with TestClient(app) as c:
        resp = c.options(
            "/api/search",
            headers={
                "Origin": "http://localhost:8080",
                "Access-Control-Request-Method": "GET",
                "Access-Control-Request-Headers": "authorization",
            },
        )
        assert resp.status_code == 200
        assert resp.headers["access-control-allow-origin"] == "http://localhost:8080"


def test_access_table_covers_routes_exactly(service):
    app = create_app(service)
    app_routes = set()
    for route in app.routes:
        if getattr(route, "path", "").startswith("/api"):
            for method in route.methods - {"HEAD", "OPTIONS"}:
                app_routes.add((method, route.path))
    table_routes = {(method, path) for method, path, _ in ACCESS_TABLE}
    assert table_routes == app_routes
    assert len(ACCESS_TABLE) == len(table_routes)  # no duplicate rows
