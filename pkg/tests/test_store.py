import json
import random

import pytest

from drs.errors import BlobTooLarge, CorruptSnapshot, DirLocked, EmptyBlob, IoError
from drs.store import Mutation, Store, canonical_json_bytes

from conftest import SimulatedCrash, crash_at

# independently computed: sha256sum of the three bytes "abc"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def user_fixture(user_id, matrix):
    return {
        "user_id": user_id,
        "matrix_number": matrix,
        "full_name": "Fixture Person",
        "degree": "Master",
        "role": "Member",
        "status": "Provisioned",
    }


def test_open_empty_dir_has_empty_collections(tmp_path):
    with Store.open(tmp_path / "data") as store:
        assert store.state.users == {}
        assert store.state.dissertations == {}
        assert store.state.favorites == {}
        assert store.state.sessions == {}


def test_open_reads_handwritten_snapshot(tmp_path):
    root = tmp_path / "data"
    root.mkdir()
    values = {
        "u1": user_fixture("u1", "WGA100001"),
        "u2": user_fixture("u2", "WGA100002"),
    }
    (root / "users.json").write_text(
        json.dumps({"schema": 1, "values": values}), encoding="utf-8"
    )
    with Store.open(root) as store:
        assert store.state.users == values


def test_open_truncated_snapshot_refuses(tmp_path):
    root = tmp_path / "data"
    root.mkdir()
    good = canonical_json_bytes({"schema": 1, "values": {}})
    (root / "users.json").write_bytes(good[: len(good) // 2])
    with pytest.raises(CorruptSnapshot):
        Store.open(root)


def test_open_newer_schema_refuses(tmp_path):
    root = tmp_path / "data"
    root.mkdir()
    (root / "users.json").write_bytes(canonical_json_bytes({"schema": 2, "values": {}}))
    with pytest.raises(CorruptSnapshot):
        Store.open(root)


def test_open_missing_blob_reference_refuses(tmp_path):
    root = tmp_path / "data"
    root.mkdir()
    rec = {"dissertation_id": "d1", "file_ref": {"content_hash": "0" * 64}}
    (root / "dissertations.json").write_bytes(
        canonical_json_bytes({"schema": 1, "values": {"d1": rec}})
    )
    with pytest.raises(CorruptSnapshot):
        Store.open(root)


def test_commit_then_reopen_is_durable(tmp_path):
    root = tmp_path / "data"
    with Store.open(root) as store:
        store.commit(Mutation().upsert("users", "u1", user_fixture("u1", "WGA100001")))
    with Store.open(root) as store:
        assert store.state.users["u1"]["matrix_number"] == "WGA100001"


def test_empty_commit_leaves_snapshot_bytes_unchanged(tmp_path):
    root = tmp_path / "data"
    with Store.open(root) as store:
        store.commit(Mutation().upsert("users", "u1", user_fixture("u1", "WGA100001")))
        before = (root / "users.json").read_bytes()
        store.commit(Mutation())
        assert (root / "users.json").read_bytes() == before
        assert not (root / "dissertations.json").exists()


def test_crash_before_journal_shows_neither_effect(tmp_path):
    root = tmp_path / "data"
    with Store.open(root) as store:
        store.commit(Mutation().upsert("users", "uB", user_fixture("uB", "WGA100002")))

    store = Store.open(root, crash_hook=crash_at("temps"))
    mutation = (
        Mutation()
        .upsert("users", "uA", user_fixture("uA", "WGA100001"))
        .delete("users", "uB")
        .upsert("sessions", "tok", {"token": "tok", "user_id": "uA"})
    )
    with pytest.raises(SimulatedCrash):
        store.commit(mutation)
    store.close()

    with Store.open(root) as store:
        assert "uA" not in store.state.users
        assert "uB" in store.state.users
        assert store.state.sessions == {}


@pytest.mark.parametrize("point", ["journal", "rename:sessions", "rename:users"])
def test_crash_after_journal_shows_all_effects(tmp_path, point):
    root = tmp_path / "data"
    with Store.open(root) as store:
        store.commit(Mutation().upsert("users", "uB", user_fixture("uB", "WGA100002")))

    store = Store.open(root, crash_hook=crash_at(point))
    mutation = (
        Mutation()
        .upsert("users", "uA", user_fixture("uA", "WGA100001"))
        .delete("users", "uB")
        .upsert("sessions", "tok", {"token": "tok", "user_id": "uA"})
    )
    with pytest.raises(SimulatedCrash):
        store.commit(mutation)
    store.close()

    with Store.open(root) as store:
        assert "uA" in store.state.users
        assert "uB" not in store.state.users
        assert "tok" in store.state.sessions


def test_disk_failure_before_journal_rolls_back_memory_and_disk(tmp_path):
    root = tmp_path / "data"

    def failing_hook(name):
        if name == "temps":
            raise OSError("injected disk failure")

    with Store.open(root) as store:
        store.commit(Mutation().upsert("users", "uB", user_fixture("uB", "WGA100002")))

    store = Store.open(root, crash_hook=failing_hook)
    before = dict(store.state.users)
    with pytest.raises(IoError):
        store.commit(Mutation().upsert("users", "uA", user_fixture("uA", "WGA100001")))
    assert store.state.users == before
    assert not list(root.glob("*.tmp"))
    store.close()

    with Store.open(root) as store:
        assert store.state.users == before


def test_blob_basics(tmp_path):
    with Store.open(tmp_path / "data") as store:
        with pytest.raises(EmptyBlob):
            store.put_blob(b"")
        assert store.put_blob(b"abc") == SHA256_ABC
        assert store.put_blob(b"abc") == SHA256_ABC
        assert list(store.iter_blob_hashes()) == [SHA256_ABC]
        assert store.get_blob(SHA256_ABC) == b"abc"


def test_blob_size_limit(tmp_path):
    with Store.open(tmp_path / "data", max_blob_bytes=8) as store:
        with pytest.raises(BlobTooLarge):
            store.put_blob(b"123456789")
        assert store.put_blob(b"12345678")


def test_blob_gc_keeps_live_hashes(tmp_path):
    with Store.open(tmp_path / "data") as store:
        live = store.put_blob(b"keep me")
        store.put_blob(b"orphan one")
        store.put_blob(b"orphan two")
        assert store.gc_blobs({live}) == 2
        assert list(store.iter_blob_hashes()) == [live]


def test_snapshot_serialize_parse_serialize_is_byte_identical(tmp_path):
    root = tmp_path / "data"
    with Store.open(root) as store:
        store.commit(
            Mutation()
            .upsert("users", "u2", user_fixture("u2", "WGA100002"))
            .upsert("users", "u1", user_fixture("u1", "WGA100001"))
            .upsert("favorites", "u1", ["d2", "d1"])
        )
    for name in ("users.json", "favorites.json"):
        raw = (root / name).read_bytes()
        assert canonical_json_bytes(json.loads(raw.decode("utf-8"))) == raw


def test_directory_lock_is_exclusive(tmp_path):
    root = tmp_path / "data"
    store = Store.open(root)
    try:
        with pytest.raises(DirLocked):
            Store.open(root)
    finally:
        store.close()
    # released on close
    Store.open(root).close()


def test_unknown_collection_rejected(tmp_path):
    with Store.open(tmp_path / "data") as store:
        with pytest.raises(ValueError):
            store.commit(Mutation().upsert("nonsense", "k", {}))


def test_stray_tmp_files_cleaned_on_open(tmp_path):
    root = tmp_path / "data"
    Store.open(root).close()
    (root / "users.json.tmp").write_bytes(b"garbage")
    with Store.open(root) as store:
        assert store.state.users == {}
    assert not (root / "users.json.tmp").exists()


CRASH_POINTS = [
    "blobs",
    "temps",
    "journal",
    "rename:first",
    "rename:last",
    "cleanup",
    None,
]


def _random_mutation(rng, blob_hash):
    mutation = Mutation()
    for _ in range(rng.randint(1, 4)):
        coll = rng.choice(["users", "favorites", "sessions", "dissertations"])
        key = f"k{rng.randint(0, 9)}"
        if rng.random() < 0.3:
            mutation.delete(coll, key)
        elif coll == "dissertations":
            mutation.upsert(
                coll, key, {"dissertation_id": key, "file_ref": {"content_hash": blob_hash}}
            )
        elif coll == "favorites":
            mutation.upsert(coll, key, [f"d{rng.randint(0, 5)}"])
        else:
            mutation.upsert(coll, key, {"id": key, "n": rng.randint(0, 100)})
    return mutation


def _apply_shadow(shadow, mutation):
    for kind, coll, key, record in mutation.ops:
        if kind == "upsert":
            shadow[coll][key] = record
        else:
            shadow[coll].pop(key, None)


def _resolve_point(point, mutation):
    if point == "rename:first":
        return f"rename:{mutation.touched_collections()[0]}"
    if point == "rename:last":
        return f"rename:{mutation.touched_collections()[-1]}"
    return point


def run_crash_sequence(root, rng):
    """One randomized sequence: commits with a crash injected at a random
    point, reopen, and compare against a shadow model. A commit whose
    journal reached disk is durable and counts as applied."""
    armed = {"point": None}

    def hook(name):
        if armed["point"] == name:
            raise SimulatedCrash(name)

    store = Store.open(root, crash_hook=hook)
    blob_hash = store.put_blob(b"crash test blob")
    shadow = {
        "users": dict(store.state.users),
        "dissertations": dict(store.state.dissertations),
        "favorites": dict(store.state.favorites),
        "sessions": dict(store.state.sessions),
    }
    crashed = False
    for _ in range(rng.randint(1, 6)):
        mutation = _random_mutation(rng, blob_hash)
        point = _resolve_point(rng.choice(CRASH_POINTS), mutation)
        armed["point"] = point
        try:
            store.commit(mutation)
            _apply_shadow(shadow, mutation)
        except SimulatedCrash:
            if point == "journal" or point == "cleanup" or point.startswith("rename:"):
                _apply_shadow(shadow, mutation)
            crashed = True
            break
    store.close()

    with Store.open(root) as reopened:
        assert reopened.state.users == shadow["users"]
        assert reopened.state.dissertations == shadow["dissertations"]
        assert reopened.state.favorites == shadow["favorites"]
        assert reopened.state.sessions == shadow["sessions"]
    return crashed


def test_randomized_crash_points_recover_to_last_commit(tmp_path):
    rng = random.Random(20260810)
    crashes = 0
    for i in range(40):
        crashes += run_crash_sequence(tmp_path / f"seq{i}", rng)
    assert crashes > 5  # the sampling actually exercised crash paths
