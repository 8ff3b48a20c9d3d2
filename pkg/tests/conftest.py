import pytest

from drs.auth import Session
from drs.service import DrsService


class FakeClock:
    """Deterministic clock; tests advance it explicitly."""

    def __init__(self, start: float = 1_767_225_600.0):  # 2026-01-01 UTC
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


class SimulatedCrash(Exception):
    """Raised by fault-injection hooks to abort a commit mid-protocol."""


def crash_at(point: str):
    def hook(name: str) -> None:
        if name == point:
            raise SimulatedCrash(point)

    return hook


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()

@pytest.fixture
def data_dir(tmp_path):
    return tmp_path / "data"


@pytest.fixture
def service(data_dir, clock):
    svc = DrsService.open(data_dir, clock=clock)
    yield svc
    svc.close()


@pytest.fixture
def admin_session(service) -> Session:
    service.auth.bootstrap_admin("rootadmin", "admin-pass-1", "STAFF0001", "Root Admin")
    return service.auth.login("rootadmin", "admin-pass-1")


def register_member(
    service: DrsService,
    matrix: str = "WGA100001",
    username: str = "student1",
    password: str = "member-pass-1",
    full_name: str = "Sample Student",
) -> Session:
    service.auth.provision_direct(matrix, full_name, "Master")
    service.auth.sign_up(matrix, username, password, f"{username}@example.edu")
    return service.auth.login(username, password)


@pytest.fixture
def member_session(service) -> Session:
    return register_member(service)


def sample_meta(**overrides) -> dict:
    meta = {
        "title": "Inverted Index Construction for Small Libraries",
        "author_name": "A. Researcher",
        "abstract": "Builds and evaluates a compact inverted index.",
        "keywords": ["indexing", "retrieval"],
        "topic": "information retrieval",
        "degree": "Master",
        "year": 2005,
    }
    meta.update(overrides)
    return meta
