"""Account lifecycle, credential verification, sessions and role checks.

Accounts are two-phase: an admin provisions a record keyed by the student's
matrix number, and the student later registers it with a username and
password. Passwords are stored only as salted iterated PBKDF2-SHA256
digests; login failures are indistinguishable between unknown username and
wrong password so accounts cannot be enumerated.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import time
import uuid
from dataclasses import dataclass
from typing import Callable

from .errors import (
    AdminExists,
    AlreadyRegistered,
    AuthFailed,
    DuplicateMatrix,
    Forbidden,
    LastAdmin,
    NotFound,
    Unauthenticated,
    UnknownMatrix,
    UsernameTaken,
    ValidationError,
    WeakPassword,
)
from .store import Mutation, Store

DEGREES = ("Master", "PhD")
ROLE_MEMBER = "Member"
ROLE_ADMIN = "Admin"
STATUS_PROVISIONED = "Provisioned"
STATUS_REGISTERED = "Registered"

MIN_PASSWORD_LENGTH = 8
SESSION_LIFETIME_SECONDS = 24 * 3600
PBKDF2_ITERATIONS = 100_000

_LOGIN_FAILED_MESSAGE = "invalid username or password"


@dataclass
class UserRecord:
    user_id: str
    matrix_number: str
    full_name: str
    degree: str
    role: str
    status: str
    email: str | None = None
    username: str | None = None
    credential: dict | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "UserRecord":
        return cls(
            user_id=raw["user_id"],
            matrix_number=raw["matrix_number"],
            full_name=raw["full_name"],
            degree=raw["degree"],
            role=raw["role"],
            status=raw["status"],
            email=raw.get("email"),
            username=raw.get("username"),
            credential=raw.get("credential"),
        )

    def to_dict(self) -> dict:
        raw = {
            "user_id": self.user_id,
            "matrix_number": self.matrix_number,
            "full_name": self.full_name,
            "degree": self.degree,
            "role": self.role,
            "status": self.status,
        }
        # absent optionals stay absent so snapshots carry no null noise
        if self.email is not None:
            raw["email"] = self.email
        if self.username is not None:
            raw["username"] = self.username
        if self.credential is not None:
            raw["credential"] = self.credential
        return raw


@dataclass(frozen=True)
class Session:
    token: str
    user_id: str
    role: str
    created_at: int
    expires_at: int

    @classmethod
    def from_dict(cls, raw: dict) -> "Session":
        return cls(
            token=raw["token"],
            user_id=raw["user_id"],
            role=raw["role"],
            created_at=raw["created_at"],
            expires_at=raw["expires_at"],
        )

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "user_id": self.user_id,
            "role": self.role,
            "created_at": self.created_at,
            "expires_at": self.expires_at,
        }


def normalize_matrix(matrix_number: str) -> str:
    """Uppercase-normalize; 1..32 alphanumeric characters required."""
    m = matrix_number.strip().upper()
    if not (1 <= len(m) <= 32) or not m.isalnum():
        raise ValidationError("matrix number must be 1-32 alphanumeric characters")
    return m


def normalize_username(username: str) -> str:
    """Lowercase-normalize; 3..32 characters from [a-z0-9._-]."""
    u = username.strip().lower()
    if not (3 <= len(u) <= 32):
        raise ValidationError("username must be 3-32 characters")
    if not all(c.isalnum() or c in "._-" for c in u):
        raise ValidationError("username may contain letters, digits, '.', '_' and '-' only")
    return u


def validate_degree(degree: str) -> str:
    if degree not in DEGREES:
        raise ValidationError(f"degree must be one of {', '.join(DEGREES)}")
    return degree


def validate_full_name(full_name: str) -> str:
    name = full_name.strip()
    if not name:
        raise ValidationError("name must not be blank")
    return name


def check_password_strength(password: str) -> None:
    if len(password) < MIN_PASSWORD_LENGTH:
        raise WeakPassword(f"password must be at least {MIN_PASSWORD_LENGTH} characters")


def make_credential(password: str, iterations: int = PBKDF2_ITERATIONS) -> dict:
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return {"salt": salt.hex(), "digest": digest.hex(), "iterations": iterations}


def verify_credential(credential: dict, password: str) -> bool:
    """Recompute the digest with the stored salt and iteration count."""
    digest = hashlib.pbkdf2_hmac(
        "sha256",
        password.encode("utf-8"),
        bytes.fromhex(credential["salt"]),
        credential["iterations"],
    )
    return hmac.compare_digest(digest.hex(), credential["digest"])


# verified against this on every failed lookup so unknown usernames cost the
# same as wrong passwords
_DECOY_CREDENTIAL = make_credential("decoy-password", iterations=1000)


class AuthService:
    def __init__(
        self,
        store: Store,
        clock: Callable[[], float] = time.time,
        session_lifetime: int = SESSION_LIFETIME_SECONDS,
        pbkdf2_iterations: int = PBKDF2_ITERATIONS,
    ) -> None:
        self._store = store
        self._clock = clock
        self._session_lifetime = session_lifetime
        self._iterations = pbkdf2_iterations

    # -- helpers -------------------------------------------------------------

    def _now(self) -> int:
        return int(self._clock())

    @staticmethod
    def require_admin(session: Session | None) -> Session:
        if session is None:
            raise Unauthenticated("this operation requires a logged-in admin")
        if session.role != ROLE_ADMIN:
            raise Forbidden("this operation is restricted to admins")
        return session

    @staticmethod
    def require_session(session: Session | None) -> Session:
        if session is None:
            raise Unauthenticated("this operation requires a logged-in user")
        return session

    def _find_by_matrix(self, users: dict, matrix: str) -> dict | None:
        for rec in users.values():
            if rec["matrix_number"] == matrix:
                return rec
        return None

    def _username_taken(self, users: dict, username: str) -> bool:
        return any(
            rec["status"] == STATUS_REGISTERED and rec.get("username") == username
            for rec in users.values()
        )

    # -- account lifecycle -----------------------------------------------------

    def provision_user(
        self, admin: Session | None, matrix_number: str, full_name: str, degree: str
    ) -> UserRecord:
        """Admin pre-creates an account for a new student; the student later
        claims it through sign_up."""
        self.require_admin(admin)
        return self.provision_direct(matrix_number, full_name, degree)

    def provision_direct(self, matrix_number: str, full_name: str, degree: str) -> UserRecord:
        """Session-less provisioning used by the operator CLI."""
        matrix = normalize_matrix(matrix_number)
        name = validate_full_name(full_name)
        validate_degree(degree)
        with self._store.write_lock:
            if self._find_by_matrix(self._store.state.users, matrix) is not None:
                raise DuplicateMatrix(f"matrix number {matrix} already exists")
            user = UserRecord(
                user_id=uuid.uuid4().hex,
                matrix_number=matrix,
                full_name=name,
                degree=degree,
                role=ROLE_MEMBER,
                status=STATUS_PROVISIONED,
            )
            self._store.commit(Mutation().upsert("users", user.user_id, user.to_dict()))
            return user

    def sign_up(self, matrix_number: str, username: str, password: str, email: str) -> UserRecord:
        """Claim a provisioned account: the record becomes Registered with
        role Member and the given credentials."""
        matrix = normalize_matrix(matrix_number)
        uname = normalize_username(username)
        check_password_strength(password)
        email = email.strip()
        if not email:
            raise ValidationError("email must not be blank")
        with self._store.write_lock:
            users = self._store.state.users
            rec = self._find_by_matrix(users, matrix)
            if rec is None:
                raise UnknownMatrix(f"matrix number {matrix} does not exist in the database")
            if rec["status"] == STATUS_REGISTERED:
                raise AlreadyRegistered(f"matrix number {matrix} is already registered")
            if self._username_taken(users, uname):
                raise UsernameTaken(f"username {uname} is not available")
            user = UserRecord.from_dict(rec)
            user.status = STATUS_REGISTERED
            user.role = ROLE_MEMBER
            user.username = uname
            user.email = email
            user.credential = make_credential(password, self._iterations)
            self._store.commit(Mutation().upsert("users", user.user_id, user.to_dict()))
            return user

    def bootstrap_admin(
        self, username: str, password: str, matrix_number: str, full_name: str, degree: str = "PhD"
    ) -> UserRecord:
        """Create the very first admin (CLI only). Refuses if any admin exists."""
        uname = normalize_username(username)
        check_password_strength(password)
        matrix = normalize_matrix(matrix_number)
        name = validate_full_name(full_name)
        validate_degree(degree)
        with self._store.write_lock:
            users = self._store.state.users
            if any(rec["role"] == ROLE_ADMIN for rec in users.values()):
                raise AdminExists("an admin account already exists")
            if self._find_by_matrix(users, matrix) is not None:
                raise DuplicateMatrix(f"matrix number {matrix} already exists")
            if self._username_taken(users, uname):
                raise UsernameTaken(f"username {uname} is not available")
            user = UserRecord(
                user_id=uuid.uuid4().hex,
                matrix_number=matrix,
                full_name=name,
                degree=degree,
                role=ROLE_ADMIN,
                status=STATUS_REGISTERED,
                username=uname,
                credential=make_credential(password, self._iterations),
            )
            self._store.commit(Mutation().upsert("users", user.user_id, user.to_dict()))
            return user

    # -- sessions ---------------------------------------------------------------

    def login(self, username: str, password: str) -> Session:
        """Verify credentials and mint a bearer session. Unknown username and
        wrong password fail identically."""
        uname = username.strip().lower()
        with self._store.write_lock:
            users = self._store.state.users
            rec = None
            for candidate in users.values():
                if candidate["status"] == STATUS_REGISTERED and candidate.get("username") == uname:
                    rec = candidate
                    break
            if rec is None:
                verify_credential(_DECOY_CREDENTIAL, password)
                raise AuthFailed(_LOGIN_FAILED_MESSAGE)
            if not verify_credential(rec["credential"], password):
                raise AuthFailed(_LOGIN_FAILED_MESSAGE)
            now = self._now()
            session = Session(
                token=secrets.token_hex(32),
                user_id=rec["user_id"],
                role=rec["role"],
                created_at=now,
                expires_at=now + self._session_lifetime,
            )
            self._store.commit(Mutation().upsert("sessions", session.token, session.to_dict()))
            return session

    def logout(self, token: str) -> None:
        """Drop the session; unknown tokens succeed silently (idempotent)."""
        with self._store.write_lock:
            if token in self._store.state.sessions:
                self._store.commit(Mutation().delete("sessions", token))

    def authenticate(self, token: str) -> Session:
        raw = self._store.state.sessions.get(token)
        if raw is None:
            raise Unauthenticated("session token is not valid")
        session = Session.from_dict(raw)
        if self._now() >= session.expires_at:
            raise Unauthenticated("session has expired")
        return session

    def change_password(self, session: Session | None, old_password: str, new_password: str) -> None:
        """Replace the credential (fresh salt) and revoke every other session
        of the user so a leaked token dies with the old password."""
        session = self.require_session(session)
        check_password_strength(new_password)
        with self._store.write_lock:
            raw = self._store.state.users.get(session.user_id)
            if raw is None:
                raise Unauthenticated("session user no longer exists")
            if not verify_credential(raw["credential"], old_password):
                raise AuthFailed("old password is incorrect")
            user = UserRecord.from_dict(raw)
            user.credential = make_credential(new_password, self._iterations)
            mutation = Mutation().upsert("users", user.user_id, user.to_dict())
            for token, sess in self._store.state.sessions.items():
                if sess["user_id"] == user.user_id and token != session.token:
                    mutation.delete("sessions", token)
            self._store.commit(mutation)

    # -- administration ---------------------------------------------------------

    def edit_user(self, admin: Session | None, user_id: str, patch: dict) -> UserRecord:
        self.require_admin(admin)
        allowed = {"full_name", "matrix_number", "degree", "email"}
        unknown = set(patch) - allowed
        if unknown:
            raise ValidationError(f"unknown fields in patch: {', '.join(sorted(unknown))}")
        with self._store.write_lock:
            raw = self._store.state.users.get(user_id)
            if raw is None:
                raise NotFound(f"user {user_id} does not exist")
            user = UserRecord.from_dict(raw)
            if not patch:
                return user
            if "full_name" in patch:
                user.full_name = validate_full_name(patch["full_name"])
            if "matrix_number" in patch:
                matrix = normalize_matrix(patch["matrix_number"])
                holder = self._find_by_matrix(self._store.state.users, matrix)
                if holder is not None and holder["user_id"] != user_id:
                    raise DuplicateMatrix(f"matrix number {matrix} already exists")
                user.matrix_number = matrix
            if "degree" in patch:
                user.degree = validate_degree(patch["degree"])
            if "email" in patch:
                email = str(patch["email"]).strip()
                if not email:
                    raise ValidationError("email must not be blank")
                user.email = email
            self._store.commit(Mutation().upsert("users", user.user_id, user.to_dict()))
            return user

    def delete_user(self, admin: Session | None, user_id: str) -> None:
        """Remove the account, its sessions and its favorites in one commit.
        The last remaining admin cannot be deleted (lockout guard)."""
        self.require_admin(admin)
        with self._store.write_lock:
            state = self._store.state
            raw = state.users.get(user_id)
            if raw is None:
                raise NotFound(f"user {user_id} does not exist")
            if raw["role"] == ROLE_ADMIN:
                admins = sum(1 for rec in state.users.values() if rec["role"] == ROLE_ADMIN)
                if admins <= 1:
                    raise LastAdmin("cannot delete the last remaining admin")
            mutation = Mutation().delete("users", user_id).delete("favorites", user_id)
            for token, sess in state.sessions.items():
                if sess["user_id"] == user_id:
                    mutation.delete("sessions", token)
            self._store.commit(mutation)

    def find_users(
        self,
        admin: Session | None,
        matrix_number: str | None = None,
        name_substring: str | None = None,
    ) -> list[UserRecord]:
        """Admin search: exact matrix match (after normalization) and/or
        case-insensitive name substring, ordered by matrix number."""
        self.require_admin(admin)
        matrix = matrix_number.strip().upper() if matrix_number and matrix_number.strip() else None
        name = name_substring.strip().lower() if name_substring and name_substring.strip() else None
        if matrix is None and name is None:
            raise ValidationError("give a matrix number and/or a name to search for")
        found = []
        for rec in self._store.state.users.values():
            if matrix is not None and rec["matrix_number"] != matrix:
                continue
            if name is not None and name not in rec["full_name"].lower():
                continue
            found.append(UserRecord.from_dict(rec))
        found.sort(key=lambda u: u.matrix_number)
        return found

    def live_session_count(self, user_id: str) -> int:
        now = self._now()
        return sum(
            1
            for sess in self._store.state.sessions.values()
            if sess["user_id"] == user_id and now < sess["expires_at"]
        )
