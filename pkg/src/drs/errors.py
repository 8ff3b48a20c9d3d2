"""Error types shared by every service layer.

Each error carries a stable machine-readable ``code``; the HTTP layer maps
codes to statuses in one fixed table (see ``drs.api``).
"""


class DrsError(Exception):
    """Base class for all service errors."""

    code = "ERROR"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ValidationError(DrsError):
    code = "VALIDATION"


class WeakPassword(ValidationError):
    # surfaced as VALIDATION on the wire, kept distinct for callers
    pass


class EmptyBlob(ValidationError):
    pass


class EmptyQuery(DrsError):
    code = "EMPTY_QUERY"


class AuthFailed(DrsError):
    code = "AUTH_FAILED"


class Unauthenticated(DrsError):
    code = "UNAUTHENTICATED"


class Forbidden(DrsError):
    code = "FORBIDDEN"


class LastAdmin(DrsError):
    code = "LAST_ADMIN"


class NotFound(DrsError):
    code = "NOT_FOUND"


class DuplicateMatrix(DrsError):
    code = "DUPLICATE_MATRIX"


class UsernameTaken(DrsError):
    code = "USERNAME_TAKEN"


class UnknownMatrix(DrsError):
    code = "UNKNOWN_MATRIX"


class AlreadyRegistered(DrsError):
    code = "ALREADY_REGISTERED"


class BlobTooLarge(DrsError):
    code = "BLOB_TOO_LARGE"


class IoError(DrsError):
    code = "IO_ERROR"


class CorruptSnapshot(DrsError):
    code = "CORRUPT_SNAPSHOT"


class DirLocked(DrsError):
    code = "DIR_LOCKED"


class AdminExists(DrsError):
    code = "ADMIN_EXISTS"


class AlreadyIndexed(DrsError):
    code = "ALREADY_INDEXED"


class NotIndexed(DrsError):
    code = "NOT_INDEXED"
