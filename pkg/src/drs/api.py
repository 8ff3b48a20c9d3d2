"""HTTP boundary: every operation behind one JSON API with a uniform error
model and bearer-token sessions.

Error bodies are always ``{"code": ..., "message": ...}`` with a fixed
code-to-status table. Uploads are multipart with a ``meta`` JSON part and a
``file`` part; downloads are the only non-JSON responses.
"""

from __future__ import annotations

import json
import urllib.parse

from fastapi import Depends, FastAPI, File, Form, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict
from starlette.exceptions import HTTPException as StarletteHTTPException

from .auth import Session, validate_degree
from .errors import DrsError, Unauthenticated, ValidationError
from .search import AdvancedQuery, SearchHit, tokenize
from .service import DrsService

STATUS_BY_CODE = {
    "VALIDATION": 400,
    "EMPTY_QUERY": 400,
    "AUTH_FAILED": 401,
    "UNAUTHENTICATED": 401,
    "FORBIDDEN": 403,
    "LAST_ADMIN": 403,
    "NOT_FOUND": 404,
    "DUPLICATE_MATRIX": 409,
    "USERNAME_TAKEN": 409,
    "UNKNOWN_MATRIX": 409,
    "ALREADY_REGISTERED": 409,
    "BLOB_TOO_LARGE": 413,
}

_CODE_BY_HTTP_STATUS = {
    400: "VALIDATION",
    401: "UNAUTHENTICATED",
    403: "FORBIDDEN",
    404: "NOT_FOUND",
    405: "METHOD_NOT_ALLOWED",
    413: "BLOB_TOO_LARGE",
}

# Who may call what: "guest" endpoints serve everyone, "member" endpoints
# need any live session (guests get 401), "admin" endpoints additionally
# reject member sessions with 403. Tests enforce that this table covers the
# app's routes exactly.
ACCESS_TABLE = [
    ("POST", "/api/signup", "guest"),
    ("POST", "/api/login", "guest"),
    ("POST", "/api/logout", "guest"),
    ("POST", "/api/password", "member"),
    ("GET", "/api/search", "guest"),
    ("POST", "/api/search/advanced", "member"),
    ("GET", "/api/dissertations/{dissertation_id}", "guest"),
    ("GET", "/api/dissertations/{dissertation_id}/file", "member"),
    ("POST", "/api/dissertations", "admin"),
    ("PATCH", "/api/dissertations/{dissertation_id}", "admin"),
    ("DELETE", "/api/dissertations/{dissertation_id}", "admin"),
    ("GET", "/api/favorites", "member"),
    ("PUT", "/api/favorites/{dissertation_id}", "member"),
    ("POST", "/api/favorites/remove", "member"),
    ("POST", "/api/users", "admin"),
    ("GET", "/api/users", "admin"),
    ("PATCH", "/api/users/{user_id}", "admin"),
    ("DELETE", "/api/users/{user_id}", "admin"),
    ("GET", "/api/health", "guest"),
]

MAX_PAGE_SIZE = 100
DEFAULT_PAGE_SIZE = 20


# -- request bodies ------------------------------------------------------------


class SignupRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    matrix_number: str
    username: str
    password: str
    email: str


class LoginRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    username: str
    password: str


class PasswordChangeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    old_password: str
    new_password: str


class ProvisionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    matrix_number: str
    full_name: str
    degree: str


class UserPatch(BaseModel):
    model_config = ConfigDict(extra="forbid")
    full_name: str | None = None
    matrix_number: str | None = None
    degree: str | None = None
    email: str | None = None


class DissertationPatch(BaseModel):
    model_config = ConfigDict(extra="forbid")
    title: str | None = None
    author_name: str | None = None
    abstract: str | None = None
    keywords: list[str] | None = None
    topic: str | None = None
    degree: str | None = None
    year: int | None = None


class AdvancedSearchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    keywords: str = ""
    author: str | None = None
    topic: str | None = None
    degree: str | None = None
    year_from: int | None = None
    year_to: int | None = None
    offset: int = 0
    limit: int = DEFAULT_PAGE_SIZE


class RemoveFavoritesRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ids: list[str]


# -- serialization ----------------------------------------------------------------


def user_public(raw: dict) -> dict:
    view = {
        "user_id": raw["user_id"],
        "matrix_number": raw["matrix_number"],
        "full_name": raw["full_name"],
        "degree": raw["degree"],
        "role": raw["role"],
        "status": raw["status"],
    }
    if "email" in raw:
        view["email"] = raw["email"]
    if "username" in raw:
        view["username"] = raw["username"]
    return view


def dissertation_public(raw: dict) -> dict:
    return {
        "dissertation_id": raw["dissertation_id"],
        "title": raw["title"],
        "author_name": raw["author_name"],
        "abstract": raw["abstract"],
        "keywords": list(raw["keywords"]),
        "topic": raw["topic"],
        "degree": raw["degree"],
        "year": raw["year"],
        "uploaded_at": raw["uploaded_at"],
        "file": dict(raw["file_ref"]),
    }


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def _page(offset: int, limit: int) -> tuple[int, int]:
    if offset < 0:
        raise ValidationError("offset must not be negative")
    if limit < 1:
        raise ValidationError("limit must be at least 1")
    return offset, min(limit, MAX_PAGE_SIZE)


def _content_disposition(filename: str) -> str:
    fallback = "".join(c if 32 <= ord(c) < 127 and c not in '"\\' else "_" for c in filename)
    quoted = urllib.parse.quote(filename, safe="")
    return f"attachment; filename=\"{fallback}\"; filename*=UTF-8''{quoted}"


def create_app(service: DrsService, cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(docs_url=None, redoc_url=None, openapi_url=None)
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(DrsError)
    async def handle_drs_error(request: Request, exc: DrsError) -> JSONResponse:
        return _error_response(STATUS_BY_CODE.get(exc.code, 500), exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_bad_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response(400, "VALIDATION", "malformed request body or parameters")

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_error(request: Request, exc: StarletteHTTPException) -> JSONResponse:
        code = _CODE_BY_HTTP_STATUS.get(exc.status_code, "ERROR")
        return _error_response(exc.status_code, code, str(exc.detail))

    def current_session(request: Request) -> Session | None:
        """None for guests; a present Authorization header must carry a live
        bearer token or the request fails with 401."""
        header = request.headers.get("authorization")
        if header is None:
            return None
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token.strip():
            raise Unauthenticated("malformed Authorization header")
        return service.auth.authenticate(token.strip())

    def _hits_page(hits: list[SearchHit], offset: int, limit: int) -> dict:
        state = service.store.state
        window = hits[offset : offset + limit]
        return {
            "results": [
                {
                    "score": hit.score,
                    "dissertation": dissertation_public(state.dissertations[hit.dissertation_id]),
                }
                for hit in window
            ],
            "total": len(hits),
            "offset": offset,
            "limit": limit,
        }

    # -- accounts and sessions --------------------------------------------------

    @app.post("/api/signup", status_code=201)
    def signup(body: SignupRequest) -> dict:
        user = service.auth.sign_up(body.matrix_number, body.username, body.password, body.email)
        return user_public(user.to_dict())

    @app.post("/api/login")
    def login(body: LoginRequest) -> dict:
        session = service.auth.login(body.username, body.password)
        user = service.store.state.users[session.user_id]
        return {
            "token": session.token,
            "user_id": session.user_id,
            "role": session.role,
            "username": user.get("username"),
            "expires_at": session.expires_at,
        }

    @app.post("/api/logout")
    def logout(request: Request) -> dict:
        header = request.headers.get("authorization", "")
        _, _, token = header.partition(" ")
        service.auth.logout(token.strip())
        return {"ok": True}

    @app.post("/api/password")
    def change_password(
        body: PasswordChangeRequest, session: Session | None = Depends(current_session)
    ) -> dict:
        service.auth.change_password(session, body.old_password, body.new_password)
        return {"ok": True}

    # -- search -------------------------------------------------------------------

    @app.get("/api/search")
    def search(
        q: str = "",
        offset: int = 0,
        limit: int = DEFAULT_PAGE_SIZE,
        session: Session | None = Depends(current_session),
    ) -> dict:
        offset, limit = _page(offset, limit)
        return _hits_page(service.simple_search(q), offset, limit)

    @app.post("/api/search/advanced")
    def search_advanced(
        body: AdvancedSearchRequest, session: Session | None = Depends(current_session)
    ) -> dict:
        if body.degree is not None:
            validate_degree(body.degree)
        offset, limit = _page(body.offset, body.limit)
        query = AdvancedQuery(
            keywords=tokenize(body.keywords),
            author_substring=body.author.strip() if body.author and body.author.strip() else None,
            topic_substring=body.topic.strip() if body.topic and body.topic.strip() else None,
            degree=body.degree,
            year_from=body.year_from,
            year_to=body.year_to,
        )
        return _hits_page(service.advanced_search(session, query), offset, limit)

    # -- dissertations ------------------------------------------------------------

    @app.get("/api/dissertations/{dissertation_id}")
    def get_dissertation(dissertation_id: str) -> dict:
        return dissertation_public(service.catalog.get_dissertation(dissertation_id).to_dict())

    @app.get("/api/dissertations/{dissertation_id}/file")
    def download(
        dissertation_id: str, session: Session | None = Depends(current_session)
    ) -> Response:
        data, filename, media_type = service.catalog.download(session, dissertation_id)
        return Response(
            content=data,
            media_type=media_type,
            headers={"Content-Disposition": _content_disposition(filename)},
        )

    @app.post("/api/dissertations", status_code=201)
    def upload(
        meta: str = Form(...),
        file: UploadFile = File(...),
        session: Session | None = Depends(current_session),
    ) -> dict:
        try:
            parsed = json.loads(meta)
        except ValueError:
            raise ValidationError("meta part is not valid JSON")
        if not isinstance(parsed, dict):
            raise ValidationError("meta part must be a JSON object")
        record = service.catalog.upload_dissertation(
            session,
            parsed,
            file.file.read(),
            original_filename=file.filename or "",
            media_type=file.content_type or "",
        )
        return dissertation_public(record.to_dict())

    @app.patch("/api/dissertations/{dissertation_id}")
    def edit_dissertation(
        dissertation_id: str,
        body: DissertationPatch,
        session: Session | None = Depends(current_session),
    ) -> dict:
        patch = body.model_dump(exclude_unset=True)
        record = service.catalog.edit_dissertation(session, dissertation_id, patch)
        return dissertation_public(record.to_dict())

    @app.delete("/api/dissertations/{dissertation_id}")
    def delete_dissertation(
        dissertation_id: str, session: Session | None = Depends(current_session)
    ) -> dict:
        service.catalog.delete_dissertation(session, dissertation_id)
        return {"ok": True}

    # -- favorites -----------------------------------------------------------------

    @app.get("/api/favorites")
    def list_favorites(session: Session | None = Depends(current_session)) -> dict:
        records = service.favorites.list_favorites(session)
        return {"results": [dissertation_public(r) for r in records]}

    @app.put("/api/favorites/{dissertation_id}")
    def add_favorite(
        dissertation_id: str, session: Session | None = Depends(current_session)
    ) -> dict:
        favs = service.favorites.add_favorite(session, dissertation_id)
        return {"items": favs.items}

    @app.post("/api/favorites/remove")
    def remove_favorites(
        body: RemoveFavoritesRequest, session: Session | None = Depends(current_session)
    ) -> dict:
        favs = service.favorites.remove_favorites(session, body.ids)
        return {"items": favs.items}

    # -- user administration ----------------------------------------------------------

    @app.post("/api/users", status_code=201)
    def provision_user(
        body: ProvisionRequest, session: Session | None = Depends(current_session)
    ) -> dict:
        user = service.auth.provision_user(session, body.matrix_number, body.full_name, body.degree)
        return user_public(user.to_dict())

    @app.get("/api/users")
    def find_users(
        matrix: str | None = None,
        name: str | None = None,
        offset: int = 0,
        limit: int = DEFAULT_PAGE_SIZE,
        session: Session | None = Depends(current_session),
    ) -> dict:
        offset, limit = _page(offset, limit)
        found = service.auth.find_users(session, matrix_number=matrix, name_substring=name)
        return {
            "results": [user_public(u.to_dict()) for u in found[offset : offset + limit]],
            "total": len(found),
            "offset": offset,
            "limit": limit,
        }

    @app.patch("/api/users/{user_id}")
    def edit_user(
        user_id: str, body: UserPatch, session: Session | None = Depends(current_session)
    ) -> dict:
        patch = body.model_dump(exclude_unset=True)
        user = service.auth.edit_user(session, user_id, patch)
        return user_public(user.to_dict())

    @app.delete("/api/users/{user_id}")
    def delete_user(user_id: str, session: Session | None = Depends(current_session)) -> dict:
        service.auth.delete_user(session, user_id)
        return {"ok": True}

    # -- liveness ---------------------------------------------------------------------

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    return app
