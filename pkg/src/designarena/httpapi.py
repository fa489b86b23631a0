"""HTTP surface over ArenaCore.

Thin by design: parse, authenticate, delegate, translate errors into
problem documents with a stable ``code`` field. Raters authenticate with
a Bearer session token; admin endpoints take X-Admin-Token. Artifacts
are relayed through the same-origin proxy so source URLs never reach a
client.
"""

from __future__ import annotations

import mimetypes
import os

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse

from .config import parse_config
from .errors import (
    AdminAuthError,
    ArenaError,
    AuthError,
    ConfigError,
    ConfigLockedError,
    CorruptLogError,
    DomainError,
    NoEligiblePairError,
    NotFoundError,
    QuotaError,
    SessionClosedError,
    StaleMatchError,
    UnviewedVoteError,
    ValidationError,
)
from .leaderboard import render_csv, render_text
from .service import ArenaCore

__all__ = ["create_app", "STATUS_BY_ERROR"]

STATUS_BY_ERROR = {
    AuthError: 401,
    AdminAuthError: 401,
    QuotaError: 403,
    NotFoundError: 404,
    SessionClosedError: 409,
    StaleMatchError: 409,
    ConfigLockedError: 409,
    NoEligiblePairError: 409,
    CorruptLogError: 409,
    ValidationError: 422,
    UnviewedVoteError: 422,
    ConfigError: 422,
    DomainError: 422,
}


def _status_for(exc: ArenaError) -> int:
    for klass, status in STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    return 500


def _problem(exc: ArenaError) -> JSONResponse:
    doc = {"code": exc.code, "detail": str(exc)}
    fields = getattr(exc, "fields", None)
    if fields:
        doc["fields"] = list(fields)
    offset = getattr(exc, "offset", None)
    if offset is not None:
        doc["offset"] = offset
    return JSONResponse(doc, status_code=_status_for(exc))


async def _body(request: Request) -> dict:
    try:
        doc = await request.json()
    except Exception:
        raise ValidationError("request body must be a JSON object", fields=["body"]) from None
    if not isinstance(doc, dict):
        raise ValidationError("request body must be a JSON object", fields=["body"])
    return doc


def _bearer(request: Request) -> str:
    header = request.headers.get("authorization", "")
    if not header.startswith("Bearer "):
        raise AuthError("missing bearer token")
    return header[len("Bearer ") :].strip()


def create_app(core: ArenaCore) -> FastAPI:
    app = FastAPI(title="designarena", docs_url=None, redoc_url=None)
    app.state.core = core

    @app.exception_handler(ArenaError)
    async def _arena_error(_request, exc: ArenaError):
        return _problem(exc)

    @app.post("/onboard")
    async def onboard(request: Request):
        doc = await _body(request)
        missing = [k for k in ("access_code", "first_name", "last_name", "roles", "used_ai_tools_before") if k not in doc]
        if missing:
            raise ValidationError("missing onboarding fields", fields=missing)
        return core.onboard(
            doc["access_code"],
            doc["first_name"],
            doc["last_name"],
            doc["roles"],
            doc["used_ai_tools_before"],
        )

    @app.post("/session/start")
    async def session_start(request: Request):
        return core.start_session(_bearer(request))

    @app.get("/match")
    async def get_match(request: Request):
        return core.get_match(_bearer(request))

    @app.post("/vote")
    async def vote(request: Request):
        token = _bearer(request)
        doc = await _body(request)
        missing = [k for k in ("match_id", "choice", "full_view_acknowledged") if k not in doc]
        if missing:
            raise ValidationError("missing vote fields", fields=missing)
        return core.submit_vote(
            token,
            doc["match_id"],
            doc["choice"],
            doc["full_view_acknowledged"],
            doc.get("latency_ms", 0),
        )

    @app.get("/leaderboard")
    async def leaderboard():
        return {"rows": core.leaderboard_rows(admin=False)}

    def _admin(request: Request) -> None:
        token = request.headers.get("x-admin-token", "")
        if not core.config.admin_token or token != core.config.admin_token:
            raise AdminAuthError("admin token required")

    @app.get("/admin/leaderboard")
    async def admin_leaderboard(request: Request):
        _admin(request)
        return {"rows": core.leaderboard_rows(admin=True)}

    @app.post("/admin/config")
    async def admin_config(request: Request):
        _admin(request)
        if core.event_count > 0:
            raise ConfigLockedError("config is locked once votes exist")
        doc = await _body(request)
        core.replace_config(parse_config(doc))
        return {"applied": True, "tools": len(core.config.tools), "prompts": len(core.config.prompts)}

    @app.get("/admin/export")
    async def admin_export(request: Request, kind: str = "leaderboard", format: str = "csv"):
        _admin(request)
        if kind == "log":
            return PlainTextResponse(core.export_log(), media_type="application/x-ndjson")
        if kind != "leaderboard":
            raise ValidationError(f"kind must be leaderboard or log, got {kind!r}", fields=["kind"])
        rows = core.leaderboard_table()
        if format == "csv":
            return PlainTextResponse(render_csv(rows), media_type="text/csv; charset=utf-8")
        if format == "table":
            return PlainTextResponse(render_text(rows), media_type="text/plain; charset=utf-8")
        raise ValidationError(f"format must be csv or table, got {format!r}", fields=["format"])

    @app.get("/artifact/{slot_token}")
    async def artifact(slot_token: str):
        source = core.artifact_for_token(slot_token)
        if source.startswith(("http://", "https://")):
            async with httpx.AsyncClient(follow_redirects=True, timeout=20.0) as client:
                upstream = await client.get(source)
            media = upstream.headers.get("content-type", "text/html; charset=utf-8")
            return Response(content=upstream.content, media_type=media, status_code=upstream.status_code)
        if not os.path.isfile(source):
            raise NotFoundError("artifact bundle missing on disk")
        media = mimetypes.guess_type(source)[0] or "text/html"
        with open(source, "rb") as fh:
            return Response(content=fh.read(), media_type=media)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "events": core.event_count}

    return app
