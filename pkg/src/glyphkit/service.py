"""Local HTTP facade over the toolkit for the web UI.

Every endpoint is a thin adapter: parse the request, call the matching
module operation, wrap the result. Errors come back as a JSON envelope
``{"code", "message", "detail"}`` with ``code`` drawn from a closed set so
clients can switch on it. No endpoint normalizes Unicode anywhere; text
fields round-trip scalar-for-scalar.

This is a desk tool: single process, localhost by default, no auth.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import homoglyphs, llm, perturb, probe, questions, session

API_ERROR_CODES = (
    "bad_request",
    "bad_codepoint",
    "bad_plan",
    "decode_error",
    "syntax_error",
    "empty_database",
    "unknown_format",
    "too_large",
    "no_database",
    "unprintable",
    "validation_failed",
    "sequence_error",
    "integrity_error",
    "no_fooled_attempts",
    "unknown_provider",
    "config_error",
    "not_found",
)


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        assert code in API_ERROR_CODES
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail


@dataclass
class ServiceConfig:
    db_path: str | None = None
    session_path: str | None = None
    corpus_path: str | None = None
    mock: bool = False
    ui_dir: str | None = None
    max_upload_bytes: int = 2 * 1024 * 1024


class ServiceState:
    """Mutable pieces behind the endpoints.

    The database swap and session writes take locks; request handlers read
    whatever database reference was current when they started.
    """

    def __init__(self, config: ServiceConfig, transport=None):
        self.config = config
        self.db: homoglyphs.HomoglyphDatabase | None = None
        self.db_lock = threading.Lock()
        self.store = session.SessionStore(config.session_path)
        self.corpus: list[questions.Question] = []
        self.transport = transport
        self.providers: dict[str, object] = {}
        if config.db_path:
            self.db = homoglyphs.load_database(config.db_path)
        if config.corpus_path:
            self.corpus = questions.load_corpus(config.corpus_path)
        if config.mock:
            self.providers["mock"] = llm.make_mock_provider(echo=True)

    def require_db(self) -> homoglyphs.HomoglyphDatabase:
        db = self.db
        if db is None:
            raise ApiException(
                409, "no_database", "no homoglyph database loaded; POST /api/db first"
            )
        return db

    def provider_for(self, name: str):
        if name in self.providers:
            return self.providers[name]
        config = llm.DEFAULT_PROVIDERS.get(name)
        if config is None:
            raise ApiException(
                424, "unknown_provider", f"no provider named {name!r} is configured"
            )
        return llm.HttpProvider(config, transport=self.transport)


def _parse_hex(token: str) -> int:
    try:
        return homoglyphs.parse_codepoint(token)
    except ValueError as exc:
        raise ApiException(400, "bad_codepoint", str(exc)) from exc


async def _json_body(request: Request) -> dict:
    try:
        body = json.loads(await request.body())
    except json.JSONDecodeError as exc:
        raise ApiException(400, "bad_request", f"body is not valid JSON: {exc}")
    if not isinstance(body, dict):
        raise ApiException(400, "bad_request", "body must be a JSON object")
    return body


def _field(body: dict, name: str, kind=str):
    if name not in body:
        raise ApiException(400, "bad_request", f"missing field {name!r}")
    value = body[name]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ApiException(400, "bad_request", f"field {name!r} must be an integer")
    elif not isinstance(value, kind):
        raise ApiException(
            400, "bad_request", f"field {name!r} must be {kind.__name__}"
        )
    return value


def _glyph_entry(state: ServiceState, codepoint: int) -> dict:
    annotation = state.store.probes.annotation(codepoint)
    return {
        "codepoint": homoglyphs.format_codepoint(codepoint),
        "char": chr(codepoint),
        "readability": annotation.readability.value,
        "recognizability": {
            model: value.value for model, value in annotation.recognizability.items()
        },
    }


def _stats_payload(state: ServiceState, model: str) -> dict:
    try:
        attempts = state.store.attempts_to_fool(model)
        chars = state.store.perturbed_chars_stats(model)
    except session.NoFooledAttempts as exc:
        raise ApiException(
            404,
            "no_fooled_attempts",
            str(exc),
            detail={"questions": list(exc.questions)},
        ) from exc
    if state.corpus:
        qchars = questions.question_stats(state.corpus).to_dict()
    else:
        seen: dict[str, int] = {}
        for attempt in state.store.attempts():
            seen.setdefault(attempt.question_id, len(attempt.source_text))
        qchars = session.summarize(seen.values()).to_dict() if seen else None
    return {
        "model": model,
        "attempts_to_fool": attempts.to_dict(),
        "perturbed_chars": chars.to_dict(),
        "question_chars": qchars,
    }


def create_app(
    config: ServiceConfig | None = None,
    *,
    transport=None,
) -> FastAPI:
    """Build the FastAPI app; ``transport`` injects an httpx transport for tests."""
    state = ServiceState(config or ServiceConfig(), transport=transport)
    app = FastAPI(title="glyphkit", docs_url=None, redoc_url=None)
    app.state.glyphkit = state

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiException)
    async def _api_error(_request, exc: ApiException):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )

    @app.get("/api/health")
    async def health():
        return {"status": "ok", "db_loaded": state.db is not None}

    # -- database ----------------------------------------------------

    @app.post("/api/db")
    async def upload_db(request: Request, format: str = "auto"):
        data = await request.body()
        if len(data) > state.config.max_upload_bytes:
            raise ApiException(
                413,
                "too_large",
                f"database file exceeds {state.config.max_upload_bytes} bytes",
            )
        if format == "auto":
            try:
                format = homoglyphs.detect_format(data)
            except homoglyphs.DecodeError as exc:
                raise ApiException(400, "decode_error", str(exc)) from exc
        elif format not in homoglyphs.FORMATS:
            raise ApiException(400, "unknown_format", f"unknown format {format!r}")
        try:
            db = homoglyphs.parse_homoglyph_file(data, format)
        except homoglyphs.DecodeError as exc:
            raise ApiException(400, "decode_error", str(exc)) from exc
        except homoglyphs.DatabaseSyntaxError as exc:
            raise ApiException(
                400, "syntax_error", str(exc), detail={"line_number": exc.line_number}
            ) from exc
        except homoglyphs.EmptyDatabaseError as exc:
            raise ApiException(400, "empty_database", str(exc)) from exc
        with state.db_lock:
            state.db = db
        return {
            "groups": len(db),
            "merged_groups": db.merged_group_count,
            "skipped_rows": db.skipped_rows,
        }

    @app.get("/api/db")
    async def db_summary():
        db = state.require_db()
        return {
            "groups": len(db),
            "merged_groups": db.merged_group_count,
            "skipped_rows": db.skipped_rows,
        }

    @app.get("/api/homoglyphs/{hex_codepoint}")
    async def homoglyph_lookup(hex_codepoint: str):
        codepoint = _parse_hex(hex_codepoint)
        db = state.require_db()
        group = db.group_of(codepoint)
        return {
            "codepoint": homoglyphs.format_codepoint(codepoint),
            "char": chr(codepoint),
            "group_id": None if group is None else group.id,
            "canonical": (
                None
                if group is None
                else homoglyphs.format_codepoint(group.canonical)
            ),
            "homoglyphs": [
                _glyph_entry(state, alt) for alt in db.lookup(codepoint)
            ],
        }

    @app.get("/api/candidates/{hex_codepoint}")
    async def candidates(hex_codepoint: str, model: str):
        codepoint = _parse_hex(hex_codepoint)
        db = state.require_db()
        picks = probe.effective_candidates(db, state.store.probes, codepoint, model)
        return {
            "codepoint": homoglyphs.format_codepoint(codepoint),
            "model": model,
            "candidates": [_glyph_entry(state, cp) for cp in picks],
        }

    # -- perturbation ------------------------------------------------

    @app.post("/api/perturb")
    async def perturb_text(request: Request):
        body = await _json_body(request)
        text = _field(body, "text")
        db = state.require_db()
        try:
            plan = perturb.plan_from_json(_field(body, "plan", dict))
        except ValueError as exc:
            raise ApiException(400, "bad_plan", str(exc)) from exc
        violations = perturb.validate_plan(db, text, plan)
        if violations:
            raise ApiException(
                422,
                "validation_failed",
                "plan does not validate against the text",
                detail={
                    "violations": [
                        {"rule": v.rule, "position": v.position, "message": v.message}
                        for v in violations
                    ]
                },
            )
        result = perturb.apply_plan(db, text, plan)
        return {
            "text": result,
            "perturbed_char_count": perturb.count_perturbed_chars(text, result),
        }

    # -- probes ------------------------------------------------------

    @app.get("/api/probe-prompt/{hex_codepoint}")
    async def probe_prompt(hex_codepoint: str):
        codepoint = _parse_hex(hex_codepoint)
        try:
            prompt = probe.make_probe_prompt(codepoint)
        except probe.UnprintableError as exc:
            raise ApiException(400, "unprintable", str(exc)) from exc
        return PlainTextResponse(prompt, media_type="text/plain; charset=utf-8")

    @app.post("/api/probes", status_code=201)
    async def record_probe(request: Request):
        body = await _json_body(request)
        try:
            result = probe.ProbeResult(
                codepoint=_parse_hex(str(body.get("codepoint"))),
                model=_field(body, "model"),
                prompt=body.get("prompt", ""),
                response_excerpt=body.get("response_excerpt", ""),
                verdict=probe.ProbeVerdict(_field(body, "verdict")),
                timestamp=body.get("timestamp") or probe.now_iso(),
                auto=bool(body.get("auto", False)),
            )
        except ValueError as exc:
            raise ApiException(400, "bad_request", str(exc)) from exc
        state.store.record_probe(result)
        return probe.probe_to_record(result)

    @app.post("/api/annotations/readability", status_code=201)
    async def rate_readability(request: Request):
        body = await _json_body(request)
        codepoint = _parse_hex(str(body.get("codepoint")))
        try:
            rating = homoglyphs.Readability(_field(body, "readability"))
        except ValueError as exc:
            raise ApiException(400, "bad_request", str(exc)) from exc
        state.store.rate_readability(codepoint, rating)
        return {
            "codepoint": homoglyphs.format_codepoint(codepoint),
            "readability": rating.value,
        }

    # -- LLM ----------------------------------------------------------

    @app.post("/api/llm")
    async def send_llm(request: Request):
        body = await _json_body(request)
        provider_name = _field(body, "provider")
        prompt = _field(body, "prompt")
        if not prompt:
            raise ApiException(400, "bad_request", "prompt must be non-empty")
        provider = state.provider_for(provider_name)
        try:
            exchange = llm.send_prompt(provider, prompt)
        except llm.ConfigError as exc:
            raise ApiException(424, "config_error", str(exc)) from exc
        return llm.exchange_to_dict(exchange)

    # -- sessions ------------------------------------------------------

    @app.post("/api/sessions/attempts", status_code=201)
    async def record_attempt(request: Request):
        body = await _json_body(request)
        try:
            plan = perturb.plan_from_json(_field(body, "plan", dict))
        except ValueError as exc:
            raise ApiException(400, "bad_plan", str(exc)) from exc
        exchange_body = body.get("exchange")
        try:
            attempt = session.Attempt(
                question_id=_field(body, "question_id"),
                model=_field(body, "model"),
                attempt_number=_field(body, "attempt_number", int),
                source_text=_field(body, "source_text"),
                perturbed_text=_field(body, "perturbed_text"),
                plan=plan,
                perturbed_char_count=_field(body, "perturbed_char_count", int),
                verdict=session.AttemptVerdict(_field(body, "verdict")),
                timestamp=body.get("timestamp") or probe.now_iso(),
                exchange=(
                    None
                    if exchange_body is None
                    else llm.exchange_from_dict(exchange_body)
                ),
                bias_note=body.get("bias_note"),
            )
        except (KeyError, ValueError) as exc:
            raise ApiException(400, "bad_request", str(exc)) from exc
        try:
            state.store.record_attempt(attempt)
        except session.SequenceError as exc:
            raise ApiException(409, "sequence_error", str(exc)) from exc
        except session.IntegrityError as exc:
            raise ApiException(422, "integrity_error", str(exc)) from exc
        return {
            "recorded": True,
            "question_id": attempt.question_id,
            "model": attempt.model,
            "attempt_number": attempt.attempt_number,
        }

    @app.get("/api/sessions/attempts")
    async def list_attempts(question_id: str | None = None, model: str | None = None):
        return {
            "attempts": [
                session.attempt_to_record(a)
                for a in state.store.attempts(question_id=question_id, model=model)
            ]
        }

    @app.get("/api/stats")
    async def stats(model: str):
        return _stats_payload(state, model)

    @app.get("/api/reference-stats")
    async def reference_stats():
        ref = session.load_reference_stats()
        return {
            "question_chars": ref["question_chars"].to_dict(),
            "attempts_to_fool": {
                m: s.to_dict() for m, s in ref["attempts_to_fool"].items()
            },
            "perturbed_chars": {
                m: s.to_dict() for m, s in ref["perturbed_chars"].items()
            },
        }

    # -- static UI ------------------------------------------------------

    ui_dir = state.config.ui_dir
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if bundled.is_dir():
            ui_dir = str(bundled)
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
