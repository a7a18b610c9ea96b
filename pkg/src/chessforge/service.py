"""HTTP reward endpoint for external RL trainers.

``POST /score`` takes ``{kind, fen, candidates?, target_square?, answer_key?,
response_text, reward_mode?, id?}`` and returns ``{reward, report}``.
``GET /health`` reports engine-pool status.

Status codes: 400 malformed body (bad JSON, missing or mistyped fields,
unparseable FEN or UCI), 422 well-formed but invalid task (e.g. four
candidates, target square not holding a piece of the side to move),
503 no engine session or request slot free in time, 500 engine failure
(the failed session is restarted on its next checkout). A request that
outlives ``request_timeout_s`` also gets 503.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.concurrency import run_in_threadpool

from .core import FenError, Square, UciMoveError, legal_moves_for_square, parse_fen, parse_uci_move
from .engine import EngineError, PoolExhausted, SessionPool
from .evals import EvalTask, ScoreReport, TaskInvariantError, TaskKind, score_task

log = logging.getLogger(__name__)

ENGINE_KINDS = {TaskKind.PREDICT_MOVE}


class BadRequest(ValueError):
    pass


def _opt_str(body: dict, name: str) -> Optional[str]:
    v = body.get(name)
    if v is not None and not isinstance(v, str):
        raise BadRequest(f"{name} must be a string")
    return v


def parse_score_request(body) -> tuple:
    """Validate a /score body into ``(task, response_text, reward_mode)``.

    Raises :class:`BadRequest` for malformed input and
    :class:`TaskInvariantError` for tasks that violate their invariants.
    """
    if not isinstance(body, dict):
        raise BadRequest("body must be a JSON object")
    for name in ("kind", "fen", "response_text"):
        if not isinstance(body.get(name), str):
            raise BadRequest(f"{name} is required and must be a string")
    try:
        kind = TaskKind(body["kind"])
    except ValueError:
        raise BadRequest(f"unknown kind {body['kind']!r}") from None
    try:
        board = parse_fen(body["fen"])
    except FenError as exc:
        raise BadRequest(f"bad fen: {exc}") from None
    cands = body.get("candidates")
    if cands is not None and not (isinstance(cands, list) and all(isinstance(c, str) for c in cands)):
        raise BadRequest("candidates must be a list of UCI strings")
    mode = body.get("reward_mode", "rank")
    if mode not in ("rank", "centipawn_delta"):
        raise BadRequest("reward_mode must be rank or centipawn_delta")
    target = _opt_str(body, "target_square")
    task_id = body.get("id", "")
    if not isinstance(task_id, (str, int)):
        raise BadRequest("id must be a string")
    try:
        moves = tuple(parse_uci_move(c) for c in (cands or ()))
        sq = Square.parse(target) if target else None
    except (UciMoveError, ValueError) as exc:
        raise BadRequest(str(exc)) from None
    raw_key = body.get("answer_key")
    key = None
    try:
        if kind is TaskKind.LEGAL_MOVES:
            if raw_key is None:
                if sq is None:
                    raise TaskInvariantError("legal_moves tasks need a target square")
                piece = board.piece_at(sq)
                if piece is None or piece.color is not board.turn:
                    raise TaskInvariantError("target square must hold a piece of the side to move")
                key = frozenset(legal_moves_for_square(board, sq))
            elif isinstance(raw_key, list) and all(isinstance(m, str) for m in raw_key):
                key = frozenset(parse_uci_move(m) for m in raw_key)
            else:
                raise BadRequest("answer_key must be a list of UCI strings for legal_moves")
        elif raw_key is not None:
            if not isinstance(raw_key, str):
                raise BadRequest("answer_key must be a UCI string")
            key = parse_uci_move(raw_key)
    except UciMoveError as exc:
        raise BadRequest(str(exc)) from None
    if kind in (TaskKind.BEST_MOVE, TaskKind.WORST_MOVE) and key is None:
        raise BadRequest("choice tasks need answer_key")
    task = EvalTask(kind, board, moves, sq, key, {}, str(task_id))
    return task, body["response_text"], mode


def create_app(pool: Optional[SessionPool], max_concurrent: int = 64, request_timeout_s: float = 30.0,
               checkout_timeout_s: Optional[float] = 5.0, engine_id=None) -> FastAPI:
    app = FastAPI(title="chessforge reward service")
    slots = threading.BoundedSemaphore(max_concurrent)
    app.state.pool = pool

    def run(task, text, mode) -> ScoreReport:
        if task.kind not in ENGINE_KINDS:
            return score_task(task, text)
        if pool is None:
            raise EngineError("no engine configured")
        with pool.session(timeout=checkout_timeout_s) as sess:
            return score_task(task, text, sess, mode)

    @app.post("/score")
    async def score_endpoint(request: Request):
        try:
            body = await request.json()
        except ValueError:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        try:
            task, text, mode = parse_score_request(body)
        except BadRequest as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        except TaskInvariantError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        if not slots.acquire(timeout=0):
            return JSONResponse({"error": "too many concurrent requests"}, status_code=503)
        try:
            report = await asyncio.wait_for(run_in_threadpool(run, task, text, mode), request_timeout_s)
        except asyncio.TimeoutError:
            return JSONResponse({"error": f"request exceeded {request_timeout_s}s"}, status_code=503)
        except PoolExhausted as exc:
            return JSONResponse({"error": str(exc)}, status_code=503)
        except EngineError as exc:
            log.error("engine failure: %s", exc)
            return JSONResponse({"error": f"engine failure: {exc}"}, status_code=500)
        finally:
            slots.release()
        return {"reward": report.reward, "report": report.to_dict()}

    @app.get("/health")
    def health():
        eid = engine_id() if callable(engine_id) else engine_id
        return {"status": "ok", "engine": eid, "pool": pool.status() if pool is not None else None}

    return app


def serve(config, host: Optional[str] = None, port: Optional[int] = None) -> None:
    """Run the service with uvicorn until interrupted."""
    import uvicorn

    from .runner import EngineHandle

    handle = EngineHandle(config)
    svc = config.service
    app = create_app(handle.pool, int(svc.get("max_concurrent", 64)), float(svc.get("request_timeout_s", 30.0)),
                     svc.get("checkout_timeout_s", 5.0), lambda: handle.engine_id)
    try:
        uvicorn.run(app, host=host or svc.get("host", "127.0.0.1"), port=int(port or svc.get("port", 8000)),
                    log_level="info")
    finally:
        handle.close()
