"""Engine sessions and the evaluation/ranking operations built on them."""

from __future__ import annotations

import logging
import shlex
import threading
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from ..core import Board, Move, apply_move, emit_fen, is_checkmate, legal_moves, parse_uci_move
from ..core.board import IllegalMoveError
from ..core.types import UciMoveError
from .cache import TranscriptCache, make_key
from .scores import CentipawnScore
from .uci import (
    EngineError,
    EngineProtocolError,
    SearchReply,
    UciProcess,
    summarize,
)

log = logging.getLogger(__name__)


class EngineCacheMiss(EngineError):
    """Replay-only session asked for a position not in the transcript cache."""


@dataclass(frozen=True)
class EngineConfig:
    """How to run and query an engine. Exactly one of ``depth``/``movetime_ms`` is set.

    ``rank_depth`` is the fixed depth used by :func:`rank_moves` when the
    session is otherwise time-limited, since scores from separately searched
    move chunks are only comparable at equal depth.
    """

    executable: Union[str, Tuple[str, ...]]
    depth: Optional[int] = None
    movetime_ms: Optional[int] = None
    multipv_max: int = 256
    hash_mb: int = 16
    threads: int = 1
    startup_timeout_ms: int = 10000
    search_timeout_ms: int = 120000
    rank_depth: int = 12

    def __post_init__(self):
        if (self.depth is None) == (self.movetime_ms is None):
            raise ValueError("set exactly one of depth or movetime_ms")
        for name in ("multipv_max", "hash_mb", "threads", "startup_timeout_ms", "search_timeout_ms", "rank_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.movetime_ms is not None and self.movetime_ms < 1:
            raise ValueError("movetime_ms must be >= 1")
        if isinstance(self.executable, list):
            object.__setattr__(self, "executable", tuple(self.executable))

    @property
    def argv(self) -> List[str]:
        if isinstance(self.executable, str):
            return shlex.split(self.executable)
        return list(self.executable)

    @property
    def go(self) -> str:
        return f"depth {self.depth}" if self.depth is not None else f"movetime {self.movetime_ms}"

    @property
    def rank_go(self) -> str:
        return f"depth {self.depth if self.depth is not None else self.rank_depth}"

    @property
    def deterministic(self) -> bool:
        return self.depth is not None and self.threads == 1

    def to_dict(self) -> dict:
        return {
            "executable": self.executable if isinstance(self.executable, str) else list(self.executable),
            "depth": self.depth,
            "movetime_ms": self.movetime_ms,
            "multipv_max": self.multipv_max,
            "hash_mb": self.hash_mb,
            "threads": self.threads,
            "startup_timeout_ms": self.startup_timeout_ms,
            "search_timeout_ms": self.search_timeout_ms,
            "rank_depth": self.rank_depth,
        }


@dataclass(frozen=True)
class MoveEvaluation:
    """A legal move with its score (root side-to-move perspective) and principal variation."""

    move: Move
    score: CentipawnScore
    pv: Tuple[Move, ...] = field(default=())


class LineResult(NamedTuple):
    moves: List[Move]
    end_score: CentipawnScore  # original side-to-move perspective
    terminal: bool
    end_board: Board


class EngineSession:
    """One engine process (or none, for replay) plus an optional transcript cache.

    A session serves one caller at a time; use a :class:`SessionPool` for
    concurrency.
    """

    def __init__(self, config: EngineConfig, process: Optional[UciProcess] = None,
                 cache: Optional[TranscriptCache] = None):
        self.config = config
        self.process = process
        self.cache = cache
        self._multipv = 1
        self._lock = threading.Lock()
        self.queries = 0
        self.engine_calls = 0

    @property
    def engine_id(self) -> Optional[str]:
        if self.process is not None and self.process.id_name:
            return self.process.id_name
        return self.cache.engine_id if self.cache is not None else None

    @property
    def alive(self) -> bool:
        return self.process is None or self.process.alive

    def search(self, board: Board, multipv: int = 1, searchmoves: Optional[Sequence[str]] = None,
               go: Optional[str] = None) -> SearchReply:
        go = go or self.config.go
        fen = emit_fen(board)
        key = make_key(fen, go, multipv, searchmoves)
        with self._lock:
            self.queries += 1
            lines = self.cache.get(key) if self.cache is not None else None
            if lines is None:
                if self.process is None:
                    raise EngineCacheMiss(f"no cached reply for {key!r}")
                lines = self._run(fen, go, multipv, searchmoves)
                if self.cache is not None:
                    self.cache.put(key, lines)
        return summarize(lines)

    def _run(self, fen, go, multipv, searchmoves) -> List[str]:
        proc = self.process
        assert proc is not None
        self.engine_calls += 1
        if multipv != self._multipv:
            proc.set_option("MultiPV", multipv)
            self._multipv = multipv
        proc.send(f"position fen {fen}")
        cmd = f"go {go}"
        if searchmoves:
            cmd += " searchmoves " + " ".join(searchmoves)
        proc.send(cmd)
        timeout = self.config.search_timeout_ms / 1000.0
        lines = proc.read_until(lambda s: s.startswith("bestmove"), timeout)
        # keep only what scoring needs; timing fields would break byte-stable caches
        return [_strip_volatile(s) for s in lines if s.startswith(("info", "bestmove")) and " string " not in s]

    def close(self) -> None:
        if self.process is not None:
            self.process.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_VOLATILE = {"time", "nps", "hashfull", "cpuload", "tbhits"}


def _strip_volatile(line: str) -> str:
    if not line.startswith("info"):
        return line
    toks = line.split()
    out = []
    i = 0
    while i < len(toks):
        if toks[i] in _VOLATILE and i + 1 < len(toks):
            i += 2
            continue
        if toks[i] == "pv":
            out.extend(toks[i:])
            break
        out.append(toks[i])
        i += 1
    return " ".join(out)


def start_session(config: EngineConfig, cache: Optional[TranscriptCache] = None) -> EngineSession:
    """Spawn the engine and complete the UCI handshake."""
    proc = UciProcess(config.argv, startup_timeout=config.startup_timeout_ms / 1000.0)
    try:
        proc.handshake()
        for name, value in (("Hash", config.hash_mb), ("Threads", config.threads)):
            if name.lower() in proc.options:
                proc.set_option(name, value)
            elif not (name == "Threads" and value == 1):
                log.warning("engine has no %s option; ignoring", name)
        proc.ready()
    except EngineError:
        proc.kill()
        raise
    if not config.deterministic:
        log.warning("engine searches are not reproducible (movetime or threads > 1)")
    if cache is not None and cache.engine_id is None:
        cache.engine_id = proc.id_name
    session = EngineSession(config, proc, cache)
    return session


def replay_session(config: EngineConfig, cache: TranscriptCache) -> EngineSession:
    """A session that answers only from the transcript cache."""
    return EngineSession(config, None, cache)


def _legal_prefix(board: Board, uci_moves: Sequence[str]) -> List[Move]:
    out = []
    for text in uci_moves:
        try:
            mv = parse_uci_move(text)
            board = apply_move(board, mv)
        except (UciMoveError, IllegalMoveError):
            break
        out.append(mv)
    return out


def _terminal_score(board: Board) -> Optional[CentipawnScore]:
    if legal_moves(board):
        return None
    return CentipawnScore.checkmated() if is_checkmate(board) else CentipawnScore(0)


def _info_score(info) -> CentipawnScore:
    return CentipawnScore.from_uci(info.score_kind, info.score_value)


def evaluate(session: EngineSession, board: Board) -> CentipawnScore:
    """V_engine(board) from the side to move's perspective.

    Checkmate and stalemate are answered without asking the engine.
    """
    term = _terminal_score(board)
    if term is not None:
        return term
    reply = session.search(board, multipv=1)
    info = reply.lines.get(1)
    if info is None:
        raise EngineProtocolError(f"engine gave no score for {emit_fen(board)}")
    return _info_score(info)


def score_key(ev: MoveEvaluation):
    """Best-first sort key: higher value first, ties by UCI text."""
    return (-ev.score.value, ev.move.uci())


def rank_moves(session: EngineSession, board: Board) -> List[MoveEvaluation]:
    """Every legal move with an engine score, best first.

    Runs a depth-limited MultiPV search covering all legal moves, split into
    ``searchmoves`` chunks of at most ``multipv_max`` moves when needed.
    """
    legal = legal_moves(board)
    if not legal:
        raise ValueError(f"no legal moves in {emit_fen(board)}")
    texts = [m.uci() for m in legal]
    go = session.config.rank_go
    cap = session.config.multipv_max
    found: dict = {}

    def absorb(reply):
        for info in reply.lines.values():
            pv = _legal_prefix(board, info.pv)
            if pv and pv[0].uci() in texts and pv[0].uci() not in found:
                found[pv[0].uci()] = MoveEvaluation(pv[0], _info_score(info), tuple(pv))

    if len(texts) <= cap:
        absorb(session.search(board, multipv=len(texts), go=go))
    else:
        for i in range(0, len(texts), cap):
            chunk = texts[i:i + cap]
            absorb(session.search(board, multipv=len(chunk), searchmoves=chunk, go=go))
    missing = [t for t in texts if t not in found]
    if missing and len(texts) <= cap:
        for i in range(0, len(missing), cap):
            chunk = missing[i:i + cap]
            absorb(session.search(board, multipv=len(chunk), searchmoves=chunk, go=go))
        missing = [t for t in texts if t not in found]
    if missing:
        raise EngineProtocolError(f"engine omitted legal moves {missing} in {emit_fen(board)}")
    return sorted(found.values(), key=score_key)


def best_line(session: EngineSession, board: Board, plies: int) -> LineResult:
    """Engine-optimal line of exactly ``plies`` moves (shorter if the game ends).

    The principal variation of each search is followed as far as it goes and
    re-searched from the position where it runs out. ``end_score`` is the
    evaluation of the final position from the original mover's perspective,
    computed with :func:`evaluate` so it matches an independent re-evaluation.
    """
    if plies < 1:
        raise ValueError("plies must be >= 1")
    if not legal_moves(board):
        raise ValueError("game is already over")
    line: List[Move] = []
    cur = board
    terminal = False
    while len(line) < plies:
        if not legal_moves(cur):
            terminal = True
            break
        reply = session.search(cur, multipv=1)
        info = reply.lines.get(1)
        pv = _legal_prefix(cur, info.pv if info is not None else [])
        if not pv and reply.bestmove:
            pv = _legal_prefix(cur, [reply.bestmove])
        if not pv:
            raise EngineProtocolError(f"engine returned no legal move for {emit_fen(cur)}")
        for mv in pv[: plies - len(line)]:
            cur = apply_move(cur, mv)
            line.append(mv)
    if not terminal and not legal_moves(cur):
        terminal = True
    end = evaluate(session, cur)
    if cur.turn is not board.turn:
        end = end.flipped()
    return LineResult(line, end, terminal, cur)


def engine_perft(session: EngineSession, board: Board, depth: int) -> int:
    """Leaf count reported by the engine's own ``go perft`` command."""
    proc = session.process
    if proc is None:
        raise EngineError("perft needs a live engine")
    with session._lock:
        proc.send(f"position fen {emit_fen(board)}")
        proc.send(f"go perft {depth}")
        lines = proc.read_until(lambda s: s.startswith("Nodes searched"), session.config.search_timeout_ms / 1000.0)
    return int(lines[-1].split(":")[1])
