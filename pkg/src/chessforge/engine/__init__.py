"""UCI engine client: sessions, scores, move ranking and principal lines."""

from .cache import TranscriptCache, make_key
from .pool import PoolExhausted, SessionPool
from .scores import MATE_BASE, CentipawnScore, mate_to_centipawn
from .session import (
    EngineCacheMiss,
    EngineConfig,
    EngineSession,
    LineResult,
    MoveEvaluation,
    best_line,
    engine_perft,
    evaluate,
    rank_moves,
    replay_session,
    score_key,
    start_session,
)
from .uci import (
    EngineDiedError,
    EngineError,
    EngineOptionError,
    EngineProtocolError,
    EngineSpawnError,
    EngineTimeoutError,
    parse_info,
)


def mini_engine_command() -> list:
    """argv that starts the bundled mini engine with the current interpreter."""
    import sys

    return [sys.executable, "-m", "chessforge.engine.mini"]


__all__ = [name for name in dir() if not name.startswith("_")]
