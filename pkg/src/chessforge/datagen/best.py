"""Best Move and Best Line samples."""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .. import prompts
from ..board_format import BoardFormat, render_prompt_board
from ..core import Board, legal_moves
from ..engine import EngineSession, best_line, evaluate, rank_moves
from .samples import Sample, SampleTask

LINE_PLIES = (4, 5, 6)


def _engine_meta(session: EngineSession) -> dict:
    return {"go": session.config.go, "rank_go": session.config.rank_go, "engine": session.engine_id}


def gen_best_move(board: Board, session: EngineSession, fmt: BoardFormat = BoardFormat.VISUAL_ASCII,
                  seed: Optional[int] = None) -> Sample:
    """Prompt with the board; the response is the engine's top move and nothing else."""
    if not legal_moves(board):
        raise ValueError("best_move needs a nonterminal board")
    top = rank_moves(session, board)[0]
    prompt = prompts.render("best_move", board=render_prompt_board(board, fmt))
    meta = {"seed": seed, "format": BoardFormat(fmt).value, "score": top.score.value, **_engine_meta(session)}
    return Sample(prompt, top.move.uci(), SampleTask.BEST_MOVE, board.fen(), meta)


def format_line_response(moves: Sequence[str], delta: int) -> str:
    return " ".join(moves) + f" delta: {delta:+d}"


def gen_best_line(board: Board, session: EngineSession, rng: random.Random,
                  fmt: BoardFormat = BoardFormat.VISUAL_ASCII, seed: Optional[int] = None) -> Sample:
    """Engine line of 4 to 6 plies plus the centipawn delta for the side to move.

    delta = V(end) - V(start), both from the original mover's perspective.
    A line cut short by mate or stalemate is flagged in ``meta["truncated"]``.
    """
    if not legal_moves(board):
        raise ValueError("best_line needs a nonterminal board")
    plies = rng.choice(LINE_PLIES)
    start = evaluate(session, board)
    res = best_line(session, board, plies)
    delta = res.end_score.value - start.value
    moves = [m.uci() for m in res.moves]
    prompt = prompts.render("best_line", board=render_prompt_board(board, fmt), plies=plies)
    meta = {
        "seed": seed,
        "format": BoardFormat(fmt).value,
        "plies": plies,
        "line": moves,
        "start_eval": start.value,
        "end_eval": res.end_score.value,
        "delta": delta,
        "truncated": len(moves) < plies,
        **_engine_meta(session),
    }
    return Sample(prompt, format_line_response(moves, delta), SampleTask.BEST_LINE, board.fen(), meta)
