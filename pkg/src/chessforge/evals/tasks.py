"""Evaluation task construction and task-file records."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Tuple, Union

from .. import prompts
from ..board_format import BoardFormat, render_prompt_board
from ..core import (
    Board,
    Move,
    PieceKind,
    Square,
    apply_move,
    is_checkmate,
    legal_moves,
    legal_moves_for_square,
    parse_fen,
    parse_uci_move,
)
from ..engine import EngineSession, rank_moves

DEFAULT_QUALITY_THRESHOLD_CP = 100
N_CANDIDATES = 5


class TaskKind(str, enum.Enum):
    PREDICT_MOVE = "predict_move"
    BEST_MOVE = "best_move"
    WORST_MOVE = "worst_move"
    LEGAL_MOVES = "legal_moves"
    OOD_MATE = "ood_mate"


CHOICE_KINDS = (TaskKind.BEST_MOVE, TaskKind.WORST_MOVE)


class TaskError(ValueError):
    """Task cannot be built on this board."""


class UnsatisfiableTask(TaskError):
    """No candidate set meets the quality margin; resample the board."""


class TaskInvariantError(TaskError):
    pass


AnswerKey = Union[Move, FrozenSet[Move], None]


@dataclass(frozen=True)
class EvalTask:
    kind: TaskKind
    board: Board
    candidates: Tuple[Move, ...] = ()
    target_square: Optional[Square] = None
    answer_key: AnswerKey = None
    params: dict = field(default_factory=dict)
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", TaskKind(self.kind))
        validate_task(self)

    @property
    def fen(self) -> str:
        return self.board.fen()

    def prompt(self, fmt: BoardFormat = BoardFormat.VISUAL_ASCII) -> str:
        return task_prompt(self, fmt)

    def to_record(self) -> dict:
        key = self.answer_key
        if isinstance(key, Move):
            key_out = key.uci()
        elif key is None:
            key_out = None
        else:
            key_out = sorted(m.uci() for m in key)
        return {
            "id": self.id,
            "kind": self.kind.value,
            "fen": self.fen,
            "candidates": [m.uci() for m in self.candidates] or None,
            "target_square": self.target_square.name if self.target_square else None,
            "answer_key": key_out,
            "params": dict(sorted(self.params.items())),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalTask":
        kind = TaskKind(rec["kind"])
        board = parse_fen(rec["fen"])
        cands = tuple(parse_uci_move(m) for m in (rec.get("candidates") or ()))
        sq = Square.parse(rec["target_square"]) if rec.get("target_square") else None
        raw = rec.get("answer_key")
        if kind is TaskKind.LEGAL_MOVES:
            key: AnswerKey = frozenset(parse_uci_move(m) for m in (raw or ()))
            if raw is None and sq is not None:
                key = frozenset(legal_moves_for_square(board, sq))
        elif raw is None:
            key = None
        else:
            key = parse_uci_move(raw)
        return cls(kind, board, cands, sq, key, dict(rec.get("params") or {}), str(rec.get("id", "")))

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


def validate_task(task: EvalTask) -> None:
    legal = set(legal_moves(task.board))
    if task.kind in CHOICE_KINDS:
        if len(task.candidates) != N_CANDIDATES or len(set(task.candidates)) != N_CANDIDATES:
            raise TaskInvariantError(f"choice tasks need {N_CANDIDATES} distinct candidates")
        if not set(task.candidates) <= legal:
            raise TaskInvariantError("all candidates must be legal moves")
        if not isinstance(task.answer_key, Move) or task.answer_key not in task.candidates:
            raise TaskInvariantError("answer key must be one of the candidates")
    elif task.kind is TaskKind.LEGAL_MOVES:
        if task.target_square is None:
            raise TaskInvariantError("legal_moves tasks need a target square")
        piece = task.board.piece_at(task.target_square)
        if piece is None or piece.color is not task.board.turn:
            raise TaskInvariantError("target square must hold a piece of the side to move")
        if task.answer_key is not None and not isinstance(task.answer_key, frozenset):
            raise TaskInvariantError("legal_moves answer key must be a set of moves")
    elif task.kind is TaskKind.PREDICT_MOVE:
        if not legal:
            raise TaskInvariantError("predict_move needs a nonterminal board")
    elif task.kind is TaskKind.OOD_MATE:
        if not mating_moves(task.board):
            raise TaskInvariantError("ood_mate board has no mating move")


def mating_moves(board: Board):
    return [m for m in legal_moves(board) if is_checkmate(apply_move(board, m))]


def make_predict_move_task(board: Board, task_id: str = "", seed: Optional[int] = None) -> EvalTask:
    if not legal_moves(board):
        raise TaskError("predict_move needs a nonterminal board")
    params = {} if seed is None else {"seed": seed}
    return EvalTask(TaskKind.PREDICT_MOVE, board, params=params, id=task_id)


def make_choice_task(board: Board, session: EngineSession, kind: Union[TaskKind, str], rng: random.Random,
                     threshold_cp: int = DEFAULT_QUALITY_THRESHOLD_CP, task_id: str = "",
                     seed: Optional[int] = None) -> EvalTask:
    """Best/worst-move task: the key plus four candidates separated by ``threshold_cp``."""
    kind = TaskKind(kind)
    if kind not in CHOICE_KINDS:
        raise TaskError(f"{kind.value} is not a choice task")
    if len(legal_moves(board)) < N_CANDIDATES:
        raise TaskError(f"need at least {N_CANDIDATES} legal moves")
    ranked = rank_moves(session, board)
    if kind is TaskKind.BEST_MOVE:
        key = ranked[0]
        pool = [e for e in ranked[1:] if key.score.value - e.score.value >= threshold_cp]
    else:
        key = ranked[-1]
        pool = [e for e in ranked[:-1] if e.score.value - key.score.value >= threshold_cp]
    if len(pool) < N_CANDIDATES - 1:
        raise UnsatisfiableTask(f"only {len(pool)} moves are {threshold_cp}cp away from the key")
    distractors = rng.sample(pool, N_CANDIDATES - 1)
    cands = [key.move] + [e.move for e in distractors]
    rng.shuffle(cands)
    params = {"quality_threshold_cp": threshold_cp}
    if seed is not None:
        params["seed"] = seed
    return EvalTask(kind, board, tuple(cands), None, key.move, params, task_id)


DEFAULT_PIECE_WEIGHTS = {k: 1.0 for k in PieceKind}


def make_legal_moves_task(board: Board, rng: random.Random, piece_weights=None, task_id: str = "",
                          seed: Optional[int] = None) -> EvalTask:
    """Pick a piece of the side to move (kind chosen by weight, then square uniformly)."""
    weights = dict(DEFAULT_PIECE_WEIGHTS)
    if piece_weights:
        weights.update({PieceKind.from_name(k) if isinstance(k, str) else PieceKind(k): float(v)
                        for k, v in piece_weights.items()})
    by_kind = {}
    for sq in board.pieces(board.turn):
        by_kind.setdefault(board.piece_at(sq).kind, []).append(sq)
    kinds = [k for k in sorted(by_kind) if weights.get(k, 0) > 0]
    if not kinds:
        raise TaskError("no selectable piece for the side to move")
    kind = rng.choices(kinds, weights=[weights[k] for k in kinds])[0]
    sq = rng.choice(by_kind[kind])
    key = frozenset(legal_moves_for_square(board, sq))
    params = {} if seed is None else {"seed": seed}
    return EvalTask(TaskKind.LEGAL_MOVES, board, (), sq, key, params, task_id)


def make_ood_mate_task(board: Board, task_id: str = "") -> EvalTask:
    if not mating_moves(board):
        raise TaskError("board has no mate in one")
    return EvalTask(TaskKind.OOD_MATE, board, id=task_id)


def task_prompt(task: EvalTask, fmt: BoardFormat = BoardFormat.VISUAL_ASCII) -> str:
    board = render_prompt_board(task.board, fmt)
    if task.kind is TaskKind.PREDICT_MOVE:
        return prompts.render("predict_move", board=board)
    if task.kind in CHOICE_KINDS:
        name = "best_move_choice" if task.kind is TaskKind.BEST_MOVE else "worst_move_choice"
        return prompts.render(name, board=board, candidates=", ".join(m.uci() for m in task.candidates))
    if task.kind is TaskKind.LEGAL_MOVES:
        piece = task.board.piece_at(task.target_square)
        return prompts.render("legal_moves", board=board, piece=f"{piece.color.value} {piece.kind.label}",
                              square=task.target_square.name)
    return prompts.render("ood_mate", board=board)
