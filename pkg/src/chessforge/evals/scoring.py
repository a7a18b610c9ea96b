"""Answer extraction, task scoring and rewards."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Union

from ..core import (
    Board,
    Move,
    PieceKind,
    apply_move,
    gives_check,
    is_capture,
    is_castling,
    is_checkmate,
    legal_moves,
    parse_uci_move,
)
from ..engine import EngineSession, evaluate, rank_moves
from .tasks import CHOICE_KINDS, EvalTask, TaskKind

GAMMA = 1.0

UCI_TOKEN_RE = re.compile(r"(?<![A-Za-z0-9])([a-h][1-8][a-h][1-8][qrbnQRBN]?)(?![A-Za-z0-9])")
FINAL_ANSWER_RE = re.compile(r"final\s+answer\s*:\s*(.*)", re.IGNORECASE)


@dataclass
class ParsedAnswer:
    value: Union[Move, frozenset, None]
    fallback_used: bool = False
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def uci_tokens(text: str) -> List[str]:
    return [t[:4] + t[4:].lower() for t in UCI_TOKEN_RE.findall(text)]


def extract_final_answer(text: str, kind: Union[TaskKind, str]) -> ParsedAnswer:
    """Parse the answer of a free-text response. Never raises.

    The last ``Final Answer: <payload>`` line wins. Single-move kinds take the
    first UCI move in the payload and otherwise fall back to the last UCI
    token anywhere in the text. ``legal_moves`` takes every UCI move in the
    payload, or the empty set for ``none``.
    """
    kind = TaskKind(kind)
    text = text or ""
    payloads = [m.group(1).strip() for m in FINAL_ANSWER_RE.finditer(text)]
    if kind is TaskKind.LEGAL_MOVES:
        if not payloads:
            return ParsedAnswer(None, error="no 'Final Answer:' line")
        payload = payloads[-1].strip().strip("`*.[]{}").strip()
        if payload.lower() in ("none", "no legal moves", "empty", "{}", "[]", ""):
            if payload:
                return ParsedAnswer(frozenset())
            return ParsedAnswer(None, error="empty final answer")
        toks = uci_tokens(payload)
        if not toks:
            return ParsedAnswer(None, error=f"no UCI moves in final answer {payload!r}")
        moves = set()
        for t in toks:
            try:
                moves.add(parse_uci_move(t))
            except ValueError:
                continue
        return ParsedAnswer(frozenset(moves))
    if payloads:
        toks = uci_tokens(payloads[-1])
        if toks:
            try:
                return ParsedAnswer(parse_uci_move(toks[0]))
            except ValueError:
                pass
        return ParsedAnswer(None, error=f"no UCI move in final answer {payloads[-1]!r}")
    toks = uci_tokens(text)
    for t in reversed(toks):
        try:
            return ParsedAnswer(parse_uci_move(t), fallback_used=True)
        except ValueError:
            continue
    return ParsedAnswer(None, error="no answer found")


@dataclass
class ScoreReport:
    kind: str
    reward: float
    parsed_answer: Union[str, List[str], None] = None
    legal: Optional[bool] = None
    normalized_rank: Optional[float] = None
    correct: Optional[bool] = None
    iou: Optional[float] = None
    trivial: Optional[bool] = None
    centipawn_delta: Optional[float] = None
    fallback_used: bool = False
    diagnostics: List[str] = field(default_factory=list)
    id: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def normalized_rank(rank: int, n: int) -> float:
    """(n - r) / (n - 1) for engine rank ``r`` in 1..n (1 = best); 1.0 when n == 1."""
    if n < 1 or not 1 <= rank <= n:
        raise ValueError(f"rank {rank} out of range for {n} moves")
    if n == 1:
        return 1.0
    return (n - rank) / (n - 1)


def iou(predicted, truth) -> float:
    a, b = set(predicted), set(truth)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def is_trivial_move(board: Board, move: Move) -> bool:
    """Edge-pawn push or one-square king/rook shuffle; never a capture, promotion, castle or check."""
    code = board.squares[move.from_square.index]
    kind = code & 7
    if is_capture(board, move) or move.promotion is not None:
        return False
    if kind == PieceKind.PAWN:
        if move.from_square.file not in (0, 7):
            return False
    elif kind in (PieceKind.KING, PieceKind.ROOK):
        dist = max(abs(move.to_square.file - move.from_square.file), abs(move.to_square.rank - move.from_square.rank))
        if dist != 1 or is_castling(board, move):
            return False
    else:
        return False
    return not gives_check(board, move)


def centipawn_delta_reward(session: EngineSession, board: Board, move: Move, gamma: float = GAMMA) -> float:
    """gamma * V(s_{t+1}) - V(s_t), both from the mover's point of view (unbounded)."""
    before = evaluate(session, board).value
    after = evaluate(session, apply_move(board, move)).flipped().value
    return gamma * after - before


def _single_move(task: EvalTask, text: str, report: ScoreReport) -> Optional[Move]:
    parsed = extract_final_answer(text, task.kind)
    report.fallback_used = parsed.fallback_used
    if not parsed.ok:
        report.diagnostics.append(f"unparseable: {parsed.error}")
        return None
    if parsed.fallback_used:
        report.diagnostics.append("no 'Final Answer:' line; used last UCI token")
    report.parsed_answer = parsed.value.uci()
    return parsed.value


def score_predict_move(task: EvalTask, text: str, session: EngineSession,
                       reward_mode: str = "rank", gamma: float = GAMMA) -> ScoreReport:
    report = ScoreReport(TaskKind.PREDICT_MOVE.value, 0.0, id=task.id)
    move = _single_move(task, text, report)
    if move is None:
        report.legal = False
        return report
    legal = legal_moves(task.board)
    report.legal = move in legal
    if not report.legal:
        report.diagnostics.append(f"illegal move {move.uci()}")
        return report
    ranked = rank_moves(session, task.board)
    r = next(i for i, e in enumerate(ranked, 1) if e.move == move)
    report.normalized_rank = normalized_rank(r, len(ranked))
    report.trivial = is_trivial_move(task.board, move)
    if reward_mode == "centipawn_delta":
        report.centipawn_delta = centipawn_delta_reward(session, task.board, move, gamma)
        report.reward = report.centipawn_delta
    elif reward_mode == "rank":
        report.reward = report.normalized_rank
    else:
        raise ValueError(f"unknown reward mode {reward_mode!r}")
    return report


def score_choice(task: EvalTask, text: str) -> ScoreReport:
    report = ScoreReport(task.kind.value, 0.0, id=task.id)
    move = _single_move(task, text, report)
    if move is None:
        report.correct = False
        return report
    report.legal = move in legal_moves(task.board)
    if move not in task.candidates:
        report.diagnostics.append(f"{move.uci()} is not one of the candidates")
    report.correct = move == task.answer_key
    report.trivial = is_trivial_move(task.board, move) if report.legal else None
    report.reward = 1.0 if report.correct else 0.0
    return report


def score_legal_moves(task: EvalTask, text: str) -> ScoreReport:
    report = ScoreReport(TaskKind.LEGAL_MOVES.value, 0.0, id=task.id)
    parsed = extract_final_answer(text, TaskKind.LEGAL_MOVES)
    if not parsed.ok:
        report.diagnostics.append(f"unparseable: {parsed.error}")
        report.iou = 0.0
        return report
    report.parsed_answer = sorted(m.uci() for m in parsed.value)
    report.iou = iou(parsed.value, task.answer_key or frozenset())
    report.reward = report.iou
    return report


def score_ood_mate(task_or_board, text: str) -> ScoreReport:
    board = task_or_board.board if isinstance(task_or_board, EvalTask) else task_or_board
    task_id = task_or_board.id if isinstance(task_or_board, EvalTask) else ""
    report = ScoreReport(TaskKind.OOD_MATE.value, 0.0, id=task_id)
    parsed = extract_final_answer(text, TaskKind.OOD_MATE)
    report.fallback_used = parsed.fallback_used
    if not parsed.ok:
        report.diagnostics.append(f"unparseable: {parsed.error}")
        report.correct = False
        return report
    move = parsed.value
    report.parsed_answer = move.uci()
    report.legal = move in legal_moves(board)
    report.correct = bool(report.legal and is_checkmate(apply_move(board, move)))
    report.reward = 1.0 if report.correct else 0.0
    return report


def score_task(task: EvalTask, text: str, session: Optional[EngineSession] = None,
               reward_mode: str = "rank") -> ScoreReport:
    if task.kind is TaskKind.PREDICT_MOVE:
        if session is None:
            raise ValueError("predict_move scoring needs an engine session")
        return score_predict_move(task, text, session, reward_mode)
    if task.kind in CHOICE_KINDS:
        return score_choice(task, text)
    if task.kind is TaskKind.LEGAL_MOVES:
        return score_legal_moves(task, text)
    return score_ood_mate(task, text)


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def summarize_reports(reports: Sequence[ScoreReport]) -> dict:
    """Aggregate metrics per task kind: % legal, mean rank, % trivial, accuracy, IoU, reward."""
    out = {}
    kinds = sorted({r.kind for r in reports})
    for kind in kinds:
        rs = [r for r in reports if r.kind == kind]
        legal_flags = [r.legal for r in rs if r.legal is not None]
        trivial = [r.trivial for r in rs if r.trivial is not None]
        row = {
            "n": len(rs),
            "pct_legal": (100.0 * sum(legal_flags) / len(legal_flags)) if legal_flags else None,
            "avg_rank": _mean([r.normalized_rank for r in rs]),
            "pct_trivial": (100.0 * sum(trivial) / len(trivial)) if trivial else None,
            "accuracy": _mean([1.0 if r.correct else 0.0 for r in rs if r.correct is not None]),
            "mean_iou": _mean([r.iou for r in rs]),
            "mean_reward": _mean([r.reward for r in rs]),
        }
        out[kind] = row
    return out
