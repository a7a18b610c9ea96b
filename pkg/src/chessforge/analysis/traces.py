"""Grounding checks for reasoning traces: which referenced moves and pieces are real."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .. import prompts
from ..core import BLACK, WHITE, Board, PieceKind, Square, apply_move, legal_moves, parse_uci_move
from ..datagen.teacher import TeacherConfig, teacher_complete

UCI_RE = re.compile(r"(?<![A-Za-z0-9])([a-h][1-8][a-h][1-8][qrbn]?)(?![A-Za-z0-9])")
PIECE_RE = re.compile(
    r"\b((?:white|black)\s+)?(king|queen|rook|bishop|knight|pawn)s?\s+(?:on|at)\s+([a-h][1-8])\b",
    re.IGNORECASE,
)


@dataclass
class ExtractedTrace:
    moves: List[str] = field(default_factory=list)
    pieces: List[Tuple[str, str]] = field(default_factory=list)
    fallback: bool = False

    def to_dict(self) -> dict:
        return {"moves": list(self.moves), "pieces": [list(p) for p in self.pieces]}


def extract_trace_pattern(text: str) -> ExtractedTrace:
    """Regex extractor: UCI-shaped tokens and "<piece> on <square>" phrases.

    Lower fidelity than the model-based extractor (SAN and loose prose are
    missed); traces it produces are marked ``fallback``.
    """
    moves = UCI_RE.findall(text or "")
    pieces = []
    for color, kind, sq in PIECE_RE.findall(text or ""):
        label = (color.strip().lower() + " " if color else "") + kind.lower()
        pieces.append((label, sq.lower()))
    return ExtractedTrace(moves, pieces, fallback=True)


class TraceExtractionError(ValueError):
    pass


def parse_extraction_reply(reply: str) -> ExtractedTrace:
    start, end = reply.find("{"), reply.rfind("}")
    if start < 0 or end < start:
        raise TraceExtractionError("no JSON object in reply")
    try:
        data = json.loads(reply[start:end + 1])
    except json.JSONDecodeError as exc:
        raise TraceExtractionError(f"bad JSON: {exc.msg}") from exc
    moves, pieces = data.get("moves"), data.get("pieces")
    if not isinstance(moves, list) or not isinstance(pieces, list):
        raise TraceExtractionError("reply needs 'moves' and 'pieces' lists")
    if not all(isinstance(m, str) for m in moves):
        raise TraceExtractionError("moves must be strings")
    out = []
    for p in pieces:
        if not (isinstance(p, (list, tuple)) and len(p) == 2 and all(isinstance(x, str) for x in p)):
            raise TraceExtractionError(f"bad piece entry {p!r}")
        out.append((p[0], p[1]))
    return ExtractedTrace(list(moves), out)


def extract_trace_llm(config: TeacherConfig, text: str, http=None, malformed_retries: int = 2) -> ExtractedTrace:
    """Ask the teacher model for the two lists; malformed replies are retried, then raised."""
    if not (text or "").strip():
        return ExtractedTrace()
    prompt = prompts.render("trace_extraction", reasoning=text)
    last: Optional[Exception] = None
    for _ in range(malformed_retries + 1):
        reply = teacher_complete(config, prompt, http=http)
        try:
            return parse_extraction_reply(reply)
        except TraceExtractionError as exc:
            last = exc
    raise TraceExtractionError(f"extraction failed after {malformed_retries + 1} attempts: {last}")


@dataclass
class ReferencedAccuracy:
    move_acc: Optional[float]
    piece_acc: Optional[float]
    total_acc: Optional[float]
    correct_moves: int
    total_moves: int
    correct_pieces: int
    total_pieces: int
    future_moves: List[str] = field(default_factory=list)

    @property
    def hallucination_rate(self) -> Optional[float]:
        return None if self.total_acc is None else 1.0 - self.total_acc

    def to_dict(self) -> dict:
        return {
            "move_acc": self.move_acc, "piece_acc": self.piece_acc, "total_acc": self.total_acc,
            "hallucination_rate": self.hallucination_rate,
            "counts": {"correct_moves": self.correct_moves, "moves": self.total_moves,
                       "correct_pieces": self.correct_pieces, "pieces": self.total_pieces},
            "future_moves": self.future_moves,
        }


def _ratio(a: int, b: int) -> Optional[float]:
    return a / b if b else None


def _piece_ok(board: Board, kind_text: str, square_text: str, strict_color: bool) -> bool:
    try:
        sq = Square.parse(square_text.strip().lower())
    except ValueError:
        return False
    words = kind_text.strip().split()
    color = None
    if words and words[0].lower() in ("white", "black"):
        color = WHITE if words.pop(0).lower() == "white" else BLACK
    if len(words) != 1:
        return False
    name = words[0]
    try:
        if len(name) == 1:
            # a bare FEN letter carries its own color
            kind = PieceKind.from_symbol(name)
            if color is None:
                color = WHITE if name.isupper() else BLACK
        else:
            kind = PieceKind.from_name(name.lower().rstrip("s"))
    except ValueError:
        return False
    piece = board.piece_at(sq)
    if piece is None or piece.kind != kind:
        return False
    if strict_color:
        return color is not None and piece.color is color
    return True


def _legal_uci(board: Board, text: str) -> bool:
    try:
        return parse_uci_move(text) in legal_moves(board)
    except ValueError:
        return False


def referenced_accuracy(board: Board, trace: ExtractedTrace, strict_color: bool = False) -> ReferencedAccuracy:
    """(correct moves + correct pieces) / (moves + pieces); ``None`` for an empty trace.

    A move counts iff it is legal on ``board`` itself. Failed moves that are
    legal somewhere along the line formed by the trace's own legal moves are
    listed in ``future_moves``, since they may just be later plies.
    """
    ok_moves = [_legal_uci(board, m) for m in trace.moves]
    cm = sum(ok_moves)
    cp = sum(_piece_ok(board, k, s, strict_color) for k, s in trace.pieces)
    positions = [board]
    cur = board
    for m in trace.moves:
        if _legal_uci(cur, m):
            cur = apply_move(cur, m)
            positions.append(cur)
    future = [m for m, ok in zip(trace.moves, ok_moves)
              if not ok and any(_legal_uci(p, m) for p in positions[1:])]
    nm, npc = len(trace.moves), len(trace.pieces)
    return ReferencedAccuracy(_ratio(cm, nm), _ratio(cp, npc), _ratio(cm + cp, nm + npc), cm, nm, cp, npc, future)


def aggregate_accuracy(results: Sequence[ReferencedAccuracy]) -> dict:
    """Pooled counts over many traces (empty traces contribute nothing)."""
    cm = sum(r.correct_moves for r in results)
    nm = sum(r.total_moves for r in results)
    cp = sum(r.correct_pieces for r in results)
    npc = sum(r.total_pieces for r in results)
    total = _ratio(cm + cp, nm + npc)
    return {"traces": len(results), "move_acc": _ratio(cm, nm), "piece_acc": _ratio(cp, npc), "total_acc": total,
            "hallucination_rate": None if total is None else 1.0 - total}
