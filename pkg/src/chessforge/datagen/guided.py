"""Guided-synthetic prompts for a teacher model and checks on its answers."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import List, Optional

from .. import prompts
from ..board_format import BoardFormat, render_prompt_board
from ..core import Board, Move, apply_move, legal_moves, parse_fen, parse_uci_move
from ..engine import EngineSession, best_line, evaluate
from .samples import Sample, SampleTask

GUIDED_PLIES = 5
DEFAULT_BAND = 50
VERDICT_RE = re.compile(r"verdict\s*:\s*\**\s*(good|bad|unclear)\b", re.IGNORECASE)
UCI_RE = re.compile(r"(?<![A-Za-z0-9])([a-h][1-8][a-h][1-8][qrbn]?)(?![A-Za-z0-9])")


def gen_guided_prompt(board: Board, candidate, session: EngineSession,
                      fmt: BoardFormat = BoardFormat.VISUAL_ASCII, plies: int = GUIDED_PLIES):
    """Teacher prompt for ``candidate`` plus the audit used to check the reply.

    The line is the candidate followed by up to ``plies - 1`` engine-best
    plies, stopping early at mate or stalemate. ``delta`` is V(end) - V(start)
    from the candidate mover's point of view.
    """
    mv = candidate if isinstance(candidate, Move) else parse_uci_move(candidate)
    if mv not in legal_moves(board):
        raise ValueError(f"candidate {mv.uci()} is not legal")
    after = apply_move(board, mv)
    line = [mv]
    end = after
    if legal_moves(after) and plies > 1:
        rest = best_line(session, after, plies - 1)
        line += rest.moves
        end = rest.end_board
    start_eval = evaluate(session, board).value
    end_eval = evaluate(session, end)
    if end.turn is not board.turn:
        end_eval = end_eval.flipped()
    delta = end_eval.value - start_eval
    ucis = [m.uci() for m in line]
    prompt = prompts.render(
        "guided_teacher",
        candidate=mv.uci(),
        begin_board=render_prompt_board(board, fmt),
        line=" ".join(ucis),
        end_board=render_prompt_board(end, fmt),
        delta=f"{delta:+d}",
    )
    audit = {"fen": board.fen(), "candidate": mv.uci(), "line": ucis, "end_fen": end.fen(),
             "start_eval": start_eval, "end_eval": end_eval.value, "delta": delta, "format": BoardFormat(fmt).value}
    return prompt, audit


class RejectReason(str, enum.Enum):
    MISSING_VERDICT = "missing_verdict"
    ILLEGAL_REFERENCE = "illegal_reference"
    VERDICT_MISMATCH = "verdict_mismatch"


@dataclass
class GuidedCheck:
    accepted: bool
    verdict: Optional[str] = None
    reasons: List[RejectReason] = field(default_factory=list)
    details: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "verdict": self.verdict,
                "reasons": [r.value for r in self.reasons], "details": self.details}


def expected_verdicts(delta: int, band: int = DEFAULT_BAND) -> set:
    if delta > band:
        return {"good"}
    if delta < -band:
        return {"bad"}
    return {"good", "bad", "unclear"}


def verify_guided_output(text: str, audit: dict, band: int = DEFAULT_BAND) -> GuidedCheck:
    """Accept iff a verdict is present, every UCI move is legal somewhere along the line and the verdict fits delta.

    Outside ``[-band, band]`` the verdict must carry the sign of delta; inside
    it any verdict is accepted.
    """
    check = GuidedCheck(False)
    found = VERDICT_RE.findall(text or "")
    if found:
        check.verdict = found[-1].lower()
    else:
        check.reasons.append(RejectReason.MISSING_VERDICT)
    board = parse_fen(audit["fen"])
    legal_anywhere = set(legal_moves(board))
    for u in audit["line"]:
        board = apply_move(board, u)
        legal_anywhere |= set(legal_moves(board))
    bad = []
    for tok in UCI_RE.findall(text or ""):
        if parse_uci_move(tok) not in legal_anywhere:
            bad.append(tok)
    if bad:
        check.reasons.append(RejectReason.ILLEGAL_REFERENCE)
        check.details.append("illegal moves: " + ", ".join(sorted(set(bad))))
    if check.verdict is not None and check.verdict not in expected_verdicts(audit["delta"], band):
        check.reasons.append(RejectReason.VERDICT_MISMATCH)
        check.details.append(f"verdict {check.verdict} with delta {audit['delta']:+d} (band {band})")
    check.accepted = not check.reasons
    return check


def make_guided_sample(audit: dict, teacher_text: str, check: GuidedCheck, seed: Optional[int] = None) -> Sample:
    board = parse_fen(audit["fen"])
    prompt = prompts.render("guided_student", board=render_prompt_board(board, audit.get("format", "visual_ascii")),
                            candidate=audit["candidate"])
    meta = {"seed": seed, "audit": audit, "check": check.to_dict()}
    return Sample(prompt, teacher_text, SampleTask.GUIDED_SYNTHETIC, audit["fen"], meta)
