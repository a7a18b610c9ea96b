"""Rejection sampling of model outputs and rebalancing of what survives."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from ..core import PieceKind, parse_fen, parse_uci_move
from ..engine import EngineSession
from ..evals.scoring import ScoreReport, score_task
from ..evals.tasks import CHOICE_KINDS, EvalTask, TaskKind
from .balance import quota_subsample
from .samples import Sample, SampleTask

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Thresholds:
    predict_move_rank: float = 0.8
    legal_moves_iou: float = 0.9


@dataclass
class Decision:
    accepted: bool
    reason: str
    report: Optional[ScoreReport] = None

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "reason": self.reason,
                "report": self.report.to_dict() if self.report else None}


def rejection_filter(task: EvalTask, model_output: str, thresholds: Thresholds = Thresholds(),
                     session: Optional[EngineSession] = None) -> Decision:
    """Keep exact choices, and predict/legal-move answers that clear their threshold."""
    if task.kind is TaskKind.OOD_MATE:
        raise ValueError("ood_mate tasks are evaluation-only")
    report = score_task(task, model_output, session)
    if report.parsed_answer is None:
        return Decision(False, "parse_failure", report)
    if task.kind in CHOICE_KINDS:
        return Decision(bool(report.correct), "accepted" if report.correct else "incorrect", report)
    if task.kind is TaskKind.PREDICT_MOVE:
        if not report.legal:
            return Decision(False, "illegal", report)
        ok = report.normalized_rank >= thresholds.predict_move_rank
        return Decision(ok, "accepted" if ok else "below_threshold", report)
    ok = report.iou >= thresholds.legal_moves_iou
    return Decision(ok, "accepted" if ok else "below_threshold", report)


def make_rejection_sample(task: EvalTask, prompt: str, model_output: str, decision: Decision,
                          seed: Optional[int] = None) -> Sample:
    """Wrap an accepted output; ``meta["piece"]`` is the moved (or queried) piece kind."""
    if task.target_square is not None:
        sq = task.target_square
    else:
        sq = parse_uci_move(decision.report.parsed_answer).from_square
    piece = task.board.piece_at(sq)
    meta = {"seed": seed, "eval_task": task.to_record(), "decision": decision.to_dict(),
            "piece": piece.kind.label if piece else None}
    return Sample(prompt, model_output, SampleTask.REJECTION_SAMPLED, task.fen, meta)


FULLMOVE_BUCKETS = ((1, 10), (11, 20), (21, 40), (41, None))


def fullmove_bucket(fen: str) -> str:
    n = parse_fen(fen).fullmove_number
    for lo, hi in FULLMOVE_BUCKETS:
        if hi is None or n <= hi:
            return f"{lo}-{hi}" if hi else f"{lo}+"


def moved_piece(sample: Sample) -> str:
    if sample.meta.get("piece"):
        return str(sample.meta["piece"])
    board = parse_fen(sample.fen)
    move = sample.meta.get("move")
    if move is None:
        raise ValueError("sample has neither meta.piece nor meta.move")
    return PieceKind(board.squares[parse_uci_move(move).from_square.index] & 7).label


@dataclass
class RebalanceResult:
    samples: List[Sample]
    before: Dict[str, Dict[str, int]]
    after: Dict[str, Dict[str, int]]
    diagnostics: List[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


def histograms(samples: Sequence[Sample]) -> Dict[str, Dict[str, int]]:
    out: Dict[str, Dict[str, int]] = {"fullmove": {}, "piece": {}}
    for s in samples:
        for dim, label in (("fullmove", fullmove_bucket(s.fen)), ("piece", moved_piece(s))):
            out[dim][label] = out[dim].get(label, 0) + 1
    return {k: dict(sorted(v.items())) for k, v in out.items()}


def rebalance_accepted(batch: Sequence[Sample], targets: Mapping[str, Mapping[str, float]],
                       seed: int = 0) -> RebalanceResult:
    """Subsample toward target marginals over ``fullmove`` bucket and moved ``piece`` kind.

    Dimensions are balanced one after the other (fullmove first), so the last
    targeted dimension matches exactly and earlier ones may drift; the drift
    shows up in the returned ``after`` histogram.
    """
    rng = random.Random(seed)
    unknown = set(targets) - {"fullmove", "piece"}
    if unknown:
        raise ValueError(f"unknown rebalance dimensions {sorted(unknown)}")
    before = histograms(batch)
    cur = list(batch)
    diags: List[str] = []
    for dim in ("fullmove", "piece"):
        if dim not in targets:
            continue
        labels = [fullmove_bucket(s.fen) if dim == "fullmove" else moved_piece(s) for s in cur]
        res = quota_subsample(labels, targets[dim], rng, name=dim)
        diags.extend(res.diagnostics)
        cur = [cur[i] for i in res.keep]
    for d in diags:
        log.warning("%s", d)
    return RebalanceResult(cur, before, histograms(cur), diags)
