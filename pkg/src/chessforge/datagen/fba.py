"""Foundational board-awareness (FBA) question sets."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from .. import prompts
from ..board_format import BoardFormat, render_prompt_board
from ..core import (
    DEFAULT_VALUATION,
    WHITE,
    Board,
    Color,
    Move,
    PieceKind,
    ValuationTable,
    attackers_of,
    is_capture,
    is_check,
    legal_moves,
    legal_moves_for_square,
    material_delta,
    parse_fen,
)
from ..core._backend import kernel
from .balance import quota_subsample
from .samples import Sample, SampleTask

log = logging.getLogger(__name__)

KINDS = ("is_legal", "under_attack", "mobility", "cloze_capture", "is_check", "mat_adv_value")
DEFAULT_WEIGHTS = {k: 1.0 for k in KINDS}
HARD_NEGATIVE_WEIGHT = 3.0


class Unsatisfiable(Exception):
    """The question kind has no well-posed instance on this board."""


@dataclass
class Question:
    kind: str
    text: str
    answer: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "text": self.text, "answer": self.answer, "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "Question":
        return cls(d["kind"], d["text"], d["answer"], dict(d.get("params") or {}))


def _cname(color: Color) -> str:
    return "white" if color is WHITE else "black"


def _yn(flag: bool) -> str:
    return "yes" if flag else "no"


def _pattern_moves(board: Board, color: Color) -> List[Move]:
    codes = kernel.gen_pseudo(board.squares, color is WHITE, board.castling, board.ep)
    return sorted((Move.from_code(c) for c in codes), key=Move.uci)


def q_is_legal(board: Board, rng: random.Random, yes_rate: float = 0.5,
               hard_negative_weight: float = HARD_NEGATIVE_WEIGHT) -> Question:
    """Pattern-legal candidate; negatives are self-check moves (upweighted) or opponent moves."""
    legal = legal_moves(board)
    legal_set = set(legal)
    hard = [m for m in _pattern_moves(board, board.turn) if m not in legal_set]
    other = _pattern_moves(board, board.turn.other)
    negatives = [(m, hard_negative_weight, "self_check") for m in hard] + [(m, 1.0, "wrong_side") for m in other]
    if legal and (not negatives or rng.random() < yes_rate):
        mv, source = rng.choice(legal), "legal"
    elif negatives:
        mv, _, source = rng.choices(negatives, weights=[w for _, w, _ in negatives])[0]
    else:
        raise Unsatisfiable("no pattern-legal move on the board")
    side = board.piece_at(mv.from_square).color
    answer = side is board.turn and mv in legal_set
    text = f"Is {mv.uci()} a legal move for {_cname(side)} in this position?"
    return Question("is_legal", text, _yn(answer), {"move": mv.uci(), "side": _cname(side), "source": source})


def _captures(board: Board):
    out = []
    for m in legal_moves(board):
        if not is_capture(board, m):
            continue
        attacker = PieceKind(board.squares[m.from_square.index] & 7)
        if board.squares[m.to_square.index]:
            victim = PieceKind(board.squares[m.to_square.index] & 7)
        else:
            victim = PieceKind.PAWN
        out.append((attacker, victim))
    return sorted(set(out))


def q_under_attack(board: Board, rng: random.Random, yes_rate: float = 0.5) -> Question:
    """Can a piece kind of the side to move legally capture an enemy piece kind?"""
    mine = sorted({board.piece_at(s).kind for s in board.pieces(board.turn)})
    theirs = sorted({board.piece_at(s).kind for s in board.pieces(board.turn.other)} - {PieceKind.KING})
    if not theirs:
        raise Unsatisfiable("opponent has only a king")
    caps = _captures(board)
    if caps and rng.random() < yes_rate:
        attacker, victim = rng.choice(caps)
    else:
        attacker, victim = rng.choice(mine), rng.choice(theirs)
    answer = (attacker, victim) in caps
    me, them = _cname(board.turn), _cname(board.turn.other)
    text = f"Can a {me} {attacker.label} capture a {them} {victim.label} right now?"
    return Question("under_attack", text, _yn(answer),
                    {"attacker": attacker.label, "victim": victim.label, "side": me})


def q_mobility(board: Board, rng: random.Random) -> Question:
    sq = rng.choice(board.pieces(board.turn))
    piece = board.piece_at(sq)
    n = len(legal_moves_for_square(board, sq))
    text = f"How many legal moves does the {_cname(piece.color)} {piece.kind.label} on {sq.name} have?"
    return Question("mobility", text, str(n), {"square": sq.name})


def q_cloze_capture(board: Board, rng: random.Random) -> Question:
    """Target with exactly one legal capturing source square."""
    unique = []
    for sq in board.pieces(board.turn.other):
        src = attackers_of(board, sq, board.turn, legal=True)
        if len(src) == 1:
            unique.append((sq, src[0]))
    if not unique:
        raise Unsatisfiable("no enemy piece with a unique capturer")
    target, source = rng.choice(unique)
    victim = board.piece_at(target)
    text = (f"Fill in the blank: the only {_cname(board.turn)} piece that can capture the "
            f"{_cname(victim.color)} {victim.kind.label} on {target.name} stands on ___.")
    return Question("cloze_capture", text, source.name, {"target": target.name})


def q_is_check(board: Board, rng: random.Random, mover_rate: float = 0.8) -> Question:
    color = board.turn if rng.random() < mover_rate else board.turn.other
    text = f"Is the {_cname(color)} king in check?"
    return Question("is_check", text, _yn(is_check(board, color)), {"color": _cname(color)})


def q_mat_adv_value(board: Board, rng: random.Random, table: ValuationTable = DEFAULT_VALUATION) -> Question:
    color = rng.choice([board.turn, board.turn.other])
    text = (f"Using the piece values above, what is the material balance from {_cname(color)}'s point of view "
            "(own material minus opponent material, as an integer)?")
    return Question("mat_adv_value", text, str(material_delta(board, color, table)),
                    {"perspective": _cname(color), "table": table.to_dict()})


def make_question(kind: str, board: Board, rng: random.Random, table: ValuationTable = DEFAULT_VALUATION,
                  hard_negative_weight: float = HARD_NEGATIVE_WEIGHT) -> Question:
    if kind == "is_legal":
        return q_is_legal(board, rng, hard_negative_weight=hard_negative_weight)
    if kind == "under_attack":
        return q_under_attack(board, rng)
    if kind == "mobility":
        return q_mobility(board, rng)
    if kind == "cloze_capture":
        return q_cloze_capture(board, rng)
    if kind == "is_check":
        return q_is_check(board, rng)
    if kind == "mat_adv_value":
        return q_mat_adv_value(board, rng, table)
    raise ValueError(f"unknown FBA question kind {kind!r}")


def render_fba(board: Board, questions: Sequence[Question], fmt: BoardFormat = BoardFormat.VISUAL_ASCII,
               table: Optional[ValuationTable] = None):
    needs_table = any(q.kind == "mat_adv_value" for q in questions)
    valuation = ""
    if needs_table:
        valuation = prompts.render("fba_valuation", table=(table or DEFAULT_VALUATION).describe())
    qtext = "\n".join(f"{i}. {q.text}" for i, q in enumerate(questions, 1))
    prompt = prompts.render("fba", board=render_prompt_board(board, fmt), valuation=valuation, questions=qtext)
    response = "\n".join(f"{i}. {q.answer}" for i, q in enumerate(questions, 1))
    return prompt, response


def gen_fba(board: Board, rng: random.Random, n_questions: int = 5, weights: Optional[Mapping[str, float]] = None,
            table: ValuationTable = DEFAULT_VALUATION, fmt: BoardFormat = BoardFormat.VISUAL_ASCII,
            seed: Optional[int] = None, hard_negative_weight: float = HARD_NEGATIVE_WEIGHT) -> Sample:
    """``n_questions`` QA pairs over the six kinds; unsatisfiable kinds are resampled."""
    if n_questions < 1:
        raise ValueError("n_questions must be >= 1")
    if not legal_moves(board):
        raise ValueError("FBA needs a nonterminal board")
    w = dict(DEFAULT_WEIGHTS)
    if weights:
        unknown = set(weights) - set(KINDS)
        if unknown:
            raise ValueError(f"unknown FBA kinds {sorted(unknown)}")
        w.update({k: float(v) for k, v in weights.items()})
    questions: List[Question] = []
    substitutions = []
    seen = set()
    dead = set()
    attempts = 0
    while len(questions) < n_questions:
        kinds = [k for k in KINDS if w[k] > 0 and k not in dead]
        if not kinds or attempts > 50 * n_questions:
            raise ValueError("cannot build enough distinct FBA questions on this board")
        attempts += 1
        kind = rng.choices(kinds, weights=[w[k] for k in kinds])[0]
        try:
            q = make_question(kind, board, rng, table, hard_negative_weight)
        except Unsatisfiable as exc:
            dead.add(kind)
            substitutions.append({"kind": kind, "reason": str(exc)})
            continue
        if q.text in seen:
            continue
        seen.add(q.text)
        questions.append(q)
    prompt, response = render_fba(board, questions, fmt, table)
    meta = {"seed": seed, "format": BoardFormat(fmt).value,
            "questions": [q.to_dict() for q in questions], "substitutions": substitutions}
    return Sample(prompt, response, SampleTask.FBA, board.fen(), meta)


# --- balancing ---------------------------------------------------------------

def answer_bucket(q: Question) -> str:
    if q.kind in ("is_legal", "under_attack", "is_check"):
        return q.answer
    if q.kind == "mobility":
        n = int(q.answer)
        return "0" if n == 0 else "1-2" if n <= 2 else "3-5" if n <= 5 else "6+"
    if q.kind == "mat_adv_value":
        v = int(q.answer)
        return "neg" if v < 0 else "zero" if v == 0 else "pos"
    return "any"


@dataclass
class FbaBalanceResult:
    samples: List[Sample]
    before: Dict[str, Dict[str, int]]
    after: Dict[str, Dict[str, int]]
    diagnostics: List[str]

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


def answer_histogram(samples: Sequence[Sample]) -> Dict[str, Dict[str, int]]:
    hist: Dict[str, Dict[str, int]] = {}
    for s in samples:
        for d in s.meta["questions"]:
            q = Question.from_dict(d)
            row = hist.setdefault(q.kind, {})
            b = answer_bucket(q)
            row[b] = row.get(b, 0) + 1
    return {k: dict(sorted(v.items())) for k, v in sorted(hist.items())}


def balance_fba(batch: Sequence[Sample], targets: Mapping[str, Mapping[str, float]], seed: int = 0) -> FbaBalanceResult:
    """Drop QA pairs so per-kind answer buckets follow ``targets``.

    ``targets`` maps a kind to bucket frequencies, e.g.
    ``{"is_legal": {"yes": 0.5, "no": 0.5}}``; kinds without targets are
    untouched. Samples left without questions are dropped and the rest are
    re-rendered. Each kept sample records its dropped questions under
    ``meta["fba_balance"]``.
    """
    rng = random.Random(seed)
    before = answer_histogram(batch)
    pairs = [(si, qi, Question.from_dict(d)) for si, s in enumerate(batch) for qi, d in enumerate(s.meta["questions"])]
    keep = set((si, qi) for si, qi, _ in pairs)
    diags: List[str] = []
    for kind in sorted(targets):
        if kind not in KINDS:
            raise ValueError(f"unknown FBA kind {kind!r}")
        sel = [(si, qi, q) for si, qi, q in pairs if q.kind == kind]
        res = quota_subsample([answer_bucket(q) for _, _, q in sel], targets[kind], rng, name=kind)
        diags.extend(res.diagnostics)
        kept = {(sel[i][0], sel[i][1]) for i in res.keep}
        keep -= {(si, qi) for si, qi, _ in sel} - kept
    out = []
    for si, s in enumerate(batch):
        qs = [Question.from_dict(d) for d in s.meta["questions"]]
        kept_q = [q for qi, q in enumerate(qs) if (si, qi) in keep]
        if not kept_q:
            continue
        if len(kept_q) == len(qs):
            out.append(s)
            continue
        board = parse_fen(s.fen)
        table = None
        for q in kept_q:
            if q.kind == "mat_adv_value":
                table = ValuationTable(q.params["table"])
        prompt, response = render_fba(board, kept_q, s.meta.get("format", BoardFormat.VISUAL_ASCII.value), table)
        meta = dict(s.meta)
        meta["questions"] = [q.to_dict() for q in kept_q]
        meta["fba_balance"] = {"dropped": [q.kind for qi, q in enumerate(qs) if (si, qi) not in keep]}
        out.append(Sample(prompt, response, SampleTask.FBA, s.fen, meta))
    for d in diags:
        log.warning("%s", d)
    return FbaBalanceResult(out, before, answer_histogram(out), diags)
