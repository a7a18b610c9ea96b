import random

import chess
import pytest

from chessforge.core import Board, Square, legal_moves, legal_moves_for_square, parse_fen, parse_uci_move
from chessforge.engine import rank_moves
from chessforge.evals import (
    EvalTask,
    TaskError,
    TaskInvariantError,
    TaskKind,
    UnsatisfiableTask,
    extract_final_answer,
    iou,
    is_trivial_move,
    make_choice_task,
    make_legal_moves_task,
    make_ood_mate_task,
    make_predict_move_task,
    normalized_rank,
    score_choice,
    score_legal_moves,
    score_ood_mate,
    score_predict_move,
    score_task,
    summarize_reports,
)

M = parse_uci_move


@pytest.mark.parametrize("text,kind,want,fallback", [
    ("Thinking... Final Answer: e2e4", "best_move", "e2e4", False),
    ("final answer:  g1f3.", "predict_move", "g1f3", False),
    ("Final Answer: e2e4\nwait, no.\nFinal Answer: d2d4", "predict_move", "d2d4", False),
    ("I like e2e4 but d2d4 is better", "predict_move", "d2d4", True),
    ("Final Answer: a7a8Q", "predict_move", "a7a8q", False),
])
def test_extract_single(text, kind, want, fallback):
    p = extract_final_answer(text, kind)
    assert p.ok and p.value.uci() == want and p.fallback_used is fallback


@pytest.mark.parametrize("text", ["", "no idea", "Final Answer: knight to f3", None])
def test_extract_failures_do_not_raise(text):
    p = extract_final_answer(text, "best_move")
    assert not p.ok and p.value is None


def test_extract_legal_moves():
    p = extract_final_answer("Final Answer: g1f3, g1h3", "legal_moves")
    assert p.value == frozenset({M("g1f3"), M("g1h3")})
    assert extract_final_answer("Final Answer: none", "legal_moves").value == frozenset()
    # a bare move list is not accepted for the set-valued task
    assert not extract_final_answer("g1f3 g1h3", "legal_moves").ok


def test_normalized_rank_endpoints():
    assert normalized_rank(1, 20) == 1.0
    assert normalized_rank(20, 20) == 0.0
    assert normalized_rank(1, 1) == 1.0
    assert normalized_rank(3, 5) == pytest.approx(0.5)
    for bad in ((0, 5), (6, 5), (1, 0)):
        with pytest.raises(ValueError):
            normalized_rank(*bad)


def test_iou_identities():
    a = {M("e2e4"), M("d2d4")}
    assert iou(a, a) == 1.0
    assert iou(set(), set()) == 1.0
    assert iou(a, set()) == 0.0
    assert iou(a, {M("e2e4")}) == pytest.approx(0.5)
    rng = random.Random(0)
    pool = [M(u) for u in ("a2a3", "b2b3", "c2c3", "d2d3", "e2e3", "f2f3", "g2g3", "h2h3")]
    for _ in range(200):
        x, y = set(rng.sample(pool, rng.randint(0, 8))), set(rng.sample(pool, rng.randint(0, 8)))
        assert iou(x, y) == iou(y, x)
        assert 0.0 <= iou(x, y) <= 1.0


@pytest.mark.parametrize("fen,move", [
    ("4k3/8/8/8/8/8/P7/R3K3 w - - 0 1", "a2a3"),
    ("4k3/8/8/8/8/8/P7/R3K3 w - - 0 1", "a2a4"),
    ("4k3/8/8/8/8/8/P7/R3K3 w - - 0 1", "a1b1"),
    ("4k3/8/8/8/8/8/8/1R2K3 w - - 0 1", "b1a1"),
    ("4k3/8/8/8/8/8/8/1K6 w - - 0 1", "b1a1"),
    ("4k3/7p/8/8/8/8/8/4K3 b - - 0 1", "h7h6"),
])
def test_trivial_exemplars(fen, move):
    assert is_trivial_move(parse_fen(fen), M(move))


@pytest.mark.parametrize("fen,move", [
    ("4k3/8/8/8/8/1p6/P7/4K3 w - - 0 1", "a2b3"),     # capture
    ("4k3/8/8/8/8/8/8/4K2R w K - 0 1", "e1g1"),       # castling
    ("1k6/8/8/8/8/8/8/R3K3 w - - 0 1", "a1b1"),       # rook shuffle with check
    ("4k3/8/8/8/8/8/8/R3K3 w - - 0 1", "a1c1"),       # rook travels two squares
    ("4k3/8/8/8/8/8/4P3/4K3 w - - 0 1", "e2e3"),      # centre pawn
    ("4k3/8/8/8/8/8/8/1N2K3 w - - 0 1", "b1a3"),      # knight
    ("8/8/8/8/6k1/8/7P/4K3 w - - 0 1", "h2h3"),       # edge pawn giving check
    ("8/P7/8/8/8/8/8/k3K3 w - - 0 1", "a7a8q"),       # edge promotion
])
def test_trivial_negatives(fen, move):
    assert not is_trivial_move(parse_fen(fen), M(move))


START_CANDS = ("e2e4", "d2d4", "g1f3", "a2a3", "h2h4")


def best_move_task(key="e2e4"):
    return EvalTask(TaskKind.BEST_MOVE, Board.start(), tuple(M(u) for u in START_CANDS), None, M(key), {}, "t1")


def test_task_invariants():
    b = Board.start()
    with pytest.raises(TaskInvariantError):
        EvalTask(TaskKind.BEST_MOVE, b, tuple(M(u) for u in START_CANDS[:4]), None, M("e2e4"))
    with pytest.raises(TaskInvariantError):
        EvalTask(TaskKind.BEST_MOVE, b, tuple(M(u) for u in START_CANDS), None, M("b2b3"))
    with pytest.raises(TaskInvariantError):
        EvalTask(TaskKind.WORST_MOVE, b, tuple(M(u) for u in START_CANDS[:4]) + (M("e2e5"),), None, M("e2e4"))
    with pytest.raises(TaskInvariantError):
        EvalTask(TaskKind.LEGAL_MOVES, b, target_square=Square.parse("e7"))
    with pytest.raises(TaskInvariantError):
        EvalTask(TaskKind.OOD_MATE, b)
    with pytest.raises(TaskError):
        make_predict_move_task(parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1"))


def test_record_round_trip():
    t = best_move_task()
    assert EvalTask.from_record(t.to_record()) == t
    lm = make_legal_moves_task(Board.start(), random.Random(3), task_id="x")
    back = EvalTask.from_record(lm.to_record())
    assert back == lm
    assert back.answer_key == frozenset(legal_moves_for_square(lm.board, lm.target_square))
    rec = lm.to_record()
    rec["answer_key"] = None
    assert EvalTask.from_record(rec).answer_key == lm.answer_key


def test_choice_task_margin(session, walk_boards):
    made = 0
    for i, b in enumerate(walk_boards[:25]):
        for kind in ("best_move", "worst_move"):
            try:
                t = make_choice_task(b, session, kind, random.Random(i))
            except (UnsatisfiableTask, TaskError):
                continue
            made += 1
            scores = {e.move: e.score.value for e in rank_moves(session, b)}
            key = scores[t.answer_key]
            for c in t.candidates:
                if c == t.answer_key:
                    continue
                gap = key - scores[c] if kind == "best_move" else scores[c] - key
                assert gap >= 100
            assert key == (max if kind == "best_move" else min)(scores.values())
    assert made > 10


def test_prompts_render():
    t = best_move_task()
    text = t.prompt()
    assert all(u in text for u in START_CANDS)
    lm = EvalTask(TaskKind.LEGAL_MOVES, Board.start(), target_square=Square.parse("g1"))
    assert "g1" in lm.prompt() and "knight" in lm.prompt().lower()


def test_predict_move_rank_endpoints(session, walk_boards):
    for b in walk_boards[:10]:
        ranked = rank_moves(session, b)
        t = make_predict_move_task(b)
        best = score_predict_move(t, f"Final Answer: {ranked[0].move.uci()}", session)
        worst = score_predict_move(t, f"Final Answer: {ranked[-1].move.uci()}", session)
        assert best.reward == 1.0 and best.legal
        if len(ranked) > 1 and ranked[0].score != ranked[-1].score:
            assert worst.reward == 0.0


def test_predict_move_illegal_and_centipawn(session):
    t = make_predict_move_task(Board.start())
    r = score_predict_move(t, "Final Answer: e2e5", session)
    assert r.reward == 0.0 and r.legal is False
    r = score_predict_move(t, "Final Answer: e2e4", session, reward_mode="centipawn_delta")
    assert r.centipawn_delta == r.reward
    assert isinstance(r.reward, float)
    with pytest.raises(ValueError):
        score_task(t, "Final Answer: e2e4")


def test_legal_moves_scoring():
    t = EvalTask(TaskKind.LEGAL_MOVES, Board.start(), target_square=Square.parse("g1"),
                 answer_key=frozenset({M("g1f3"), M("g1h3")}))
    assert score_legal_moves(t, "Final Answer: g1f3, g1h3").reward == 1.0
    assert score_legal_moves(t, "Final Answer: g1f3, g1e2").reward == pytest.approx(1 / 3)
    assert score_legal_moves(t, "I do not know").reward == 0.0
    pinned = parse_fen("4k3/4r3/8/8/8/8/4N3/4K3 w - - 0 1")
    t = EvalTask(TaskKind.LEGAL_MOVES, pinned, target_square=Square.parse("e2"), answer_key=frozenset())
    assert score_legal_moves(t, "Final Answer: none").reward == 1.0


def test_ood_mate():
    b = parse_fen("6k1/5ppp/8/8/8/8/8/R6K w - - 0 1")
    t = make_ood_mate_task(b, "m1")
    assert score_ood_mate(t, "Final Answer: a1a8").correct
    assert not score_ood_mate(t, "Final Answer: a1a7").correct
    assert score_ood_mate(b, "Final Answer: a1a8").reward == 1.0
    with pytest.raises(TaskError):
        make_ood_mate_task(Board.start())


def test_hand_scored_summary():
    t = best_move_task()
    responses = [
        "Central control. Final Answer: e2e4",   # correct
        "Final Answer: a2a3",                     # legal, trivial, wrong
        "Probably g1f3 is fine",                  # fallback, legal, wrong
        "Final Answer: e2e5",                     # illegal
    ]
    reports = [score_choice(t, r) for r in responses]
    assert [r.correct for r in reports] == [True, False, False, False]
    assert reports[2].fallback_used
    s = summarize_reports(reports)["best_move"]
    assert s["n"] == 4
    assert s["pct_legal"] == pytest.approx(75.0)
    assert s["pct_trivial"] == pytest.approx(100 / 3)
    assert s["accuracy"] == pytest.approx(0.25)
    assert s["mean_reward"] == pytest.approx(0.25)
    assert s["avg_rank"] is None and s["mean_iou"] is None


def _oracle_trivial(board, uci):
    """Independent restatement of the trivial-move rule on python-chess."""
    m = chess.Move.from_uci(uci)
    if board.is_capture(m):
        return False
    pt = board.piece_type_at(m.from_square)
    if m.promotion or board.gives_check(m):
        return False
    if pt == chess.PAWN:
        return chess.square_file(m.from_square) in (0, 7)
    if pt in (chess.KING, chess.ROOK):
        return chess.square_distance(m.from_square, m.to_square) == 1 and not board.is_castling(m)
    return False


def test_trivial_matches_oracle(walk_boards):
    for b in walk_boards:
        ref = chess.Board(b.fen())
        for m in legal_moves(b):
            assert is_trivial_move(b, m) == _oracle_trivial(ref, m.uci()), (b.fen(), m.uci())
