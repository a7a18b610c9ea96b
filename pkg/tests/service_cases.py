"""Random /score request bodies and the library call each one should equal."""

import random

from chessforge.core import Square, legal_moves, legal_moves_for_square, parse_fen, parse_uci_move
from chessforge.evals import (
    EvalTask,
    TaskError,
    TaskKind,
    make_choice_task,
    score_choice,
    score_legal_moves,
    score_ood_mate,
    score_predict_move,
)

MATE_IN_ONE = [
    "6k1/5ppp/8/8/8/8/8/R6K w - - 0 1",
    "r1bqkbnr/pppp1ppp/2n5/4p3/2B1P3/5Q2/PPPP1PPP/RNB1K1NR w KQkq - 4 4",
    "6k1/8/6K1/8/8/8/8/R7 w - - 0 1",
    "k7/8/1K6/8/8/8/8/7R w - - 0 1",
]

START = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"
CHOICE = {"kind": "best_move", "fen": START, "candidates": ["e2e4", "d2d4", "g1f3", "a2a3", "h2h4"],
          "answer_key": "e2e4"}

# (body, expected status) for requests the service must refuse
MALFORMED = [
    ("not json", 400),
    ([1, 2], 400),
    ({"fen": START, "response_text": "x"}, 400),
    ({"kind": "nope", "fen": START, "response_text": "x"}, 400),
    ({"kind": "best_move", "fen": "8/8/8 w - - 0 1", "response_text": "x"}, 400),
    ({**CHOICE, "candidates": ["e2e4", "zz"], "response_text": "x"}, 400),
    ({**CHOICE, "candidates": "e2e4", "response_text": "x"}, 400),
    ({**CHOICE, "answer_key": None, "response_text": "x"}, 400),
    ({**CHOICE, "response_text": 5}, 400),
    ({**CHOICE, "reward_mode": "elo", "response_text": "x"}, 400),
    ({"kind": "legal_moves", "fen": START, "target_square": "k9", "response_text": "x"}, 400),
    ({**CHOICE, "candidates": CHOICE["candidates"][:4], "response_text": "x"}, 422),
    ({**CHOICE, "answer_key": "b2b3", "response_text": "x"}, 422),
    ({**CHOICE, "candidates": CHOICE["candidates"][:4] + ["e2e5"], "response_text": "x"}, 422),
    ({"kind": "legal_moves", "fen": START, "target_square": "e7", "response_text": "x"}, 422),
    ({"kind": "legal_moves", "fen": START, "response_text": "x"}, 422),
    ({"kind": "ood_mate", "fen": START, "response_text": "x"}, 422),
]

JUNK = ["", "I resign.", "Final Answer: ???", "Final Answer: Nf3", "e9e4 maybe"]


def _text(rng, moves):
    r = rng.random()
    if r < 0.1 or not moves:
        return rng.choice(JUNK)
    m = rng.choice(moves)
    if r < 0.2:
        return f"I would consider {m} here."
    if r < 0.3:
        return "Final Answer: a1h8"
    return f"Some thoughts.\nFinal Answer: {m}"


def random_bodies(n, boards, session, seed=0):
    """``n`` well-formed request bodies over ``boards`` (choice tasks need the engine)."""
    rng = random.Random(seed)
    out = []
    choice_cache = {}
    while len(out) < n:
        b = rng.choice(boards)
        kind = rng.choice(["predict_move", "predict_move", "best_move", "worst_move", "legal_moves", "ood_mate"])
        ucis = [m.uci() for m in legal_moves(b)]
        body = {"kind": kind, "fen": b.fen(), "id": f"r{len(out)}"}
        if kind == "predict_move":
            body["response_text"] = _text(rng, ucis)
            if rng.random() < 0.3:
                body["reward_mode"] = "centipawn_delta"
        elif kind in ("best_move", "worst_move"):
            key = (b.fen(), kind)
            if key not in choice_cache:
                try:
                    choice_cache[key] = make_choice_task(b, session, kind, random.Random(len(choice_cache)))
                except TaskError:
                    choice_cache[key] = None
            task = choice_cache[key]
            if task is None:
                continue
            cands = [m.uci() for m in task.candidates]
            body.update(candidates=cands, answer_key=task.answer_key.uci(), response_text=_text(rng, cands))
        elif kind == "legal_moves":
            squares = sorted({m[:2] for m in ucis})
            sq = rng.choice(squares)
            truth = [m.uci() for m in legal_moves_for_square(b, Square.parse(sq))]
            guess = [m for m in truth if rng.random() < 0.7] + rng.sample(ucis, min(2, len(ucis)) if rng.random() < 0.4 else 0)
            body["target_square"] = sq
            if rng.random() < 0.5:
                body["answer_key"] = truth
            body["response_text"] = "Final Answer: " + (", ".join(guess) if guess else "none")
        else:
            fen = rng.choice(MATE_IN_ONE)
            body["fen"] = fen
            body["response_text"] = _text(rng, [m.uci() for m in legal_moves(parse_fen(fen))])
        out.append(body)
    return out


def library_reward(body, session):
    """Reward for ``body`` computed with direct library calls (no service code)."""
    kind = TaskKind(body["kind"])
    board = parse_fen(body["fen"])
    text = body["response_text"]
    if kind is TaskKind.PREDICT_MOVE:
        task = EvalTask(kind, board)
        return score_predict_move(task, text, session, body.get("reward_mode", "rank")).reward
    if kind in (TaskKind.BEST_MOVE, TaskKind.WORST_MOVE):
        task = EvalTask(kind, board, tuple(parse_uci_move(c) for c in body["candidates"]), None,
                        parse_uci_move(body["answer_key"]))
        return score_choice(task, text).reward
    if kind is TaskKind.LEGAL_MOVES:
        sq = Square.parse(body["target_square"])
        key = frozenset(legal_moves_for_square(board, sq))
        return score_legal_moves(EvalTask(kind, board, (), sq, key), text).reward
    return score_ood_mate(board, text).reward
