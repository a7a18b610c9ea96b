"""Freeze perft counts from two generators that share no code with chessforge.

Fairy-Stockfish (via ``pyffish``) and python-chess must agree on every count
before anything is written. Run from the repo root:

    python3 tests/oracles/make_perft_oracle.py
"""

import json
import sys
from pathlib import Path

import chess
import pyffish as sf

OUT = Path(__file__).resolve().parents[1] / "fixtures" / "perft_oracle.json"

START = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"
FENS = [
    "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
    "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
    "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1",
    "r2q1rk1/pP1p2pp/Q4n2/bbp1p3/Np6/1B3NBn/pPPP1PPP/R3K2R b KQ - 0 1",
    "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
    "r4rk1/1pp1qppp/p1np1n2/2b1p1B1/2B1P1b1/P1NP1N2/1PP1QPPP/R4RK1 w - - 0 10",
    "8/8/8/8/k2Pp2Q/8/8/3K4 b - d3 0 1",
    "3k4/3p4/8/K1P4r/8/8/8/8 b - - 0 1",
    "8/8/4k3/8/2p5/8/B2P2K1/8 w - - 0 1",
    "8/8/1k6/2b5/2pP4/8/5K2/8 b - d3 0 1",
    "5k2/8/8/8/8/8/8/4K2R w K - 0 1",
    "3k4/8/8/8/8/8/8/R3K3 w Q - 0 1",
    "r3k2r/1b4bq/8/8/8/8/7B/R3K2R w KQkq - 0 1",
    "r3k2r/8/3Q4/8/8/5q2/8/R3K2R b KQkq - 0 1",
    "2K2r2/4P3/8/8/8/8/8/3k4 w - - 0 1",
    "8/8/1P2K3/8/2n5/1q6/8/5k2 b - - 0 1",
    "4k3/1P6/8/8/8/8/K7/8 w - - 0 1",
    "n1n5/PPPk4/8/8/8/8/4Kppp/5N1N b - - 0 1",
    "8/5bk1/8/2Pp4/8/1K6/8/8 w - d6 0 1",
    "r3k2r/8/8/8/3pPp2/8/8/R3K1RR b KQkq e3 0 1",
]


def perft_chess(board, depth):
    if depth == 1:
        return board.legal_moves.count()
    n = 0
    for m in list(board.legal_moves):
        board.push(m)
        n += perft_chess(board, depth - 1)
        board.pop()
    return n


def perft_ffish(fen, depth):
    moves = sf.legal_moves("chess", fen, [])
    if depth == 1:
        return len(moves)
    if depth == 2:
        return sum(len(sf.legal_moves("chess", fen, [m])) for m in moves)
    return sum(perft_ffish(sf.get_fen("chess", fen, [m]), depth - 1) for m in moves)


def main():
    cases = [{"fen": START, "depths": [1, 2, 3, 4]}] + [{"fen": f, "depths": [1, 2, 3]} for f in FENS]
    out = []
    for case in cases:
        counts = {}
        for d in case["depths"]:
            a = perft_chess(chess.Board(case["fen"]), d)
            b = perft_ffish(case["fen"], d)
            if a != b:
                sys.exit(f"oracles disagree on {case['fen']} d{d}: python-chess {a}, fairy-stockfish {b}")
            counts[str(d)] = a
        print(case["fen"], counts, flush=True)
        out.append({"fen": case["fen"], "counts": counts})
    doc = {"generators": ["python-chess " + chess.__version__, "fairy-stockfish (pyffish) " + ".".join(map(str, sf.version()))],
           "cases": out}
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote", OUT)


if __name__ == "__main__":
    main()
