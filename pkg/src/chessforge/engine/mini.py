"""A small deterministic UCI engine.

It exists so the engine client, data generators and reward service can run
end to end where no external engine is installed. Search is a fixed-depth
alpha-beta over material and piece-square terms, each root move searched
with a full window so MultiPV scores are exact at the given depth. Supports
``uci``, ``isready``, ``setoption`` (MultiPV, Hash, Threads), ``ucinewgame``,
``position``, ``go depth|movetime|perft [searchmoves ...]`` and ``quit``.

Run with ``python -m chessforge.engine.mini``.
"""

from __future__ import annotations

import sys
import time

from ..core import STARTING_FEN, apply_move, parse_fen
from ..core._backend import BACKEND, kernel
from ..core.types import Move

NAME = "chessforge-mini 0.1"
MATE_SCORE = kernel.MATE_SCORE
MATE_BOUND = kernel.MATE_BOUND


def format_score(score: int) -> str:
    if score > MATE_BOUND:
        plies = MATE_SCORE - score
        return f"mate {(plies + 1) // 2}"
    if score < -MATE_BOUND:
        plies = MATE_SCORE + score
        return f"mate {-(plies // 2)}"
    return f"cp {score}"


class MiniEngine:
    def __init__(self, out=sys.stdout):
        self.out = out
        self.board = parse_fen(STARTING_FEN)
        self.multipv = 1
        self.options = {"multipv": 1, "hash": 16, "threads": 1}

    def emit(self, line: str) -> None:
        self.out.write(line + "\n")
        self.out.flush()

    def handle(self, line: str) -> bool:
        """Process one command; returns False on ``quit``."""
        toks = line.split()
        if not toks:
            return True
        cmd = toks[0]
        if cmd == "uci":
            self.emit(f"id name {NAME}")
            self.emit("id author chessforge")
            self.emit("option name MultiPV type spin default 1 min 1 max 500")
            self.emit("option name Hash type spin default 16 min 1 max 1024")
            self.emit("option name Threads type spin default 1 min 1 max 1")
            self.emit("uciok")
        elif cmd == "isready":
            self.emit("readyok")
        elif cmd == "setoption":
            self._setoption(toks)
        elif cmd == "ucinewgame":
            self.board = parse_fen(STARTING_FEN)
        elif cmd == "position":
            self._position(toks)
        elif cmd == "go":
            self._go(toks)
        elif cmd == "d":
            self.emit(f"info string fen {self.board.fen()} backend {BACKEND}")
        elif cmd == "quit":
            return False
        else:
            self.emit(f"info string unknown command {cmd}")
        return True

    def _setoption(self, toks):
        if "name" not in toks:
            return
        i = toks.index("name")
        j = toks.index("value") if "value" in toks else len(toks)
        name = " ".join(toks[i + 1:j]).lower()
        value = " ".join(toks[j + 1:])
        if name not in self.options:
            self.emit(f"info string No such option: {name}")
            return
        try:
            self.options[name] = int(value)
        except ValueError:
            self.emit(f"info string bad value for {name}")

    def _position(self, toks):
        try:
            if toks[1] == "startpos":
                board = parse_fen(STARTING_FEN)
                rest = toks[2:]
            elif toks[1] == "fen":
                board = parse_fen(" ".join(toks[2:8]))
                rest = toks[8:]
            else:
                return
            if rest and rest[0] == "moves":
                for mv in rest[1:]:
                    board = apply_move(board, mv)
            self.board = board
        except (ValueError, IndexError) as exc:
            self.emit(f"info string bad position: {exc}")

    def _go(self, toks):
        depth = None
        movetime = None
        perft_depth = None
        searchmoves = []
        i = 1
        while i < len(toks):
            t = toks[i]
            if t == "depth":
                depth = int(toks[i + 1])
                i += 2
            elif t == "movetime":
                movetime = int(toks[i + 1])
                i += 2
            elif t == "perft":
                perft_depth = int(toks[i + 1])
                i += 2
            elif t == "searchmoves":
                i += 1
                while i < len(toks) and len(toks[i]) in (4, 5) and toks[i][1].isdigit():
                    searchmoves.append(toks[i])
                    i += 1
            else:
                i += 1
        if perft_depth is not None:
            self._perft(perft_depth)
            return
        b = self.board
        white = b.white_to_move
        legal = kernel.gen_legal(b.squares, white, b.castling, b.ep)
        if searchmoves:
            wanted = {Move.from_uci(m).code for m in searchmoves}
            legal = [m for m in legal if m in wanted]
        if not legal:
            in_check = kernel.in_check(b.squares, white)
            self.emit(f"info depth 0 score {'mate 0' if in_check else 'cp 0'}")
            self.emit("bestmove (none)")
            return
        start = time.monotonic()
        if depth is None and movetime is None:
            depth = 4
        results = None
        if depth is not None:
            results, nodes = kernel.analyse(b.squares, white, b.castling, b.ep, depth, legal)
            reached = depth
        else:
            reached = 0
            nodes = 0
            budget = movetime / 1000.0
            d = 1
            while d <= 32:
                t0 = time.monotonic()
                res, n = kernel.analyse(b.squares, white, b.castling, b.ep, d, legal)
                results, reached = res, d
                nodes += n
                took = time.monotonic() - t0
                if time.monotonic() - start + took * 8 > budget:
                    break
                d += 1
        ranked = sorted(
            zip(legal, results),
            key=lambda item: (-item[1][0], Move.from_code(item[0]).uci()),
        )
        k = min(self.options["multipv"], len(ranked))
        ms = int((time.monotonic() - start) * 1000)
        for idx in range(k):
            _, (score, pv) = ranked[idx]
            pv_text = " ".join(Move.from_code(m).uci() for m in pv)
            self.emit(
                f"info depth {reached} seldepth {reached} multipv {idx + 1} score {format_score(score)} "
                f"nodes {nodes} time {ms} pv {pv_text}"
            )
        self.emit(f"bestmove {Move.from_code(ranked[0][0]).uci()}")

    def _perft(self, depth):
        b = self.board
        white = b.white_to_move
        total = 0
        rows = []
        for code in kernel.gen_legal(b.squares, white, b.castling, b.ep):
            nb, nc, ne, _ = kernel.make(b.squares, white, b.castling, b.ep, code)
            n = kernel.perft(nb, not white, nc, ne, depth - 1) if depth > 0 else 1
            rows.append((Move.from_code(code).uci(), n))
            total += n
        for uci, n in sorted(rows):
            self.emit(f"{uci}: {n}")
        self.emit("")
        self.emit(f"Nodes searched: {total}")


def main(argv=None) -> int:
    engine = MiniEngine()
    for raw in sys.stdin:
        if not engine.handle(raw.strip()):
            break
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
