"""Position sources: FEN lists, PGN games and seeded sampling."""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple, Union

from .core import (
    WHITE,
    Board,
    Color,
    FenError,
    Move,
    PieceKind,
    Square,
    apply_move,
    legal_moves,
    parse_fen,
)

log = logging.getLogger(__name__)


@dataclass
class Diagnostic:
    source: str
    line: int
    message: str

    def __str__(self):
        return f"{self.source}:{self.line}: {self.message}"


class PositionFileError(ValueError):
    pass


def load_fens(path, strict: bool = False, diagnostics: Optional[List[Diagnostic]] = None) -> Iterator[Board]:
    """Yield boards from a file of one FEN per line.

    Blank lines and ``#`` comments are skipped. Bad lines are appended to
    ``diagnostics`` (with 1-based line numbers) or raise when ``strict``.
    """
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise PositionFileError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            try:
                yield parse_fen(text)
            except FenError as exc:
                if strict:
                    raise PositionFileError(f"{path}:{lineno}: {exc}") from exc
                diag = Diagnostic(str(path), lineno, str(exc))
                log.warning("%s", diag)
                if diagnostics is not None:
                    diagnostics.append(diag)


# --- SAN (input only) -------------------------------------------------------

class SanError(ValueError):
    pass


class AmbiguousSanError(SanError):
    pass


class IllegalSanError(SanError):
    pass


_SAN_RE = re.compile(
    r"^(?P<piece>[NBRQK])?(?P<ff>[a-h])?(?P<fr>[1-8])?(?P<x>x)?(?P<to>[a-h][1-8])"
    r"(?:=?(?P<promo>[NBRQ]))?$"
)


def parse_san(board: Board, san: str) -> Move:
    """Resolve a SAN move against the legal moves of ``board``."""
    text = san.strip()
    text = re.sub(r"[+#]+$|[!?]+$", "", text)
    text = re.sub(r"[+#]+$", "", text)
    if text in ("O-O", "0-0", "O-O-O", "0-0-0"):
        rank = 0 if board.turn is WHITE else 7
        to_file = 6 if text.count("O") + text.count("0") == 2 else 2
        target = Move(Square(4, rank), Square(to_file, rank))
        for m in legal_moves(board):
            if m == target and board.squares[m.from_square.index] & 7 == PieceKind.KING:
                return m
        raise IllegalSanError(f"castling {san!r} is not legal here")
    m = _SAN_RE.match(text)
    if not m:
        raise SanError(f"cannot parse SAN {san!r}")
    kind = PieceKind.from_symbol(m["piece"]) if m["piece"] else PieceKind.PAWN
    to = Square.parse(m["to"])
    promo = PieceKind.from_symbol(m["promo"]) if m["promo"] else None
    candidates = []
    for mv in legal_moves(board):
        if mv.to_square != to or mv.promotion != promo:
            continue
        if board.squares[mv.from_square.index] & 7 != kind:
            continue
        if m["ff"] and mv.from_square.file != "abcdefgh".index(m["ff"]):
            continue
        if m["fr"] and mv.from_square.rank != int(m["fr"]) - 1:
            continue
        candidates.append(mv)
    if not candidates:
        raise IllegalSanError(f"no legal move matches {san!r}")
    if len(candidates) > 1:
        raise AmbiguousSanError(f"{san!r} matches {[c.uci() for c in candidates]}")
    return candidates[0]


# --- PGN ---------------------------------------------------------------------

_TAG_RE = re.compile(r'^\s*\[(\w+)\s+"((?:[^"\\]|\\.)*)"\]\s*$')
_RESULTS = {"1-0", "0-1", "1/2-1/2", "*"}


@dataclass
class PgnGame:
    tags: dict = field(default_factory=dict)
    movetext: str = ""
    line: int = 1


def _ended(movetext: str) -> bool:
    toks = movetext.split()
    return bool(toks) and toks[-1] in _RESULTS


def _split_games(text: str) -> Iterator[PgnGame]:
    game = None
    in_moves = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("%"):
            continue
        tag = _TAG_RE.match(line)
        if tag:
            if game is None or in_moves:
                if game is not None:
                    yield game
                game = PgnGame(line=lineno)
                in_moves = False
            game.tags[tag.group(1)] = tag.group(2)
            continue
        if not line:
            continue
        if game is None or (in_moves and _ended(game.movetext)):
            # a result token closes the game even when the next one has no tags
            if game is not None:
                yield game
            game = PgnGame(line=lineno)
        in_moves = True
        game.movetext += "\n" + line
    if game is not None:
        yield game


def _tokenize_movetext(text: str) -> List[str]:
    out = []
    i = 0
    depth = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "{":
            j = text.find("}", i)
            i = n if j < 0 else j + 1
            continue
        if c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c == "(":
            depth += 1
            i += 1
            continue
        if c == ")":
            depth = max(0, depth - 1)
            i += 1
            continue
        if c.isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "{}();":
            j += 1
        tok = text[i:j]
        i = j
        if depth:
            continue
        if tok.startswith("$"):
            continue
        tok = re.sub(r"^\d+\.+", "", tok)
        if not tok or tok in _RESULTS:
            continue
        out.append(tok)
    return out


def load_pgn(path, diagnostics: Optional[List[Diagnostic]] = None) -> Iterator[Tuple[Board, int]]:
    """Yield ``(board, ply_index)`` for every position of every game, start included.

    Games with an unparseable or illegal move are skipped with a diagnostic.
    A ``FEN`` tag sets the starting position; other tags are ignored.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PositionFileError(f"cannot read {path}: {exc}") from exc
    for game in _split_games(text):
        try:
            board = parse_fen(game.tags["FEN"]) if "FEN" in game.tags else Board.start()
            positions = [(board, board.ply)]
            for tok in _tokenize_movetext(game.movetext):
                board = apply_move(board, parse_san(board, tok))
                positions.append((board, board.ply))
        except (SanError, FenError, ValueError) as exc:
            diag = Diagnostic(str(path), game.line, f"game skipped: {exc}")
            log.warning("%s", diag)
            if diagnostics is not None:
                diagnostics.append(diag)
            continue
        yield from positions


# --- sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class PositionFilter:
    min_ply: int = 16
    max_ply: Optional[int] = None
    side_to_move: Optional[Color] = None
    require_nonterminal: bool = True
    dedupe_by_fen: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_ply is not None and self.min_ply > self.max_ply:
            raise ValueError("min_ply must not exceed max_ply")

    def accepts(self, board: Board, ply: int) -> bool:
        if ply < self.min_ply:
            return False
        if self.max_ply is not None and ply > self.max_ply:
            return False
        if self.side_to_move is not None and board.turn is not self.side_to_move:
            return False
        if self.require_nonterminal and not legal_moves(board):
            return False
        return True


def _with_ply(stream: Iterable[Union[Board, Tuple[Board, int]]]) -> Iterator[Tuple[Board, int]]:
    for item in stream:
        if isinstance(item, Board):
            yield item, item.ply
        else:
            yield item


def sample_positions(stream, flt: PositionFilter, count: int) -> List[Board]:
    """Uniform reservoir sample of at most ``count`` boards passing ``flt``.

    Deterministic for a fixed seed and input order. Duplicates (by the first
    four FEN fields) are dropped before sampling when ``dedupe_by_fen``.
    """
    rng = random.Random(flt.seed)
    reservoir: List[Board] = []
    seen = set()
    i = 0
    for board, ply in _with_ply(stream):
        if not flt.accepts(board, ply):
            continue
        if flt.dedupe_by_fen:
            key = board.epd()
            if key in seen:
                continue
            seen.add(key)
        if len(reservoir) < count:
            reservoir.append(board)
        else:
            j = rng.randint(0, i)
            if j < count:
                reservoir[j] = board
        i += 1
    return reservoir


def random_walk_positions(n: int, seed: int = 0, min_ply: int = 0, max_ply: int = 60,
                          start: Optional[Board] = None) -> List[Board]:
    """Boards reached by seeded uniformly random legal play (a fuzz corpus).

    Each board is the end of an independent walk of a random length in
    ``[min_ply, max_ply]``; walks that hit a terminal position stop there.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        board = start or Board.start()
        length = rng.randint(min_ply, max_ply)
        for _ in range(length):
            moves = legal_moves(board)
            if not moves:
                break
            board = apply_move(board, rng.choice(moves))
        out.append(board)
    return out
