"""Board state, FEN I/O and the rules of chess on top of the kernel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional

from ._backend import kernel
from .types import (
    BLACK,
    DEFAULT_VALUATION,
    SQUARES,
    WHITE,
    Color,
    Move,
    Piece,
    PieceKind,
    Square,
    ValuationTable,
    parse_uci_move,
)

STARTING_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

_CASTLE_BITS = (("K", 1), ("Q", 2), ("k", 4), ("q", 8))


class FenError(ValueError):
    """Base class for FEN parse errors."""


class FenFieldCountError(FenError):
    pass


class FenPieceError(FenError):
    pass


class FenRankLengthError(FenError):
    pass


class FenFieldError(FenError):
    """Bad side-to-move, castling, en-passant or clock field."""


class FenInvariantError(FenError):
    """Syntactically valid FEN describing an impossible position."""


class IllegalMoveError(ValueError):
    def __init__(self, move, board, reason):
        super().__init__(f"illegal move {move} in {board.fen()}: {reason}")
        self.move = move
        self.reason = reason


class NotAMotionPatternError(IllegalMoveError):
    def __init__(self, move, board):
        super().__init__(move, board, "not a possible motion for the piece")


class LeavesKingInCheckError(IllegalMoveError):
    def __init__(self, move, board):
        super().__init__(move, board, "leaves own king in check")


class SquareSelectionError(ValueError):
    pass


class EmptySquareError(SquareSelectionError):
    pass


class OpponentPieceError(SquareSelectionError):
    pass


@dataclass(frozen=True)
class Board:
    """Immutable position.

    ``squares`` is the 64-byte kernel encoding (a1 first); ``castling`` is the
    K=1/Q=2/k=4/q=8 bitmask and ``ep`` the en-passant target index or -1.
    Repetition history is deliberately not tracked.
    """

    squares: bytes
    turn: Color = WHITE
    castling: int = 0
    ep: int = -1
    halfmove_clock: int = 0
    fullmove_number: int = 1

    # -- construction -----------------------------------------------------

    @classmethod
    def from_fen(cls, text: str) -> "Board":
        return parse_fen(text)

    @classmethod
    def start(cls) -> "Board":
        return parse_fen(STARTING_FEN)

    @classmethod
    def from_placement(cls, placement: Dict[Square, Piece], turn: Color = WHITE, **kw) -> "Board":
        sq = bytearray(64)
        for s, p in placement.items():
            sq[s.index] = p.code
        board = cls(bytes(sq), turn, **kw)
        _validate(board)
        return board

    # -- accessors ----------------------------------------------------------

    @property
    def white_to_move(self) -> bool:
        return self.turn is WHITE

    @property
    def en_passant(self) -> Optional[Square]:
        return SQUARES[self.ep] if self.ep >= 0 else None

    @property
    def castling_rights(self) -> str:
        return "".join(ch for ch, bit in _CASTLE_BITS if self.castling & bit) or "-"

    @property
    def ply(self) -> int:
        """Plies played since the game start, derived from the move counters."""
        return 2 * (self.fullmove_number - 1) + (0 if self.turn is WHITE else 1)

    def piece_at(self, square: Square) -> Optional[Piece]:
        code = self.squares[square.index]
        return Piece.from_code(code) if code else None

    def placement(self) -> Dict[Square, Piece]:
        return {SQUARES[i]: Piece.from_code(c) for i, c in enumerate(self.squares) if c}

    def pieces(self, color: Color, kind: Optional[PieceKind] = None) -> List[Square]:
        out = []
        for i, c in enumerate(self.squares):
            if not c:
                continue
            p = Piece.from_code(c)
            if p.color is color and (kind is None or p.kind is kind):
                out.append(SQUARES[i])
        return out

    def king(self, color: Color) -> Square:
        return SQUARES[kernel.king_square(self.squares, color is WHITE)]

    def fen(self) -> str:
        return emit_fen(self)

    def epd(self) -> str:
        """First four FEN fields (position identity without clocks)."""
        return " ".join(emit_fen(self).split(" ")[:4])

    # -- rules --------------------------------------------------------------

    def legal_moves(self) -> List[Move]:
        return legal_moves(self)

    def push(self, move) -> "Board":
        return apply_move(self, move)

    def is_check(self, color: Optional[Color] = None) -> bool:
        return is_check(self, self.turn if color is None else color)

    def __str__(self) -> str:
        return self.fen()


def parse_fen(text: str) -> Board:
    fields = text.strip().split()
    if len(fields) != 6:
        raise FenFieldCountError(f"FEN needs 6 fields, got {len(fields)}: {text!r}")
    placement, side, castling, ep, half, full = fields
    ranks = placement.split("/")
    if len(ranks) != 8:
        raise FenRankLengthError(f"FEN placement needs 8 ranks, got {len(ranks)}")
    sq = bytearray(64)
    for i, rank_text in enumerate(ranks):
        rank = 7 - i
        f = 0
        for ch in rank_text:
            if ch.isdigit():
                if ch == "0":
                    raise FenRankLengthError(f"zero skip count in rank {rank_text!r}")
                f += int(ch)
            else:
                try:
                    piece = Piece.from_symbol(ch)
                except ValueError:
                    raise FenPieceError(f"invalid piece letter {ch!r}") from None
                if f >= 8:
                    raise FenRankLengthError(f"rank {rank_text!r} overflows 8 files")
                sq[rank * 8 + f] = piece.code
                f += 1
            if f > 8:
                raise FenRankLengthError(f"rank {rank_text!r} overflows 8 files")
        if f != 8:
            raise FenRankLengthError(f"rank {rank_text!r} has {f} files, expected 8")
    if side not in ("w", "b"):
        raise FenFieldError(f"side to move must be 'w' or 'b', got {side!r}")
    rights = 0
    if castling != "-":
        seen = ""
        for ch in castling:
            bit = dict(_CASTLE_BITS).get(ch)
            if bit is None or ch in seen:
                raise FenFieldError(f"invalid castling field {castling!r}")
            seen += ch
            rights |= bit
        if seen != "".join(c for c, _ in _CASTLE_BITS if c in seen):
            raise FenFieldError(f"castling field {castling!r} is not in KQkq order")
    ep_idx = -1
    if ep != "-":
        try:
            ep_idx = Square.parse(ep).index
        except ValueError:
            raise FenFieldError(f"invalid en-passant square {ep!r}") from None
    try:
        halfmove = int(half)
        fullmove = int(full)
    except ValueError:
        raise FenFieldError("move counters must be integers") from None
    if halfmove < 0 or fullmove < 1 or not half.isdigit() or not full.isdigit():
        raise FenFieldError("halfmove clock must be >= 0 and fullmove number >= 1")
    board = Board(bytes(sq), WHITE if side == "w" else BLACK, rights, ep_idx, halfmove, fullmove)
    _validate(board)
    return board


def _validate(board: Board) -> None:
    sq = board.squares
    if sq.count(PieceKind.KING) != 1 or sq.count(PieceKind.KING | 8) != 1:
        raise FenInvariantError("each side must have exactly one king")
    for f in range(8):
        for idx in (f, 56 + f):
            if sq[idx] & 7 == PieceKind.PAWN:
                raise FenInvariantError(f"pawn on back rank at {SQUARES[idx].name}")
    if board.ep >= 0:
        rank = board.ep >> 3
        want = 5 if board.turn is WHITE else 2
        if rank != want:
            raise FenInvariantError(f"en-passant square {SQUARES[board.ep].name} inconsistent with side to move")
        pawn_idx = board.ep - 8 if board.turn is WHITE else board.ep + 8
        pawn = PieceKind.PAWN | (8 if board.turn is WHITE else 0)
        if sq[pawn_idx] != pawn or sq[board.ep]:
            raise FenInvariantError(f"no double-pushed pawn behind en-passant square {SQUARES[board.ep].name}")
    for ch, bit, king_idx, rook_idx in (("K", 1, 4, 7), ("Q", 2, 4, 0), ("k", 4, 60, 63), ("q", 8, 60, 56)):
        if board.castling & bit:
            color = 0 if ch.isupper() else 8
            if sq[king_idx] != (PieceKind.KING | color) or sq[rook_idx] != (PieceKind.ROOK | color):
                raise FenInvariantError(f"castling right {ch} without king and rook on their home squares")
    if kernel.in_check(sq, board.turn is not WHITE):
        raise FenInvariantError("the side not to move is in check")


def emit_fen(board: Board) -> str:
    rows = []
    for rank in range(7, -1, -1):
        row = ""
        empty = 0
        for f in range(8):
            code = board.squares[rank * 8 + f]
            if code:
                if empty:
                    row += str(empty)
                    empty = 0
                row += Piece.from_code(code).symbol
            else:
                empty += 1
        if empty:
            row += str(empty)
        rows.append(row)
    ep = SQUARES[board.ep].name if board.ep >= 0 else "-"
    side = "w" if board.turn is WHITE else "b"
    return f"{'/'.join(rows)} {side} {board.castling_rights} {ep} {board.halfmove_clock} {board.fullmove_number}"


def _legal_codes(board: Board) -> List[int]:
    return kernel.gen_legal(board.squares, board.turn is WHITE, board.castling, board.ep)


def legal_moves(board: Board) -> List[Move]:
    """All legal moves, sorted by UCI text."""
    moves = [Move.from_code(c) for c in _legal_codes(board)]
    moves.sort(key=Move.uci)
    return moves


def pseudo_legal_moves(board: Board) -> List[Move]:
    """Moves obeying piece motion and occupancy but ignoring king safety, sorted by UCI text."""
    moves = [Move.from_code(c) for c in kernel.gen_pseudo(board.squares, board.turn is WHITE, board.castling, board.ep)]
    moves.sort(key=Move.uci)
    return moves


def legal_moves_for_square(board: Board, square: Square) -> List[Move]:
    piece = board.piece_at(square)
    if piece is None:
        raise EmptySquareError(f"no piece on {square.name}")
    if piece.color is not board.turn:
        raise OpponentPieceError(f"piece on {square.name} belongs to {piece.color.value}, not the side to move")
    return [m for m in legal_moves(board) if m.from_square == square]


def _coerce_move(move) -> Move:
    return parse_uci_move(move) if isinstance(move, str) else move


def apply_move(board: Board, move) -> Board:
    """Play a legal move and return the resulting board; ``board`` is unchanged."""
    move = _coerce_move(move)
    code = move.code
    white = board.turn is WHITE
    if code not in _legal_codes(board):
        if code in kernel.gen_pseudo(board.squares, white, board.castling, board.ep):
            raise LeavesKingInCheckError(move, board)
        raise NotAMotionPatternError(move, board)
    return _apply_code(board, code)


def _apply_code(board: Board, code: int) -> Board:
    white = board.turn is WHITE
    squares, castling, ep, irreversible = kernel.make(board.squares, white, board.castling, board.ep, code)
    return Board(
        bytes(squares),
        board.turn.other,
        castling,
        ep,
        0 if irreversible else board.halfmove_clock + 1,
        board.fullmove_number + (0 if white else 1),
    )


def replay(board: Board, moves) -> Board:
    for m in moves:
        board = apply_move(board, m)
    return board


def is_check(board: Board, color: Color) -> bool:
    return kernel.in_check(board.squares, color is WHITE)


def is_checkmate(board: Board) -> bool:
    return is_check(board, board.turn) and not _legal_codes(board)


def is_stalemate(board: Board) -> bool:
    return not is_check(board, board.turn) and not _legal_codes(board)


def is_terminal(board: Board) -> bool:
    return not _legal_codes(board)


def attackers_of(board: Board, target: Square, by_color: Color, legal: bool = False) -> List[Square]:
    """Squares of ``by_color`` pieces attacking ``target``.

    With ``legal=False`` this is the pattern attack: any piece whose motion
    reaches the square, ignoring pins and whose turn it is. With
    ``legal=True`` only pieces with a legal capture on ``target`` count,
    which requires ``by_color`` to be the side to move and an opponent piece
    on the square (en passant counts when ``target`` holds the pawn that can
    be taken that way).
    """
    if not legal:
        return [SQUARES[i] for i in kernel.attackers(board.squares, target.index, by_color is WHITE)]
    if by_color is not board.turn:
        return []
    victim = board.piece_at(target)
    if victim is None or victim.color is by_color:
        return []
    sources = set()
    for m in legal_moves(board):
        if m.to_square == target:
            sources.add(m.from_square)
        elif board.ep >= 0 and m.to_square.index == board.ep and board.squares[m.from_square.index] & 7 == PieceKind.PAWN:
            pawn_idx = board.ep - 8 if board.turn is WHITE else board.ep + 8
            if pawn_idx == target.index:
                sources.add(m.from_square)
    return sorted(sources, key=lambda s: s.index)


def is_capture(board: Board, move: Move) -> bool:
    if board.squares[move.to_square.index]:
        return True
    return (move.to_square.index == board.ep
            and board.squares[move.from_square.index] & 7 == PieceKind.PAWN)


def is_castling(board: Board, move: Move) -> bool:
    return (board.squares[move.from_square.index] & 7 == PieceKind.KING
            and abs(move.to_square.file - move.from_square.file) == 2)


def gives_check(board: Board, move: Move) -> bool:
    after = apply_move(board, move)
    return is_check(after, after.turn)


def material_delta(board: Board, perspective: Color, table: ValuationTable = DEFAULT_VALUATION) -> int:
    total = 0
    for code in board.squares:
        if code and code & 7 != PieceKind.KING:
            v = table[PieceKind(code & 7)]
            total += v if (code & 8 == 0) == (perspective is WHITE) else -v
    return total


def perft(board: Board, depth: int) -> int:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return int(kernel.perft(board.squares, board.turn is WHITE, board.castling, board.ep, depth))


def iter_line(board: Board, moves) -> Iterator[Board]:
    """Yield the board after each move of ``moves``, validating legality."""
    for m in moves:
        board = apply_move(board, m)
        yield board
