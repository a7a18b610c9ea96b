"""Rules-of-chess kernel: boards, FEN/UCI text, legal moves and attacks."""

from ._backend import BACKEND
from .board import (
    STARTING_FEN,
    Board,
    EmptySquareError,
    FenError,
    FenFieldCountError,
    FenFieldError,
    FenInvariantError,
    FenPieceError,
    FenRankLengthError,
    IllegalMoveError,
    LeavesKingInCheckError,
    NotAMotionPatternError,
    OpponentPieceError,
    SquareSelectionError,
    apply_move,
    attackers_of,
    emit_fen,
    gives_check,
    is_capture,
    is_castling,
    is_check,
    is_checkmate,
    is_stalemate,
    is_terminal,
    iter_line,
    legal_moves,
    legal_moves_for_square,
    material_delta,
    parse_fen,
    perft,
    pseudo_legal_moves,
    replay,
)
from .types import (
    BLACK,
    DEFAULT_VALUATION,
    PROMOTION_KINDS,
    SQUARES,
    WHITE,
    Color,
    Move,
    Piece,
    PieceKind,
    Square,
    UciMoveError,
    ValuationTable,
    emit_uci_move,
    parse_uci_move,
)

__all__ = [name for name in dir() if not name.startswith("_")]
