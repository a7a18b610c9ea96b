"""Value types for squares, pieces, moves and piece valuations."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional

FILE_NAMES = "abcdefgh"
RANK_NAMES = "12345678"


class Color(enum.Enum):
    WHITE = "white"
    BLACK = "black"

    @property
    def other(self) -> "Color":
        return Color.BLACK if self is Color.WHITE else Color.WHITE

    @property
    def is_white(self) -> bool:
        return self is Color.WHITE

    def __str__(self) -> str:
        return self.value


WHITE = Color.WHITE
BLACK = Color.BLACK


class PieceKind(enum.IntEnum):
    PAWN = 1
    KNIGHT = 2
    BISHOP = 3
    ROOK = 4
    QUEEN = 5
    KING = 6

    @property
    def symbol(self) -> str:
        return "pnbrqk"[self - 1]

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_symbol(cls, ch: str) -> "PieceKind":
        idx = "pnbrqk".find(ch.lower())
        if idx < 0 or len(ch) != 1:
            raise ValueError(f"unknown piece symbol {ch!r}")
        return cls(idx + 1)

    @classmethod
    def from_name(cls, name: str) -> "PieceKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown piece name {name!r}") from None


PROMOTION_KINDS = (PieceKind.KNIGHT, PieceKind.BISHOP, PieceKind.ROOK, PieceKind.QUEEN)


class Square(NamedTuple):
    """A board square; ``file`` and ``rank`` are 0-based (a1 is ``Square(0, 0)``)."""

    file: int
    rank: int

    @property
    def index(self) -> int:
        return self.rank * 8 + self.file

    @property
    def name(self) -> str:
        return FILE_NAMES[self.file] + RANK_NAMES[self.rank]

    @classmethod
    def from_index(cls, index: int) -> "Square":
        return _SQUARES[index]

    @classmethod
    def parse(cls, text: str) -> "Square":
        if len(text) != 2 or text[0] not in FILE_NAMES or text[1] not in RANK_NAMES:
            raise ValueError(f"invalid square {text!r}")
        return _SQUARES[RANK_NAMES.index(text[1]) * 8 + FILE_NAMES.index(text[0])]

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Square({self.name})"


_SQUARES = tuple(tuple.__new__(Square, (i & 7, i >> 3)) for i in range(64))
SQUARES = _SQUARES


class Piece(NamedTuple):
    color: Color
    kind: PieceKind

    @property
    def symbol(self) -> str:
        s = self.kind.symbol
        return s.upper() if self.color is Color.WHITE else s

    @property
    def code(self) -> int:
        return int(self.kind) | (0 if self.color is Color.WHITE else 8)

    @classmethod
    def from_code(cls, code: int) -> "Piece":
        return cls(Color.BLACK if code & 8 else Color.WHITE, PieceKind(code & 7))

    @classmethod
    def from_symbol(cls, ch: str) -> "Piece":
        kind = PieceKind.from_symbol(ch)
        return cls(Color.WHITE if ch.isupper() else Color.BLACK, kind)

    def __str__(self) -> str:
        return f"{self.color.value} {self.kind.label}"


class UciMoveError(ValueError):
    """Malformed UCI move text."""


class Move(NamedTuple):
    """A move in coordinate form. Text form is UCI, e.g. ``e2e4`` or ``a7a8q``."""

    from_square: Square
    to_square: Square
    promotion: Optional[PieceKind] = None

    def uci(self) -> str:
        text = self.from_square.name + self.to_square.name
        if self.promotion is not None:
            text += self.promotion.symbol
        return text

    @classmethod
    def from_uci(cls, text: str) -> "Move":
        return parse_uci_move(text)

    @property
    def code(self) -> int:
        promo = int(self.promotion) if self.promotion is not None else 0
        return self.from_square.index | self.to_square.index << 6 | promo << 12

    @classmethod
    def from_code(cls, code: int) -> "Move":
        promo = code >> 12
        return cls(_SQUARES[code & 63], _SQUARES[(code >> 6) & 63], PieceKind(promo) if promo else None)

    def __str__(self) -> str:
        return self.uci()

    def __repr__(self) -> str:
        return f"Move({self.uci()})"


def parse_uci_move(text: str) -> Move:
    if not isinstance(text, str) or len(text) not in (4, 5):
        raise UciMoveError(f"UCI move must be 4 or 5 characters: {text!r}")
    try:
        src = Square.parse(text[0:2])
        dst = Square.parse(text[2:4])
    except ValueError as exc:
        raise UciMoveError(f"invalid square in UCI move {text!r}") from exc
    promo = None
    if len(text) == 5:
        if text[4] not in "nbrq":
            raise UciMoveError(f"invalid promotion letter in {text!r}")
        promo = PieceKind.from_symbol(text[4])
    if src == dst:
        raise UciMoveError(f"null move is not a UCI move here: {text!r}")
    return Move(src, dst, promo)


def emit_uci_move(move: Move) -> str:
    return move.uci()


_DEFAULT_VALUES = {
    PieceKind.PAWN: 1,
    PieceKind.KNIGHT: 3,
    PieceKind.BISHOP: 3,
    PieceKind.ROOK: 5,
    PieceKind.QUEEN: 9,
}


@dataclass(frozen=True)
class ValuationTable:
    """Integer piece values in pawn units, king excluded."""

    values: Mapping[PieceKind, int] = field(default_factory=lambda: dict(_DEFAULT_VALUES))

    def __post_init__(self):
        vals = {PieceKind(k) if not isinstance(k, str) else PieceKind.from_name(k): int(v)
                for k, v in dict(self.values).items()}
        if PieceKind.KING in vals:
            raise ValueError("the king has no material value")
        missing = set(_DEFAULT_VALUES) - set(vals)
        if missing:
            raise ValueError(f"missing values for {sorted(k.label for k in missing)}")
        if any(v <= 0 for v in vals.values()):
            raise ValueError("piece values must be positive")
        object.__setattr__(self, "values", MappingProxyType(vals))

    def __getitem__(self, kind: PieceKind) -> int:
        return self.values[kind]

    def describe(self) -> str:
        return ", ".join(f"{k.label}={self.values[k]}" for k in sorted(self.values))

    def to_dict(self) -> dict:
        return {k.label: self.values[k] for k in sorted(self.values)}

    def __hash__(self):
        return hash(tuple(sorted(self.values.items())))

    def __eq__(self, other):
        return isinstance(other, ValuationTable) and dict(self.values) == dict(other.values)


DEFAULT_VALUATION = ValuationTable()
