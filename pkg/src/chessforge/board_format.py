"""Text renderings of a board for prompts.

Byte layout of the visual formats (normative, golden files live in
``tests/golden``): eight grid lines, rank 8 first, each made of eight cells
of one space plus a glyph (uppercase white, lowercase black, ``.`` empty),
newline-terminated. ``uniform_visual`` appends one space before every
newline so that an empty cell at the end of a line tokenizes like a piece.
No file/rank labels are drawn.
"""

from __future__ import annotations

import enum

from .core import Board, emit_fen
from .core.types import WHITE, Piece


class BoardFormat(str, enum.Enum):
    FEN = "fen"
    SPACED_FEN = "spaced_fen"
    VISUAL_ASCII = "visual_ascii"
    UNIFORM_VISUAL = "uniform_visual"


def _grid_lines(board: Board) -> list[str]:
    lines = []
    for rank in range(7, -1, -1):
        cells = []
        for f in range(8):
            code = board.squares[rank * 8 + f]
            cells.append(" " + (Piece.from_code(code).symbol if code else "."))
        lines.append("".join(cells))
    return lines


def side_line(board: Board) -> str:
    return f"Side to move: {'white' if board.turn is WHITE else 'black'}"


def render(board: Board, fmt: BoardFormat | str = BoardFormat.VISUAL_ASCII) -> str:
    fmt = BoardFormat(fmt)
    if fmt is BoardFormat.FEN:
        return emit_fen(board)
    if fmt is BoardFormat.SPACED_FEN:
        return " ".join(emit_fen(board).split(" ")[0])
    lines = _grid_lines(board)
    if fmt is BoardFormat.UNIFORM_VISUAL:
        return "".join(line + " \n" for line in lines)
    return "".join(line + "\n" for line in lines)


def render_prompt_board(board: Board, fmt: BoardFormat | str = BoardFormat.VISUAL_ASCII) -> str:
    """Board text used inside every prompt: the rendering followed by the side to move."""
    fmt = BoardFormat(fmt)
    body = render(board, fmt)
    if not body.endswith("\n"):
        body += "\n"
    tail = " \n" if fmt is BoardFormat.UNIFORM_VISUAL else "\n"
    return body + side_line(board) + tail
