"""Recompute FBA answers with python-chess only; nothing here imports chessforge."""

import chess

KINDS = {"pawn": chess.PAWN, "knight": chess.KNIGHT, "bishop": chess.BISHOP,
         "rook": chess.ROOK, "queen": chess.QUEEN, "king": chess.KING}
COLORS = {"white": chess.WHITE, "black": chess.BLACK}


def _yn(flag):
    return "yes" if flag else "no"


def _captured_square(board, move):
    if board.is_en_passant(move):
        return chess.square(chess.square_file(move.to_square), chess.square_rank(move.from_square))
    return move.to_square


def answer(fen, question):
    """Expected answer string for one question dict (kind, params)."""
    board = chess.Board(fen)
    kind, p = question["kind"], question["params"]
    if kind == "is_legal":
        move = chess.Move.from_uci(p["move"])
        if COLORS[p["side"]] != board.turn:
            return "no"
        return _yn(move in board.legal_moves)
    if kind == "under_attack":
        attacker, victim = KINDS[p["attacker"]], KINDS[p["victim"]]
        for m in board.legal_moves:
            if not board.is_capture(m):
                continue
            if board.piece_type_at(m.from_square) != attacker:
                continue
            if board.piece_type_at(_captured_square(board, m)) == victim:
                return "yes"
        return "no"
    if kind == "mobility":
        sq = chess.parse_square(p["square"])
        return str(sum(1 for m in board.legal_moves if m.from_square == sq))
    if kind == "cloze_capture":
        target = chess.parse_square(p["target"])
        sources = {m.from_square for m in board.legal_moves
                   if board.is_capture(m) and _captured_square(board, m) == target}
        if len(sources) != 1:
            return None  # the question should never have been asked
        return chess.square_name(sources.pop())
    if kind == "is_check":
        color = COLORS[p["color"]]
        king = board.king(color)
        return _yn(board.is_attacked_by(not color, king))
    if kind == "mat_adv_value":
        me = COLORS[p["perspective"]]
        table = p["table"]
        total = 0
        for sq in chess.SQUARES:
            piece = board.piece_at(sq)
            if piece is None or piece.piece_type == chess.KING:
                continue
            v = table[chess.piece_name(piece.piece_type)]
            total += v if piece.color == me else -v
        return str(total)
    raise ValueError(f"unknown kind {kind}")
