"""Pure-Python move generation and search kernel.

This module is the reference fallback for ``_kernel`` (Cython). Both expose
the same functions with identical semantics and identical move ordering;
``tests/test_kernel_backends.py`` checks them against each other.

Board encoding: a 64-byte sequence indexed ``rank * 8 + file`` (a1 = 0,
h8 = 63). Piece codes are 1..6 (pawn..king) for white and 9..14 for black,
0 for an empty square. Moves are ints ``from | to << 6 | promo << 12`` where
``promo`` is a piece kind (2..5) or 0. Castling rights are a bitmask
K=1, Q=2, k=4, q=8. ``ep`` is the en-passant target square or -1.
"""

PAWN, KNIGHT, BISHOP, ROOK, QUEEN, KING = 1, 2, 3, 4, 5, 6
BLACK_BIT = 8

MATE_SCORE = 30000
MATE_BOUND = MATE_SCORE - 1000
INF = 10**6

_KNIGHT_DELTAS = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
_KING_DELTAS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
# first four orthogonal, last four diagonal
_RAY_DELTAS = ((0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (1, -1), (-1, -1), (-1, 1))


def _build_jump(deltas):
    table = []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        out = []
        for df, dr in deltas:
            nf, nr = f + df, r + dr
            if 0 <= nf < 8 and 0 <= nr < 8:
                out.append(nr * 8 + nf)
        table.append(tuple(out))
    return tuple(table)


def _build_rays():
    rays = []
    for df, dr in _RAY_DELTAS:
        per_sq = []
        for sq in range(64):
            f, r = sq & 7, sq >> 3
            out = []
            nf, nr = f + df, r + dr
            while 0 <= nf < 8 and 0 <= nr < 8:
                out.append(nr * 8 + nf)
                nf += df
                nr += dr
            per_sq.append(tuple(out))
        rays.append(tuple(per_sq))
    return tuple(rays)


def _build_pawn_attacks():
    # PAWN_ATTACKS[0][sq]: squares a white pawn on sq attacks; [1] for black
    white, black = [], []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        w, b = [], []
        for df in (-1, 1):
            nf = f + df
            if 0 <= nf < 8:
                if r < 7:
                    w.append((r + 1) * 8 + nf)
                if r > 0:
                    b.append((r - 1) * 8 + nf)
        white.append(tuple(w))
        black.append(tuple(b))
    return (tuple(white), tuple(black))


KNIGHT_TARGETS = _build_jump(_KNIGHT_DELTAS)
KING_TARGETS = _build_jump(_KING_DELTAS)
RAYS = _build_rays()
PAWN_ATTACKS = _build_pawn_attacks()

# rights kept when a move touches the square
_CASTLE_MASK = [15] * 64
_CASTLE_MASK[4] = 15 & ~3
_CASTLE_MASK[7] = 15 & ~1
_CASTLE_MASK[0] = 15 & ~2
_CASTLE_MASK[60] = 15 & ~12
_CASTLE_MASK[63] = 15 & ~4
_CASTLE_MASK[56] = 15 & ~8
CASTLE_MASK = tuple(_CASTLE_MASK)

PIECE_VALUES = (0, 100, 320, 330, 500, 900, 0)

# piece-square bonuses from white's point of view, index a1 = 0
_PST_PAWN = (
    0, 0, 0, 0, 0, 0, 0, 0,
    5, 10, 10, -20, -20, 10, 10, 5,
    5, -5, -10, 0, 0, -10, -5, 5,
    0, 0, 0, 20, 20, 0, 0, 0,
    5, 5, 10, 25, 25, 10, 5, 5,
    10, 10, 20, 30, 30, 20, 10, 10,
    50, 50, 50, 50, 50, 50, 50, 50,
    0, 0, 0, 0, 0, 0, 0, 0,
)
_PST_KNIGHT = (
    -50, -40, -30, -30, -30, -30, -40, -50,
    -40, -20, 0, 5, 5, 0, -20, -40,
    -30, 5, 10, 15, 15, 10, 5, -30,
    -30, 0, 15, 20, 20, 15, 0, -30,
    -30, 5, 15, 20, 20, 15, 5, -30,
    -30, 0, 10, 15, 15, 10, 0, -30,
    -40, -20, 0, 0, 0, 0, -20, -40,
    -50, -40, -30, -30, -30, -30, -40, -50,
)
_PST_BISHOP = (
    -20, -10, -10, -10, -10, -10, -10, -20,
    -10, 5, 0, 0, 0, 0, 5, -10,
    -10, 10, 10, 10, 10, 10, 10, -10,
    -10, 0, 10, 10, 10, 10, 0, -10,
    -10, 5, 5, 10, 10, 5, 5, -10,
    -10, 0, 5, 10, 10, 5, 0, -10,
    -10, 0, 0, 0, 0, 0, 0, -10,
    -20, -10, -10, -10, -10, -10, -10, -20,
)
_PST_ROOK = (
    0, 0, 0, 5, 5, 0, 0, 0,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    -5, 0, 0, 0, 0, 0, 0, -5,
    5, 10, 10, 10, 10, 10, 10, 5,
    0, 0, 0, 0, 0, 0, 0, 0,
)
_PST_QUEEN = (
    -20, -10, -10, -5, -5, -10, -10, -20,
    -10, 0, 5, 0, 0, 0, 0, -10,
    -10, 5, 5, 5, 5, 5, 0, -10,
    0, 0, 5, 5, 5, 5, 0, -5,
    -5, 0, 5, 5, 5, 5, 0, -5,
    -10, 0, 5, 5, 5, 5, 0, -10,
    -10, 0, 0, 0, 0, 0, 0, -10,
    -20, -10, -10, -5, -5, -10, -10, -20,
)
_PST_KING = (
    20, 30, 10, 0, 0, 10, 30, 20,
    20, 20, 0, 0, 0, 0, 20, 20,
    -10, -20, -20, -20, -20, -20, -20, -10,
    -20, -30, -30, -40, -40, -30, -30, -20,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
    -30, -40, -40, -50, -50, -40, -40, -30,
)
PST = (None, _PST_PAWN, _PST_KNIGHT, _PST_BISHOP, _PST_ROOK, _PST_QUEEN, _PST_KING)


def is_attacked(b, sq, by_white):
    """True if ``sq`` is attacked by any piece of the given color."""
    c = 0 if by_white else BLACK_BIT
    knight, king = c | KNIGHT, c | KING
    for s in KNIGHT_TARGETS[sq]:
        if b[s] == knight:
            return True
    for s in KING_TARGETS[sq]:
        if b[s] == king:
            return True
    pawn = c | PAWN
    # a white pawn attacks sq from the squares a black pawn on sq would attack
    for s in PAWN_ATTACKS[1 if by_white else 0][sq]:
        if b[s] == pawn:
            return True
    rook, bishop, queen = c | ROOK, c | BISHOP, c | QUEEN
    for d in range(8):
        straight = d < 4
        for s in RAYS[d][sq]:
            p = b[s]
            if p:
                if p == queen or p == (rook if straight else bishop):
                    return True
                break
    return False


def attackers(b, sq, by_white):
    """Squares of ``by_white`` pieces that attack ``sq`` (pattern attack), ascending."""
    c = 0 if by_white else BLACK_BIT
    out = []
    for s in KNIGHT_TARGETS[sq]:
        if b[s] == c | KNIGHT:
            out.append(s)
    for s in KING_TARGETS[sq]:
        if b[s] == c | KING:
            out.append(s)
    for s in PAWN_ATTACKS[1 if by_white else 0][sq]:
        if b[s] == c | PAWN:
            out.append(s)
    for d in range(8):
        straight = d < 4
        for s in RAYS[d][sq]:
            p = b[s]
            if p:
                if p == c | QUEEN or p == c | (ROOK if straight else BISHOP):
                    out.append(s)
                break
    out.sort()
    return out


def king_square(b, white):
    k = KING if white else BLACK_BIT | KING
    for s in range(64):
        if b[s] == k:
            return s
    return -1


def gen_pseudo(b, white, castling, ep):
    """Pseudo-legal moves: piece motion and occupancy rules, king safety ignored.

    Castling is emitted when rights and empty squares allow; attacked-square
    conditions are left to :func:`gen_legal`.
    """
    moves = []
    own = 0 if white else BLACK_BIT
    for s in range(64):
        p = b[s]
        if not p or (p & BLACK_BIT) != own:
            continue
        kind = p & 7
        if kind == PAWN:
            step = 8 if white else -8
            last_rank = 7 if white else 0
            start_rank = 1 if white else 6
            t = s + step
            if 0 <= t < 64 and not b[t]:
                if t >> 3 == last_rank:
                    for pr in (QUEEN, ROOK, BISHOP, KNIGHT):
                        moves.append(s | t << 6 | pr << 12)
                else:
                    moves.append(s | t << 6)
                    if s >> 3 == start_rank and not b[t + step]:
                        moves.append(s | (t + step) << 6)
            for t in PAWN_ATTACKS[0 if white else 1][s]:
                q = b[t]
                if (q and (q & BLACK_BIT) != own) or t == ep:
                    if t >> 3 == last_rank:
                        for pr in (QUEEN, ROOK, BISHOP, KNIGHT):
                            moves.append(s | t << 6 | pr << 12)
                    else:
                        moves.append(s | t << 6)
        elif kind == KNIGHT or kind == KING:
            for t in (KNIGHT_TARGETS if kind == KNIGHT else KING_TARGETS)[s]:
                q = b[t]
                if not q or (q & BLACK_BIT) != own:
                    moves.append(s | t << 6)
        else:
            lo = 4 if kind == BISHOP else 0
            hi = 4 if kind == ROOK else 8
            for d in range(lo, hi):
                for t in RAYS[d][s]:
                    q = b[t]
                    if q:
                        if (q & BLACK_BIT) != own:
                            moves.append(s | t << 6)
                        break
                    moves.append(s | t << 6)
    if white:
        if castling & 1 and b[4] == KING and b[7] == ROOK and not b[5] and not b[6]:
            moves.append(4 | 6 << 6)
        if castling & 2 and b[4] == KING and b[0] == ROOK and not b[1] and not b[2] and not b[3]:
            moves.append(4 | 2 << 6)
    else:
        bk, br = BLACK_BIT | KING, BLACK_BIT | ROOK
        if castling & 4 and b[60] == bk and b[63] == br and not b[61] and not b[62]:
            moves.append(60 | 62 << 6)
        if castling & 8 and b[60] == bk and b[56] == br and not b[57] and not b[58] and not b[59]:
            moves.append(60 | 58 << 6)
    return moves


def make(b, white, castling, ep, mv):
    """Apply a pseudo-legal move. Returns ``(board, castling, ep, irreversible)``.

    ``irreversible`` is true for pawn moves and captures (halfmove clock reset).
    """
    fr = mv & 63
    to = (mv >> 6) & 63
    promo = mv >> 12
    nb = bytearray(b)
    p = nb[fr]
    kind = p & 7
    irreversible = kind == PAWN or nb[to] != 0
    nb[to] = p
    nb[fr] = 0
    new_ep = -1
    if kind == PAWN:
        if to == ep:
            nb[to - 8 if white else to + 8] = 0
        if promo:
            nb[to] = (p & BLACK_BIT) | promo
        elif to - fr == 16 or fr - to == 16:
            new_ep = (fr + to) >> 1
    elif kind == KING and (to - fr == 2 or fr - to == 2):
        if to == 6:
            nb[5], nb[7] = nb[7], 0
        elif to == 2:
            nb[3], nb[0] = nb[0], 0
        elif to == 62:
            nb[61], nb[63] = nb[63], 0
        elif to == 58:
            nb[59], nb[56] = nb[56], 0
    castling &= CASTLE_MASK[fr] & CASTLE_MASK[to]
    return bytes(nb), castling, new_ep, irreversible


def gen_legal(b, white, castling, ep):
    """Legal moves in generation order (not sorted)."""
    ksq = king_square(b, white)
    them = not white
    out = []
    for mv in gen_pseudo(b, white, castling, ep):
        fr = mv & 63
        to = (mv >> 6) & 63
        if fr == ksq and (to - fr == 2 or fr - to == 2):
            mid = (fr + to) >> 1
            if is_attacked(b, fr, them) or is_attacked(b, mid, them) or is_attacked(b, to, them):
                continue
        nb = make(b, white, castling, ep, mv)[0]
        if not is_attacked(nb, to if fr == ksq else ksq, them):
            out.append(mv)
    return out


def in_check(b, white):
    return is_attacked(b, king_square(b, white), not white)


def perft(b, white, castling, ep, depth):
    if depth == 0:
        return 1
    moves = gen_legal(b, white, castling, ep)
    if depth == 1:
        return len(moves)
    total = 0
    for mv in moves:
        nb, nc, ne, _ = make(b, white, castling, ep, mv)
        total += perft(nb, not white, nc, ne, depth - 1)
    return total


def evaluate(b):
    """Static evaluation in centipawns from white's point of view."""
    score = 0
    for s in range(64):
        p = b[s]
        if p:
            kind = p & 7
            if p & BLACK_BIT:
                score -= PIECE_VALUES[kind] + PST[kind][s ^ 56]
            else:
                score += PIECE_VALUES[kind] + PST[kind][s]
    return score


def _order(b, moves):
    # captures first by victim value then cheaper attacker, stable on move int
    def key(mv):
        victim = b[(mv >> 6) & 63] & 7
        promo = mv >> 12
        if victim or promo:
            return (0, -PIECE_VALUES[victim] - PIECE_VALUES[promo], b[mv & 63] & 7, mv)
        return (1, 0, 0, mv)
    return sorted(moves, key=key)


def _negamax(b, white, castling, ep, depth, alpha, beta, ply, counter):
    counter[0] += 1
    if depth <= 0:
        if in_check(b, white) and not gen_legal(b, white, castling, ep):
            return -(MATE_SCORE - ply), []
        e = evaluate(b)
        return (e if white else -e), []
    moves = gen_legal(b, white, castling, ep)
    if not moves:
        if in_check(b, white):
            return -(MATE_SCORE - ply), []
        return 0, []
    best = -INF
    best_pv = []
    for mv in _order(b, moves):
        nb, nc, ne, _ = make(b, white, castling, ep, mv)
        score, pv = _negamax(nb, not white, nc, ne, depth - 1, -beta, -alpha, ply + 1, counter)
        score = -score
        if score > best:
            best = score
            best_pv = [mv] + pv
            if score > alpha:
                alpha = score
                if alpha >= beta:
                    break
    return best, best_pv


def analyse(b, white, castling, ep, depth, root_moves):
    """Score each root move with a full-window search of ``depth`` plies in total.

    Returns ``(results, nodes)`` where results is a list of ``(score, pv)`` in
    the order of ``root_moves``; scores are from the mover's point of view and
    ``pv`` starts with the root move.
    """
    counter = [0]
    results = []
    for mv in root_moves:
        nb, nc, ne, _ = make(b, white, castling, ep, mv)
        score, pv = _negamax(nb, not white, nc, ne, depth - 1, -INF, INF, 1, counter)
        results.append((-score, [mv] + pv))
    return results, counter[0]
