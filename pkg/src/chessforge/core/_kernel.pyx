# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled move generation and search kernel.

Mirrors ``_kernel_py`` function for function; see that module for the board,
move and castling encodings. Results (including move order inside the
search) must match the Python fallback exactly.
"""

from libc.string cimport memcpy

DEF MAX_MOVES = 256
DEF MAX_PLY = 64

cdef enum:
    PAWN = 1
    KNIGHT = 2
    BISHOP = 3
    ROOK = 4
    QUEEN = 5
    KING = 6
    BLACK_BIT = 8

MATE_SCORE = 30000
MATE_BOUND = MATE_SCORE - 1000
INF = 10 ** 6

cdef int C_MATE = 30000
cdef int C_INF = 1000000

cdef int knight_t[64][8]
cdef int knight_n[64]
cdef int king_t[64][8]
cdef int king_n[64]
cdef int rays[8][64][7]
cdef int ray_n[8][64]
cdef int pawn_att[2][64][2]
cdef int pawn_att_n[2][64]
cdef int castle_mask[64]
cdef int piece_val[7]
cdef int pst[7][64]

from ._kernel_py import (
    KNIGHT_TARGETS, KING_TARGETS, RAYS, PAWN_ATTACKS, CASTLE_MASK, PIECE_VALUES, PST,
)


cdef void _init_tables():
    cdef int sq, d, i, c, k
    for sq in range(64):
        knight_n[sq] = len(KNIGHT_TARGETS[sq])
        for i in range(knight_n[sq]):
            knight_t[sq][i] = KNIGHT_TARGETS[sq][i]
        king_n[sq] = len(KING_TARGETS[sq])
        for i in range(king_n[sq]):
            king_t[sq][i] = KING_TARGETS[sq][i]
        for d in range(8):
            ray_n[d][sq] = len(RAYS[d][sq])
            for i in range(ray_n[d][sq]):
                rays[d][sq][i] = RAYS[d][sq][i]
        for c in range(2):
            pawn_att_n[c][sq] = len(PAWN_ATTACKS[c][sq])
            for i in range(pawn_att_n[c][sq]):
                pawn_att[c][sq][i] = PAWN_ATTACKS[c][sq][i]
        castle_mask[sq] = CASTLE_MASK[sq]
    for k in range(7):
        piece_val[k] = PIECE_VALUES[k]
        for sq in range(64):
            pst[k][sq] = PST[k][sq] if k else 0


_init_tables()


cdef bint _attacked(const unsigned char* b, int sq, bint by_white) nogil:
    cdef int c = 0 if by_white else BLACK_BIT
    cdef int i, d, s, p
    cdef int knight = c | KNIGHT, king = c | KING, pawn = c | PAWN
    cdef int rook = c | ROOK, bishop = c | BISHOP, queen = c | QUEEN
    for i in range(knight_n[sq]):
        if b[knight_t[sq][i]] == knight:
            return True
    for i in range(king_n[sq]):
        if b[king_t[sq][i]] == king:
            return True
    cdef int pc = 1 if by_white else 0
    for i in range(pawn_att_n[pc][sq]):
        if b[pawn_att[pc][sq][i]] == pawn:
            return True
    for d in range(8):
        for i in range(ray_n[d][sq]):
            s = rays[d][sq][i]
            p = b[s]
            if p:
                if p == queen or p == (rook if d < 4 else bishop):
                    return True
                break
    return False


cdef int _king_sq(const unsigned char* b, bint white) nogil:
    cdef int k = KING if white else (BLACK_BIT | KING)
    cdef int s
    for s in range(64):
        if b[s] == k:
            return s
    return -1


cdef inline int _push_pawn(int* out, int n, int s, int t, bint promote) nogil:
    if promote:
        out[n] = s | t << 6 | QUEEN << 12
        out[n + 1] = s | t << 6 | ROOK << 12
        out[n + 2] = s | t << 6 | BISHOP << 12
        out[n + 3] = s | t << 6 | KNIGHT << 12
        return n + 4
    out[n] = s | t << 6
    return n + 1


cdef int _gen_pseudo(const unsigned char* b, bint white, int castling, int ep, int* out) nogil:
    cdef int n = 0
    cdef int own = 0 if white else BLACK_BIT
    cdef int s, t, p, q, kind, i, d, lo, hi, step, last_rank, start_rank
    cdef int pc = 0 if white else 1
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
                if (t >> 3) == last_rank:
                    n = _push_pawn(out, n, s, t, True)
                else:
                    out[n] = s | t << 6
                    n += 1
                    if (s >> 3) == start_rank and not b[t + step]:
                        out[n] = s | (t + step) << 6
                        n += 1
            for i in range(pawn_att_n[pc][s]):
                t = pawn_att[pc][s][i]
                q = b[t]
                if (q and (q & BLACK_BIT) != own) or t == ep:
                    n = _push_pawn(out, n, s, t, (t >> 3) == last_rank)
        elif kind == KNIGHT:
            for i in range(knight_n[s]):
                t = knight_t[s][i]
                q = b[t]
                if not q or (q & BLACK_BIT) != own:
                    out[n] = s | t << 6
                    n += 1
        elif kind == KING:
            for i in range(king_n[s]):
                t = king_t[s][i]
                q = b[t]
                if not q or (q & BLACK_BIT) != own:
                    out[n] = s | t << 6
                    n += 1
        else:
            lo = 4 if kind == BISHOP else 0
            hi = 4 if kind == ROOK else 8
            for d in range(lo, hi):
                for i in range(ray_n[d][s]):
                    t = rays[d][s][i]
                    q = b[t]
                    if q:
                        if (q & BLACK_BIT) != own:
                            out[n] = s | t << 6
                            n += 1
                        break
                    out[n] = s | t << 6
                    n += 1
    if white:
        if castling & 1 and b[4] == KING and b[7] == ROOK and not b[5] and not b[6]:
            out[n] = 4 | 6 << 6
            n += 1
        if castling & 2 and b[4] == KING and b[0] == ROOK and not b[1] and not b[2] and not b[3]:
            out[n] = 4 | 2 << 6
            n += 1
    else:
        if castling & 4 and b[60] == (BLACK_BIT | KING) and b[63] == (BLACK_BIT | ROOK) and not b[61] and not b[62]:
            out[n] = 60 | 62 << 6
            n += 1
        if castling & 8 and b[60] == (BLACK_BIT | KING) and b[56] == (BLACK_BIT | ROOK) and not b[57] and not b[58] and not b[59]:
            out[n] = 60 | 58 << 6
            n += 1
    return n


cdef bint _make(unsigned char* nb, bint white, int* castling, int* ep, int mv) nogil:
    """In-place move application on ``nb``; returns the irreversible flag."""
    cdef int fr = mv & 63
    cdef int to = (mv >> 6) & 63
    cdef int promo = mv >> 12
    cdef int p = nb[fr]
    cdef int kind = p & 7
    cdef bint irreversible = kind == PAWN or nb[to] != 0
    cdef int old_ep = ep[0]
    nb[to] = p
    nb[fr] = 0
    ep[0] = -1
    if kind == PAWN:
        if to == old_ep:
            nb[to - 8 if white else to + 8] = 0
        if promo:
            nb[to] = (p & BLACK_BIT) | promo
        elif to - fr == 16 or fr - to == 16:
            ep[0] = (fr + to) >> 1
    elif kind == KING and (to - fr == 2 or fr - to == 2):
        if to == 6:
            nb[5] = nb[7]
            nb[7] = 0
        elif to == 2:
            nb[3] = nb[0]
            nb[0] = 0
        elif to == 62:
            nb[61] = nb[63]
            nb[63] = 0
        elif to == 58:
            nb[59] = nb[56]
            nb[56] = 0
    castling[0] &= castle_mask[fr] & castle_mask[to]
    return irreversible


cdef int _gen_legal(const unsigned char* b, bint white, int castling, int ep, int* out) nogil:
    cdef int pseudo[MAX_MOVES]
    cdef unsigned char nb[64]
    cdef int np = _gen_pseudo(b, white, castling, ep, pseudo)
    cdef int ksq = _king_sq(b, white)
    cdef bint them = not white
    cdef int i, mv, fr, to, mid, c2, e2
    cdef int n = 0
    for i in range(np):
        mv = pseudo[i]
        fr = mv & 63
        to = (mv >> 6) & 63
        if fr == ksq and (to - fr == 2 or fr - to == 2):
            mid = (fr + to) >> 1
            if _attacked(b, fr, them) or _attacked(b, mid, them) or _attacked(b, to, them):
                continue
        memcpy(nb, b, 64)
        c2 = castling
        e2 = ep
        _make(nb, white, &c2, &e2, mv)
        if not _attacked(nb, to if fr == ksq else ksq, them):
            out[n] = mv
            n += 1
    return n


cdef long long _perft(const unsigned char* b, bint white, int castling, int ep, int depth) nogil:
    if depth == 0:
        return 1
    cdef int moves[MAX_MOVES]
    cdef unsigned char nb[64]
    cdef int n = _gen_legal(b, white, castling, ep, moves)
    if depth == 1:
        return n
    cdef long long total = 0
    cdef int i, c2, e2
    for i in range(n):
        memcpy(nb, b, 64)
        c2 = castling
        e2 = ep
        _make(nb, white, &c2, &e2, moves[i])
        total += _perft(nb, not white, c2, e2, depth - 1)
    return total


cdef int _evaluate(const unsigned char* b) nogil:
    cdef int score = 0
    cdef int s, p, kind
    for s in range(64):
        p = b[s]
        if p:
            kind = p & 7
            if p & BLACK_BIT:
                score -= piece_val[kind] + pst[kind][s ^ 56]
            else:
                score += piece_val[kind] + pst[kind][s]
    return score


cdef void _order(const unsigned char* b, int* moves, int n) nogil:
    # insertion sort on (class, -gain, attacker, mv); same key as the Python path
    cdef long long keys[MAX_MOVES]
    cdef int i, j, mv, victim, promo, tmpm
    cdef long long k
    for i in range(n):
        mv = moves[i]
        victim = b[(mv >> 6) & 63] & 7
        promo = mv >> 12
        if victim or promo:
            k = (<long long>(4000 - piece_val[victim] - piece_val[promo]) * 8 + (b[mv & 63] & 7)) * 65536 + mv
        else:
            k = (<long long>1 << 40) + mv
        keys[i] = k
    for i in range(1, n):
        k = keys[i]
        tmpm = moves[i]
        j = i - 1
        while j >= 0 and keys[j] > k:
            keys[j + 1] = keys[j]
            moves[j + 1] = moves[j]
            j -= 1
        keys[j + 1] = k
        moves[j + 1] = tmpm


cdef int _negamax(const unsigned char* b, bint white, int castling, int ep, int depth,
                  int alpha, int beta, int ply, long long* counter,
                  int (*pv)[MAX_PLY], int* pv_len) nogil:
    cdef int moves[MAX_MOVES]
    cdef unsigned char nb[64]
    cdef int n, i, score, best, e, c2, e2, j
    counter[0] += 1
    pv_len[ply] = 0
    if depth <= 0 or ply >= MAX_PLY - 1:
        if _attacked(b, _king_sq(b, white), not white):
            n = _gen_legal(b, white, castling, ep, moves)
            if n == 0:
                return -(C_MATE - ply)
        e = _evaluate(b)
        return e if white else -e
    n = _gen_legal(b, white, castling, ep, moves)
    if n == 0:
        if _attacked(b, _king_sq(b, white), not white):
            return -(C_MATE - ply)
        return 0
    _order(b, moves, n)
    best = -C_INF
    for i in range(n):
        memcpy(nb, b, 64)
        c2 = castling
        e2 = ep
        _make(nb, white, &c2, &e2, moves[i])
        score = -_negamax(nb, not white, c2, e2, depth - 1, -beta, -alpha, ply + 1, counter, pv, pv_len)
        if score > best:
            best = score
            pv[ply][0] = moves[i]
            for j in range(pv_len[ply + 1]):
                pv[ply][j + 1] = pv[ply + 1][j]
            pv_len[ply] = pv_len[ply + 1] + 1
            if score > alpha:
                alpha = score
                if alpha >= beta:
                    break
    return best


cdef const unsigned char* _as_board(b) except NULL:
    if len(b) != 64:
        raise ValueError("board must have 64 squares")
    return <const unsigned char*>(<bytes>b)


def is_attacked(b, int sq, by_white):
    b = bytes(b)
    return bool(_attacked(_as_board(b), sq, bool(by_white)))


def attackers(b, int sq, by_white):
    b = bytes(b)
    cdef const unsigned char* bp = _as_board(b)
    cdef int c = 0 if by_white else BLACK_BIT
    cdef int i, d, s, p
    cdef int pc = 1 if by_white else 0
    out = []
    for i in range(knight_n[sq]):
        if bp[knight_t[sq][i]] == (c | KNIGHT):
            out.append(knight_t[sq][i])
    for i in range(king_n[sq]):
        if bp[king_t[sq][i]] == (c | KING):
            out.append(king_t[sq][i])
    for i in range(pawn_att_n[pc][sq]):
        if bp[pawn_att[pc][sq][i]] == (c | PAWN):
            out.append(pawn_att[pc][sq][i])
    for d in range(8):
        for i in range(ray_n[d][sq]):
            s = rays[d][sq][i]
            p = bp[s]
            if p:
                if p == (c | QUEEN) or p == (c | (ROOK if d < 4 else BISHOP)):
                    out.append(s)
                break
    out.sort()
    return out


def king_square(b, white):
    b = bytes(b)
    return _king_sq(_as_board(b), bool(white))


def gen_pseudo(b, white, int castling, int ep):
    cdef int out[MAX_MOVES]
    b = bytes(b)
    cdef int n = _gen_pseudo(_as_board(b), bool(white), castling, ep, out)
    return [out[i] for i in range(n)]


def gen_legal(b, white, int castling, int ep):
    cdef int out[MAX_MOVES]
    b = bytes(b)
    cdef int n = _gen_legal(_as_board(b), bool(white), castling, ep, out)
    return [out[i] for i in range(n)]


def make(b, white, int castling, int ep, int mv):
    cdef unsigned char nb[64]
    b = bytes(b)
    memcpy(nb, _as_board(b), 64)
    cdef int c2 = castling, e2 = ep
    cdef bint irr = _make(nb, bool(white), &c2, &e2, mv)
    return (<char*>nb)[:64], c2, e2, bool(irr)


def in_check(b, white):
    b = bytes(b)
    cdef const unsigned char* bp = _as_board(b)
    return bool(_attacked(bp, _king_sq(bp, bool(white)), not white))


def perft(b, white, int castling, int ep, int depth):
    b = bytes(b)
    cdef const unsigned char* bp = _as_board(b)
    cdef bint w = bool(white)
    cdef long long r
    with nogil:
        r = _perft(bp, w, castling, ep, depth)
    return r


def evaluate(b):
    b = bytes(b)
    return _evaluate(_as_board(b))


def analyse(b, white, int castling, int ep, int depth, root_moves):
    cdef int pv[MAX_PLY][MAX_PLY]
    cdef int pv_len[MAX_PLY]
    cdef unsigned char nb[64]
    cdef long long counter = 0
    cdef int c2, e2, score, j, mv
    cdef bint w = bool(white)
    b = bytes(b)
    cdef const unsigned char* bp = _as_board(b)
    results = []
    for mv in root_moves:
        memcpy(nb, bp, 64)
        c2 = castling
        e2 = ep
        _make(nb, w, &c2, &e2, mv)
        score = -_negamax(nb, not w, c2, e2, depth - 1, -C_INF, C_INF, 1, &counter, pv, pv_len)
        line = [mv]
        for j in range(pv_len[1]):
            line.append(pv[1][j])
        results.append((score, line))
    return results, counter
