import sys
import threading
import time

import chess
import pytest

from chessforge.core import Board, apply_move, legal_moves, parse_fen
from chessforge.engine import (
    MATE_BASE,
    CentipawnScore,
    EngineCacheMiss,
    EngineConfig,
    EngineDiedError,
    EngineSpawnError,
    EngineTimeoutError,
    PoolExhausted,
    SessionPool,
    TranscriptCache,
    best_line,
    engine_perft,
    evaluate,
    make_key,
    mate_to_centipawn,
    parse_info,
    rank_moves,
    replay_session,
    start_session,
)
from chessforge.engine.uci import summarize
from conftest import FIXTURES, mini_config

FAKE = [sys.executable, str(FIXTURES / "fake_engine.py")]


def fake(mode, **kw):
    return EngineConfig(tuple(FAKE + [mode]), depth=3, **kw)


# --- scores and parsing ------------------------------------------------------

def test_mate_mapping():
    assert mate_to_centipawn(1) == MATE_BASE - 1
    assert mate_to_centipawn(-4) == -(MATE_BASE - 4)
    assert mate_to_centipawn(1) > mate_to_centipawn(3) > 9000
    with pytest.raises(ValueError):
        mate_to_centipawn(0)
    assert CentipawnScore.from_uci("mate", 2).mate_in == 3
    assert CentipawnScore.from_uci("mate", -2).mate_in == -4
    assert CentipawnScore.from_uci("mate", 0).value == -MATE_BASE
    assert CentipawnScore.from_uci("cp", 50000).value == 9000
    s = CentipawnScore.mate(3)
    assert s.flipped().flipped() == s and s.flipped().value == -s.value


def test_parse_info_fields():
    info = parse_info("info depth 12 seldepth 18 multipv 3 score cp -35 lowerbound nodes 1234 nps 10 "
                      "hashfull 3 tbhits 0 time 9 pv e2e4 e7e5 g1f3")
    assert (info.depth, info.multipv, info.score_kind, info.score_value) == (12, 3, "cp", -35)
    assert info.bound == "lowerbound"
    assert info.pv == ["e2e4", "e7e5", "g1f3"]
    assert parse_info("bestmove e2e4") is None
    assert parse_info("info string hello world").string == "hello world"
    wdl = parse_info("info depth 5 score cp 10 wdl 400 500 100 pv d2d4")
    assert wdl.pv == ["d2d4"] and wdl.score_value == 10


def test_summarize_keeps_last_exact_line():
    reply = summarize([
        "info depth 1 multipv 1 score cp 10 pv e2e4",
        "info depth 2 multipv 1 score cp 30 upperbound pv d2d4",
        "info depth 2 multipv 1 score cp 25 pv g1f3",
        "info depth 2 multipv 2 score cp 5 pv e2e4",
        "bestmove g1f3 ponder e7e5",
    ])
    assert reply.bestmove == "g1f3"
    assert reply.lines[1].pv == ["g1f3"] and reply.lines[2].score_value == 5


# --- cache ---------------------------------------------------------------------

def test_cache_round_trip(tmp_path):
    c = TranscriptCache(engine_id="x 1")
    c.put(make_key("fen b", "depth 2", 1), ["bestmove a2a3"])
    c.put(make_key("fen a", "depth 2", 3, ["e2e4"]), ["info depth 1 score cp 1 pv e2e4", "bestmove e2e4"])
    p = c.save(tmp_path / "c.jsonl")
    text = p.read_text()
    assert text.splitlines()[0] == '{"engine": "x 1"}'
    assert text.index("fen a") < text.index("fen b")
    d = TranscriptCache(p)
    assert len(d) == 2 and d.engine_id == "x 1"
    assert d.get("fen a|depth 2|multipv 3|searchmoves e2e4")[1] == "bestmove e2e4"
    assert d.get("nope") is None and d.misses == 1
    d.save(tmp_path / "d.jsonl")
    assert (tmp_path / "d.jsonl").read_bytes() == p.read_bytes()


# --- live mini engine ------------------------------------------------------------

def test_handshake_and_identity(session):
    assert session.engine_id.startswith("chessforge-mini")
    assert session.alive


def test_rank_moves_covers_all_legal(session, walk_boards):
    for b in walk_boards[:25]:
        ranked = rank_moves(session, b)
        assert sorted(e.move.uci() for e in ranked) == sorted(m.uci() for m in chess.Board(b.fen()).legal_moves)
        vals = [e.score.value for e in ranked]
        assert vals == sorted(vals, reverse=True)
        for e in ranked:
            assert e.pv[0] == e.move


def test_rank_moves_in_chunks_matches_single_search(engine_cache):
    b = parse_fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1")
    with start_session(mini_config(multipv_max=7), TranscriptCache()) as chunked:
        small = rank_moves(chunked, b)
    with start_session(mini_config(), TranscriptCache()) as whole:
        big = rank_moves(whole, b)
    assert [(e.move, e.score) for e in small] == [(e.move, e.score) for e in big]


def test_evaluate_terminal_positions_without_engine():
    mate = parse_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3")
    sess = replay_session(mini_config(), TranscriptCache())
    assert evaluate(sess, mate) == CentipawnScore.checkmated()
    stale = parse_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1")
    assert evaluate(sess, stale).value == 0


def test_evaluate_finds_mate_in_one(session):
    b = parse_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1")
    s = evaluate(session, b)
    assert s.is_mate and s.mate_in == 1
    assert rank_moves(session, b)[0].move.uci() == "a1a8"


def test_best_line_is_legal_and_scored(session, walk_boards):
    for b in walk_boards[:10]:
        res = best_line(session, b, 5)
        cur = b
        for m in res.moves:
            assert m in legal_moves(cur)
            cur = apply_move(cur, m)
        assert cur.fen() == res.end_board.fen()
        assert len(res.moves) == 5 or res.terminal
        v = evaluate(session, cur)
        assert res.end_score == (v if cur.turn is b.turn else v.flipped())


def test_engine_perft(session):
    assert engine_perft(session, Board.start(), 3) == 8902


def test_replay_session_answers_from_cache(session, engine_cache):
    b = Board.start()
    live = rank_moves(session, b)
    replay = replay_session(session.config, engine_cache)
    assert [(e.move, e.score) for e in rank_moves(replay, b)] == [(e.move, e.score) for e in live]
    assert replay.engine_calls == 0
    with pytest.raises(EngineCacheMiss):
        evaluate(replay, parse_fen("4k3/8/8/8/8/8/8/4K2R w K - 0 7"))


def test_cache_strips_timing_fields():
    cache = TranscriptCache()
    with start_session(mini_config(), cache) as s:
        evaluate(s, Board.start())
    for key in list(cache._entries):
        for line in cache.get(key):
            assert " time " not in line and " nps " not in line


# --- failures -----------------------------------------------------------------------

def test_spawn_failure():
    with pytest.raises(EngineSpawnError):
        start_session(EngineConfig(("/nonexistent/engine",), depth=1))


def test_handshake_timeout():
    with pytest.raises(EngineTimeoutError):
        start_session(fake("silent", startup_timeout_ms=300))


def test_search_timeout_and_death():
    with start_session(fake("hang", search_timeout_ms=200)) as s:
        with pytest.raises(EngineTimeoutError):
            evaluate(s, Board.start())
    with start_session(fake("die")) as s:
        with pytest.raises(EngineDiedError):
            evaluate(s, Board.start())


def test_mate_reply_and_bound_lines_ignored():
    b = parse_fen("r1bqkbnr/pppp1ppp/2n5/4p2Q/2B1P3/8/PPPP1PPP/RNB1K1NR w KQkq - 0 1")
    with start_session(fake("mate")) as s:
        assert s.engine_id == "fake-engine 1.0"
        v = evaluate(s, b)
    assert v.mate_in == 3 and v.value == MATE_BASE - 3


# --- pool ---------------------------------------------------------------------------

def test_pool_restarts_dead_sessions():
    starts = []

    def factory():
        starts.append(1)
        return start_session(fake("die"))

    pool = SessionPool(factory, size=1)
    for _ in range(2):
        with pytest.raises(EngineDiedError):
            with pool.session() as s:
                evaluate(s, Board.start())
    assert pool.status()["restarts"] == 2 and len(starts) == 2
    pool.close()


def test_pool_cap_and_exhaustion():
    pool = SessionPool(lambda: replay_session(mini_config(), TranscriptCache()), size=2, checkout_timeout=0.05)
    gate = threading.Event()
    holders = []

    def hold():
        with pool.session():
            holders.append(1)
            gate.wait(5)

    threads = [threading.Thread(target=hold) for _ in range(2)]
    for t in threads:
        t.start()
    while len(holders) < 2:
        time.sleep(0.01)
    with pytest.raises(PoolExhausted):
        with pool.session():
            pass
    gate.set()
    for t in threads:
        t.join()
    st = pool.status()
    assert st["max_in_use"] == 2 and st["in_use"] == 0 and st["started"] == 2
