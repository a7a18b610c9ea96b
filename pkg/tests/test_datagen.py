import json
import random
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from chessforge.core import Board, apply_move, legal_moves, parse_fen, parse_uci_move
from chessforge.datagen import (
    PromptBank,
    Sample,
    balance_fba,
    gen_best_line,
    gen_best_move,
    gen_fba,
    gen_guided_prompt,
    gen_vabp,
    make_guided_sample,
    rebalance_accepted,
    rejection_filter,
    teacher_complete,
    verify_guided_output,
)
from chessforge.datagen.balance import quota_subsample
from chessforge.datagen.fba import KINDS, Unsatisfiable, answer_histogram, q_cloze_capture, q_is_legal
from chessforge.datagen.guided import RejectReason, expected_verdicts
from chessforge.datagen.rejection import Thresholds, fullmove_bucket, make_rejection_sample
from chessforge.datagen.samples import SampleError, dump_jsonl, load_samples
from chessforge.datagen.teacher import (
    TeacherConfig,
    TeacherConnectionError,
    TeacherMalformedResponse,
    TeacherStatusError,
    TeacherTimeout,
)
from chessforge.datagen.vabp import (
    SearchTree,
    VabpParams,
    brute_force_minimax,
    build_vabp_tree,
    check_narration,
    softmax_order,
)
from chessforge.engine import evaluate, rank_moves
from chessforge.evals import make_choice_task, make_legal_moves_task, make_predict_move_task
from chessforge.positions import random_walk_positions
from oracles.fba_oracle import answer as oracle_answer

# --- samples -----------------------------------------------------------------------


def test_sample_json_is_stable(tmp_path):
    s = Sample("p", "r", "best_move", Board.start().fen(), {"seed": 1, "b": 2, "a": {"z": 1, "y": 2}})
    line = s.to_json()
    assert line.startswith('{"prompt": "p", "response": "r", "task": "best_move", "fen": ')
    assert line.endswith('"meta": {"a": {"y": 2, "z": 1}, "b": 2, "seed": 1}}')
    dump_jsonl([s], tmp_path / "s.jsonl")
    (back,) = load_samples(tmp_path / "s.jsonl")
    assert back.to_json() == line


def test_sample_validation():
    fen = Board.start().fen()
    with pytest.raises(SampleError):
        Sample("", "r", "fba", fen, {"seed": 0})
    with pytest.raises(SampleError):
        Sample("p", "r", "fba", fen, {})
    with pytest.raises(ValueError):
        Sample("p", "r", "fba", "bad fen", {"seed": 0})
    with pytest.raises(ValueError):
        Sample("p", "r", "chat", fen, {"seed": 0})


# --- balancing ----------------------------------------------------------------------

def test_quota_exact_marginals():
    labels = ["a"] * 50 + ["b"] * 30 + ["c"] * 20
    res = quota_subsample(labels, {"a": 1, "b": 1, "c": 2}, random.Random(0))
    got = Counter(labels[i] for i in res.keep)
    assert got == {"a": 10, "b": 10, "c": 20} and res.feasible
    assert res.keep == sorted(res.keep)
    again = quota_subsample(labels, {"a": 1, "b": 1, "c": 2}, random.Random(0))
    assert again.keep == res.keep


def test_quota_infeasible_caps_and_reports():
    labels = ["a"] * 10 + ["b"] * 90
    res = quota_subsample(labels, {"a": 0.2, "b": 0.3, "c": 0.5}, random.Random(0), name="x")
    got = Counter(labels[i] for i in res.keep)
    assert got == {"a": 10, "b": 30}
    assert not res.feasible and "c" in res.diagnostics[0]
    with pytest.raises(ValueError):
        quota_subsample(labels, {"a": -1, "b": 2}, random.Random(0))


# --- FBA ----------------------------------------------------------------------------------

def test_fba_answers_match_oracle(walk_boards):
    seen = Counter()
    for i, b in enumerate(walk_boards):
        s = gen_fba(b, random.Random(i), n_questions=6, seed=i)
        for q in s.meta["questions"]:
            assert q["answer"] == oracle_answer(s.fen, q), (s.fen, q)
            seen[q["kind"]] += 1
        lines = s.response.splitlines()
        assert lines == [f"{j}. {q['answer']}" for j, q in enumerate(s.meta["questions"], 1)]
        for j, q in enumerate(s.meta["questions"], 1):
            assert f"{j}. {q['text']}" in s.prompt
    assert set(seen) == set(KINDS)


def test_fba_hard_negatives_are_self_check():
    # the e2 bishop is pinned; moving it is pattern-legal but illegal
    b = parse_fen("4k3/4r3/8/8/8/8/4B3/4K3 w - - 0 1")
    rng = random.Random(1)
    sources = Counter()
    for _ in range(300):
        q = q_is_legal(b, rng)
        sources[q.params["source"]] += 1
        if q.params["source"] == "self_check":
            mv = parse_uci_move(q.params["move"])
            assert mv not in legal_moves(b) and q.answer == "no"
    assert sources["self_check"] > sources["wrong_side"] > 0


def test_fba_cloze_unique_and_unsatisfiable():
    b = parse_fen("4k3/8/8/3p4/4P3/8/8/4K3 w - - 0 1")
    q = q_cloze_capture(b, random.Random(0))
    assert (q.answer, q.params["target"]) == ("e4", "d5")
    with pytest.raises(Unsatisfiable):
        q_cloze_capture(Board.start(), random.Random(0))


def test_fba_balance(walk_boards):
    batch = [gen_fba(b, random.Random(i), n_questions=5, weights={"is_check": 5}, seed=i)
             for i, b in enumerate(walk_boards)]
    hist = answer_histogram(batch)
    assert hist["is_check"]["no"] > hist["is_check"].get("yes", 0)
    res = balance_fba(batch, {"is_check": {"yes": 1, "no": 1}}, seed=3)
    after = res.after["is_check"]
    assert after["yes"] == after["no"] == hist["is_check"]["yes"]
    for s in res.samples:
        for q in s.meta["questions"]:
            assert q["answer"] == oracle_answer(s.fen, q)
        if "fba_balance" in s.meta:
            assert s.response.count("\n") + 1 == len(s.meta["questions"])


# --- best move / best line ---------------------------------------------------------------

def test_best_move_sample(session, walk_boards):
    for i, b in enumerate(walk_boards[:10]):
        s = gen_best_move(b, session, seed=i)
        assert s.response == rank_moves(session, b)[0].move.uci()
        assert "Side to move" in s.prompt


def test_best_line_sample_integrity(session, walk_boards):
    plies = Counter()
    for i, b in enumerate(walk_boards[:30]):
        s = gen_best_line(b, session, random.Random(i), seed=i)
        m = s.meta
        plies[m["plies"]] += 1
        cur = b
        for u in m["line"]:
            cur = apply_move(cur, u)
        start = evaluate(session, b).value
        end = evaluate(session, cur)
        end = end if cur.turn is b.turn else end.flipped()
        assert m["delta"] == end.value - start
        assert s.response == " ".join(m["line"]) + f" delta: {m['delta']:+d}"
        assert len(m["line"]) == m["plies"] or m["truncated"]
    assert set(plies) <= {4, 5, 6} and len(plies) == 3


# --- VABP ----------------------------------------------------------------------------

def test_softmax_order_prefers_high_scores():
    rng = random.Random(0)
    first = Counter(softmax_order([300, 0, -300], 3, 100.0, rng)[0] for _ in range(2000))
    assert first[0] > 1800
    assert sorted(softmax_order([1, 2, 3, 4], 4, 50.0, rng)) == [0, 1, 2, 3]


def test_vabp_tree_invariants(session, walk_boards):
    for i, b in enumerate(walk_boards[:25]):
        p = VabpParams(seed=i)
        s = gen_vabp(b, session, p)
        tree = SearchTree.from_dict(s.meta["tree"])
        assert tree.nodes <= p.node_budget and tree.max_depth <= p.depth_limit
        assert tree.nodes == sum(1 for _ in tree.root.iter_nodes()) - 1
        best = max(tree.root.children,
                   key=lambda c: brute_force_minimax(c) * (1 if b.white_to_move else -1))
        assert s.meta["winner"] == best.move.uci()
        assert s.response.endswith(f"Final Answer: {s.meta['winner']}")
        assert check_narration(b, s.response) == []
        for node in tree.root.iter_nodes():
            if node.pruned:
                assert not node.children and node.prune_reference is not None


def test_vabp_is_deterministic_and_seed_sensitive(session, walk_boards):
    b = walk_boards[3]
    a = gen_vabp(b, session, VabpParams(seed=5)).to_json()
    assert gen_vabp(b, session, VabpParams(seed=5)).to_json() == a
    outs = {gen_vabp(b, session, VabpParams(seed=k)).response for k in range(6)}
    assert len(outs) > 1


def test_vabp_pruning_rule(session, walk_boards):
    for i, b in enumerate(walk_boards[:30]):
        p = VabpParams(seed=i, writeoff_margin=40)
        tree = build_vabp_tree(b, session, p)
        for node in tree.root.iter_nodes():
            s = 1 if node.white_to_move else -1
            for c in node.children:
                if c.pruned:
                    assert s * (c.prune_reference - c.score) > p.writeoff_margin


def test_check_narration_catches_bad_moves():
    b = Board.start()
    good = "Consider e2e4.\n  Black answers e7e5.\n    Then g1f3.\n  Or c7c5.\nFinal Answer: e2e4"
    assert check_narration(b, good) == []
    assert check_narration(b, "Consider e2e5.") != []
    # e7e5 at level 0 would be a White move
    assert check_narration(b, "Consider e7e5.") != []
    assert check_narration(b, "Consider e2e4.\n    too deep d7d5") != []


def test_prompt_bank_validation(tmp_path):
    bank = PromptBank.load("v1")
    assert bank.version == "v1"
    data = {s: list(bank.slots[s]) for s in bank.slots}
    data["prune"] = ["{side} prunes {move}"]
    with pytest.raises(ValueError):
        PromptBank(data)
    del data["prune"]
    with pytest.raises(ValueError):
        PromptBank(data)


def test_vabp_params_validation():
    with pytest.raises(ValueError):
        VabpParams(temperature=0)
    with pytest.raises(ValueError):
        VabpParams(node_budget=2, root_candidates=3)


# --- guided synthetic -----------------------------------------------------------------

def test_expected_verdicts_band():
    assert expected_verdicts(120) == {"good"}
    assert expected_verdicts(-51) == {"bad"}
    assert expected_verdicts(50) == {"good", "bad", "unclear"}
    assert expected_verdicts(-50) == {"good", "bad", "unclear"}


def test_guided_prompt_and_verification(session, walk_boards):
    b = walk_boards[5]
    cand = legal_moves(b)[0]
    prompt, audit = gen_guided_prompt(b, cand, session)
    assert audit["line"][0] == cand.uci() and " ".join(audit["line"]) in prompt
    end = parse_fen(audit["end_fen"])
    v = evaluate(session, end)
    v = v if end.turn is b.turn else v.flipped()
    assert audit["delta"] == v.value - evaluate(session, b).value

    verdict = "good" if audit["delta"] > 50 else "bad" if audit["delta"] < -50 else "unclear"
    ok = verify_guided_output(f"After {cand.uci()} the line holds.\nVerdict: {verdict}", audit)
    assert ok.accepted
    sample = make_guided_sample(audit, "Verdict: " + verdict, ok, seed=1)
    assert cand.uci() in sample.prompt and sample.meta["audit"] == audit

    assert verify_guided_output("no verdict here", audit).reasons == [RejectReason.MISSING_VERDICT]
    bad = verify_guided_output("I like a1c4 Verdict: " + verdict, audit)
    assert RejectReason.ILLEGAL_REFERENCE in bad.reasons
    forced = dict(audit, delta=200)
    assert verify_guided_output("Verdict: bad", forced).reasons == [RejectReason.VERDICT_MISMATCH]
    with pytest.raises(ValueError):
        gen_guided_prompt(b, "a1a8", session)


# --- teacher client ------------------------------------------------------------------------

class _Script:
    def __init__(self, steps):
        self.steps = list(steps)
        self.requests = []


def _serve(script):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = self.rfile.read(int(self.headers["Content-Length"]))
            script.requests.append((json.loads(body), dict(self.headers)))
            status, payload = script.steps.pop(0) if script.steps else (200, {"choices": []})
            if status == "sleep":
                threading.Event().wait(payload)
                status, payload = 200, {"choices": [{"message": {"content": "late"}}]}
            data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *a):
            pass

    srv = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    return srv


def _ok(text):
    return 200, {"choices": [{"message": {"content": text}}]}


@pytest.fixture
def teacher_server():
    servers = []

    def start(steps):
        script = _Script(steps)
        srv = _serve(script)
        servers.append(srv)
        return f"http://127.0.0.1:{srv.server_address[1]}/v1/chat", script

    yield start
    for s in servers:
        s.shutdown()


def test_teacher_success_and_payload(teacher_server, monkeypatch):
    url, script = teacher_server([_ok("hello")])
    monkeypatch.setenv("TEACHER_KEY", "sekret")
    cfg = TeacherConfig(url, "m1", system_prompt="be brief", api_key_env="TEACHER_KEY")
    assert teacher_complete(cfg, "hi") == "hello"
    body, headers = script.requests[0]
    assert body["model"] == "m1" and body["messages"][0] == {"role": "system", "content": "be brief"}
    assert body["messages"][1] == {"role": "user", "content": "hi"}
    assert headers["Authorization"] == "Bearer sekret"


def test_teacher_retries_with_backoff(teacher_server):
    url, script = teacher_server([(503, {"e": 1}), (429, {"e": 2}), _ok("third time")])
    sleeps = []
    cfg = TeacherConfig(url, "m", retries=2, backoff_s=0.25)
    assert teacher_complete(cfg, "x", sleep=sleeps.append) == "third time"
    assert sleeps == [0.25, 0.5] and len(script.requests) == 3


def test_teacher_gives_up(teacher_server):
    url, _ = teacher_server([(500, {})] * 3)
    with pytest.raises(TeacherStatusError) as err:
        teacher_complete(TeacherConfig(url, "m", retries=2), "x", sleep=lambda s: None)
    assert err.value.status == 500
    url, script = teacher_server([(400, {"error": "bad"})])
    with pytest.raises(TeacherStatusError):
        teacher_complete(TeacherConfig(url, "m", retries=5), "x", sleep=lambda s: None)
    assert len(script.requests) == 1


def test_teacher_malformed_and_timeout(teacher_server):
    url, _ = teacher_server([(200, b"not json"), (200, {"choices": [{"message": {}}]})])
    cfg = TeacherConfig(url, "m", retries=3)
    with pytest.raises(TeacherMalformedResponse):
        teacher_complete(cfg, "x", sleep=lambda s: None)
    with pytest.raises(TeacherMalformedResponse):
        teacher_complete(cfg, "x", sleep=lambda s: None)
    url, _ = teacher_server([("sleep", 1.0)])
    with pytest.raises(TeacherTimeout):
        teacher_complete(TeacherConfig(url, "m", timeout_ms=100, retries=0), "x")
    with pytest.raises(TeacherConnectionError):
        teacher_complete(TeacherConfig("http://127.0.0.1:9/none", "m", retries=0), "x")


def test_teacher_custom_response_path(teacher_server):
    url, _ = teacher_server([(200, {"output": [{"text": "deep"}]})])
    assert teacher_complete(TeacherConfig(url, "m", response_path="output.0.text"), "x") == "deep"


# --- rejection sampling --------------------------------------------------------------------

def test_rejection_filter_decisions(session, walk_boards):
    b = walk_boards[0]
    ranked = rank_moves(session, b)
    task = make_predict_move_task(b, "t")
    best, worst = ranked[0].move.uci(), ranked[-1].move.uci()
    assert rejection_filter(task, f"Final Answer: {best}", session=session).accepted
    assert rejection_filter(task, f"Final Answer: {worst}", session=session).reason == "below_threshold"
    assert rejection_filter(task, "Final Answer: a1a1q", session=session).reason == "parse_failure"
    assert rejection_filter(task, "no idea", session=session).reason == "parse_failure"
    illegal = next(f"{a}{c}" for a in ("a1", "h8") for c in ("d4", "e5") if
                   parse_uci_move(f"{a}{c}") not in legal_moves(b))
    assert rejection_filter(task, f"Final Answer: {illegal}", session=session).reason == "illegal"

    lm = make_legal_moves_task(b, random.Random(0))
    key = sorted(m.uci() for m in lm.answer_key)
    text = "Final Answer: " + (", ".join(key) if key else "none")
    assert rejection_filter(lm, text).accepted
    if len(key) >= 2:
        assert rejection_filter(lm, "Final Answer: " + key[0], Thresholds(legal_moves_iou=0.9)).reason == \
            "below_threshold"


def test_rejection_choice_and_sample(session, walk_boards):
    for i, b in enumerate(walk_boards):
        try:
            task = make_choice_task(b, session, "best_move", random.Random(i), 50)
        except ValueError:
            continue
        wrong = next(c for c in task.candidates if c != task.answer_key)
        assert rejection_filter(task, f"Final Answer: {wrong.uci()}").reason == "incorrect"
        d = rejection_filter(task, f"Final Answer: {task.answer_key.uci()}")
        s = make_rejection_sample(task, "prompt", f"Final Answer: {task.answer_key.uci()}", d, seed=i)
        assert s.meta["piece"] == b.piece_at(task.answer_key.from_square).kind.label
        break
    else:
        pytest.fail("no board could host a best_move task")


def test_rebalance_accepted():
    rng = random.Random(0)
    batch = []
    boards = [b for b in random_walk_positions(300, seed=11, min_ply=2, max_ply=100) if b.legal_moves()]
    for i, b in enumerate(boards):
        m = rng.choice(legal_moves(b))
        piece = b.piece_at(m.from_square).kind.label
        batch.append(Sample("p", "r", "rejection_sampled", b.fen(), {"seed": i, "piece": piece}))
    buckets = Counter(fullmove_bucket(s.fen) for s in batch)
    assert len(buckets) >= 3
    res = rebalance_accepted(batch, {"piece": {"pawn": 1, "knight": 1, "king": 1}}, seed=1)
    assert len(set(res.after["piece"].values())) == 1
    assert res.before["piece"]["pawn"] >= res.after["piece"]["pawn"]
    with pytest.raises(ValueError):
        rebalance_accepted(batch, {"colour": {"w": 1}})
