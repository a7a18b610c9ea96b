"""Command-line interface: ``chessforge <command> ...``."""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from typing import List, Optional

from .analysis import (
    DEFAULT_THRESHOLD,
    ExtractedTrace,
    aggregate_accuracy,
    extract_trace_llm,
    extract_trace_pattern,
    format_table,
    iter_prob_log,
    move_quality_histogram,
    referenced_accuracy,
    triviality_grouped,
)
from .config import ConfigError, load_config
from .core import parse_fen, perft
from .datagen.samples import atomic_write_text, iter_jsonl
from .engine import EngineError
from .evals import EvalTask, TaskKind, score_task, summarize_reports
from .runner import FAMILIES, EngineHandle, RunError, run_gen, run_make_evals

log = logging.getLogger("chessforge")


class CliError(RuntimeError):
    pass


def _jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)


def cmd_gen(args) -> int:
    config = load_config(args.config)
    m = run_gen(args.family, config, args.positions, args.out, args.count)
    print(f"wrote {m['counts']['written']} {args.family} samples to {args.out} "
          f"(skipped {m['counts']['skipped']}, rejected {m['counts']['rejected']})")
    return 0


def cmd_make_evals(args) -> int:
    config = load_config(args.config)
    m = run_make_evals(args.kind, config, args.positions, args.out, args.count)
    print(f"wrote {m['counts']['written']} {args.kind} tasks to {args.out} (skipped {m['counts']['skipped']})")
    return 0


def _index(records, what: str, key: str = "id") -> dict:
    out = {}
    for r in records:
        if key not in r:
            raise CliError(f"{what} record without {key!r}")
        k = str(r[key])
        if k in out:
            raise CliError(f"duplicate id {k!r} in {what}")
        out[k] = r
    return out


def load_scoring_inputs(kind: TaskKind, tasks_path, responses_path):
    tasks = _index((r for r in iter_jsonl(tasks_path) if r.get("kind") == kind.value), "tasks")
    responses = _index(iter_jsonl(responses_path), "responses")
    unknown = sorted(set(responses) - set(tasks))
    if unknown:
        raise CliError(f"responses refer to unknown task ids: {unknown[:5]}")
    missing = sorted(set(tasks) - set(responses))
    if missing:
        log.warning("%d tasks have no response and are not scored", len(missing))
    pairs = []
    for tid in sorted(responses):
        r = responses[tid]
        text = r.get("response_text", r.get("response"))
        if not isinstance(text, str):
            raise CliError(f"response {tid!r} has no response_text")
        pairs.append((EvalTask.from_record(tasks[tid]), text))
    return pairs


def cmd_score(args) -> int:
    kind = TaskKind(args.kind)
    pairs = load_scoring_inputs(kind, args.tasks, args.responses)
    if not pairs:
        log.warning("no responses to score")
    mode = "rank"
    reports = []
    with contextlib.ExitStack() as stack:
        sess = None
        if kind is TaskKind.PREDICT_MOVE and pairs:
            if not args.config:
                raise CliError("predict_move scoring needs --config for the engine")
            config = load_config(args.config)
            mode = args.reward_mode or config.reward_mode
            handle = EngineHandle(config)
            stack.callback(handle.close)
            sess = stack.enter_context(handle.pool.session())
        for task, text in pairs:
            reports.append(score_task(task, text, sess, mode))
    summary = summarize_reports(reports)
    atomic_write_text(args.out, _jsonl([r.to_dict() for r in reports] + [{"summary": summary}]))
    rows = [{"kind": k, **v} for k, v in summary.items()]
    cols = ["kind", "n", "pct_legal", "avg_rank", "pct_trivial", "accuracy", "mean_iou", "mean_reward"]
    sys.stdout.write(format_table(rows, cols) if rows else "no reports\n")
    return 0


def _load_trace(rec: dict, teacher) -> ExtractedTrace:
    if "moves" in rec or "pieces" in rec:
        return ExtractedTrace(list(rec.get("moves") or []), [tuple(p) for p in rec.get("pieces") or []])
    text = rec.get("reasoning_text", "")
    if teacher is not None:
        return extract_trace_llm(teacher, text)
    return extract_trace_pattern(text)


def cmd_analyze(args) -> int:
    if args.what == "traces":
        teacher = None
        if args.config and not args.no_teacher:
            teacher = load_config(args.config).teacher
        out, results = [], []
        for i, rec in enumerate(iter_jsonl(args.input)):
            board = parse_fen(rec["fen"])
            trace = _load_trace(rec, teacher)
            acc = referenced_accuracy(board, trace, strict_color=args.strict_color)
            results.append(acc)
            out.append({"index": i, "id": rec.get("id"), "fallback": trace.fallback, "trace": trace.to_dict(),
                        **acc.to_dict()})
        agg = aggregate_accuracy(results)
        atomic_write_text(args.out, _jsonl(out + [{"summary": agg}]))
        cols = ["traces", "move_acc", "piece_acc", "total_acc", "hallucination_rate"]
        sys.stdout.write(format_table([agg], cols))
        return 0
    if args.what == "triviality":
        rows = triviality_grouped(iter_prob_log(args.input), args.group_by, args.threshold)
        atomic_write_text(args.out, _jsonl(rows))
        sys.stdout.write(format_table(rows, ["group", "tokens", "trivial_fraction", "token_share"]))
        return 0
    scores = []
    for rec in iter_jsonl(args.input):
        v = rec.get("normalized_rank", rec.get("score"))
        if v is not None:
            scores.append(float(v))
    hist = move_quality_histogram(scores, args.bins)
    atomic_write_text(args.out, json.dumps(hist, sort_keys=True) + "\n")
    rows = [{"bin": f"[{lo:.2f}, {hi:.2f}{']' if i == args.bins - 1 else ')'}", "count": c, "freq": f}
            for i, (lo, hi, c, f) in enumerate(zip(hist["edges"], hist["edges"][1:], hist["counts"], hist["freqs"]))]
    sys.stdout.write(format_table(rows, ["bin", "count", "freq"]))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(load_config(args.config), args.host, args.port)
    return 0


def cmd_perft(args) -> int:
    from .core import apply_move, legal_moves

    board = parse_fen(args.fen)
    if args.divide:
        total = 0
        for m in legal_moves(board):
            n = perft(apply_move(board, m), args.depth - 1) if args.depth > 0 else 1
            total += n
            print(f"{m.uci()}: {n}")
        print(f"\nNodes searched: {total}")
    else:
        print(perft(board, args.depth))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chessforge", description="Chess reasoning data, eval tasks and rewards.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    g = sub.add_parser("gen", help="generate a dataset family")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--config", required=True)
    g.add_argument("--positions", required=True, help="FEN list or .pgn file")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("make-evals", help="build evaluation tasks")
    e.add_argument("kind", choices=[k.value for k in TaskKind])
    e.add_argument("--config", required=True)
    e.add_argument("--positions", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--count", type=int)
    e.set_defaults(func=cmd_make_evals)

    s = sub.add_parser("score", help="score model responses against tasks")
    s.add_argument("kind", choices=[k.value for k in TaskKind])
    s.add_argument("--tasks", required=True)
    s.add_argument("--responses", required=True, help="JSONL of {id, response_text}")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="needed for predict_move (engine)")
    s.add_argument("--reward-mode", choices=["rank", "centipawn_delta"])
    s.set_defaults(func=cmd_score)

    a = sub.add_parser("analyze", help="trace grounding and triviality reports")
    asub = a.add_subparsers(dest="what", required=True, metavar="analysis")
    t = asub.add_parser("traces", help="referenced-move/piece accuracy")
    t.add_argument("--input", required=True, help="JSONL of {fen, reasoning_text} or {fen, moves, pieces}")
    t.add_argument("--out", required=True)
    t.add_argument("--config", help="config with a teacher section for model-based extraction")
    t.add_argument("--no-teacher", action="store_true", help="use the pattern extractor")
    t.add_argument("--strict-color", action="store_true")
    tv = asub.add_parser("triviality", help="share of tokens above a probability threshold")
    tv.add_argument("--input", required=True)
    tv.add_argument("--out", required=True)
    tv.add_argument("--group-by", default="dataset", choices=["dataset", "question_type", "position_tag"])
    tv.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    h = asub.add_parser("histogram", help="move-quality histogram from score reports")
    h.add_argument("--input", required=True)
    h.add_argument("--out", required=True)
    h.add_argument("--bins", type=int, default=10)
    for x in (t, tv, h):
        x.set_defaults(func=cmd_analyze)

    sv = sub.add_parser("serve", help="run the HTTP reward service")
    sv.add_argument("--config", required=True)
    sv.add_argument("--host")
    sv.add_argument("--port", type=int)
    sv.set_defaults(func=cmd_serve)

    pf = sub.add_parser("perft", help="count leaf nodes of the legal move tree")
    pf.add_argument("--fen", default="rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1")
    pf.add_argument("--depth", type=int, default=3)
    pf.add_argument("--divide", action="store_true")
    pf.set_defaults(func=cmd_perft)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CliError, RunError, EngineError, OSError, ValueError) as exc:
        print(f"chessforge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
