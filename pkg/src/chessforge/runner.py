"""Batch drivers behind the CLI: dataset generation and eval-task construction."""

from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

from . import __version__, prompts
from .config import RunConfig, side_color
from .core import Board, legal_moves
from .datagen import (
    PromptBank,
    Sample,
    balance_fba,
    gen_best_line,
    gen_best_move,
    gen_fba,
    gen_guided_prompt,
    gen_vabp,
    make_guided_sample,
    make_rejection_sample,
    rebalance_accepted,
    rejection_filter,
    teacher_complete,
    verify_guided_output,
)
from .datagen.fba import Unsatisfiable
from .datagen.samples import atomic_write_text
from .engine import EngineSession, SessionPool, TranscriptCache, replay_session, start_session
from .evals import (
    EvalTask,
    TaskError,
    TaskKind,
    make_choice_task,
    make_legal_moves_task,
    make_ood_mate_task,
    make_predict_move_task,
)
from .positions import Diagnostic, PositionFilter, load_fens, load_pgn, sample_positions

log = logging.getLogger(__name__)

FAMILIES = ("best_move", "best_line", "fba", "vabp", "guided_synthetic", "rejection_sampled")
ENGINE_FREE = {"fba"}
ALL_POSITIONS = 10 ** 9


class RunError(RuntimeError):
    pass


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_positions(path, config: RunConfig, count: Optional[int] = None,
                   diagnostics: Optional[List[Diagnostic]] = None) -> List[Board]:
    """Boards from a FEN list or PGN file, filtered and reservoir-sampled with the run seed.

    ``positions.min_ply`` defaults to 16 for PGN games and 0 for FEN lists.
    """
    path = Path(path)
    is_pgn = path.suffix.lower() == ".pgn"
    p = config.positions
    min_ply = p.get("min_ply")
    flt = PositionFilter(
        min_ply=(16 if is_pgn else 0) if min_ply is None else int(min_ply),
        max_ply=p.get("max_ply"),
        side_to_move=side_color(p.get("side_to_move")),
        require_nonterminal=bool(p.get("require_nonterminal", True)),
        dedupe_by_fen=bool(p.get("dedupe_by_fen", True)),
        seed=config.seed,
    )
    stream = load_pgn(path, diagnostics) if is_pgn else load_fens(path, diagnostics=diagnostics)
    return sample_positions(stream, flt, ALL_POSITIONS if count is None else count)


class EngineHandle:
    """Session pool plus its transcript cache for one run."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.cache = TranscriptCache()
        if config.cache_path is not None and config.cache_path.exists():
            self.cache.load(config.cache_path)

        def factory() -> EngineSession:
            if config.replay_only:
                return replay_session(config.engine, self.cache)
            return start_session(config.engine, self.cache)

        self.pool = SessionPool(factory, config.pool_size,
                                checkout_timeout=config.service.get("checkout_timeout_s"))

    @property
    def engine_id(self) -> Optional[str]:
        return self.cache.engine_id

    def close(self, save: bool = True) -> None:
        self.pool.close()
        if save and self.config.cache_path is not None and not self.config.replay_only:
            self.cache.save(self.config.cache_path)


@dataclass
class Outcome:
    samples: List[Sample] = field(default_factory=list)
    skipped: Optional[str] = None
    rejected: Optional[dict] = None


def _sample_one(family: str, index: int, board: Board, config: RunConfig, session: Optional[EngineSession],
                bank: Optional[PromptBank], teacher_fn: Callable[[str], str]) -> Outcome:
    seed = config.seed ^ index
    rng = random.Random(seed)
    fmt = config.board_format
    try:
        if family == "best_move":
            return Outcome([gen_best_move(board, session, fmt, seed)])
        if family == "best_line":
            return Outcome([gen_best_line(board, session, rng, fmt, seed)])
        if family == "fba":
            f = config.fba
            return Outcome([gen_fba(board, rng, int(f.get("n_questions", 5)), f.get("weights"), config.valuation,
                                    fmt, seed, float(f.get("hard_negative_weight", 3.0)))])
        if family == "vabp":
            return Outcome([gen_vabp(board, session, config.vabp_params(seed), bank, fmt)])
        if family == "guided_synthetic":
            candidate = rng.choice(legal_moves(board))
            prompt, audit = gen_guided_prompt(board, candidate, session, fmt, int(config.guided.get("plies", 5)))
            text = teacher_fn(prompt)
            check = verify_guided_output(text, audit, int(config.guided.get("band", 50)))
            if not check.accepted:
                return Outcome(rejected={"index": index, "fen": board.fen(), **check.to_dict()})
            return Outcome([make_guided_sample(audit, text, check, seed)])
        if family == "rejection_sampled":
            kinds = config.rejection.get("kinds") or ["predict_move", "best_move", "worst_move", "legal_moves"]
            kind = TaskKind(rng.choice(kinds))
            task = build_task(kind, board, session, rng, config, f"rs-{index:06d}", seed)
            prompt = task.prompt(fmt) + "\n" + prompts.template("answer_contract")
            text = teacher_fn(prompt)
            decision = rejection_filter(task, text, config.thresholds, session)
            if not decision.accepted:
                return Outcome(rejected={"index": index, "fen": board.fen(), "kind": kind.value,
                                         "reason": decision.reason})
            return Outcome([make_rejection_sample(task, prompt, text, decision, seed)])
    except (TaskError, Unsatisfiable, ValueError) as exc:
        return Outcome(skipped=f"{index}: {exc}")
    raise RunError(f"unknown family {family!r}")


def build_task(kind: TaskKind, board: Board, session: Optional[EngineSession], rng: random.Random,
               config: RunConfig, task_id: str, seed: int) -> EvalTask:
    if kind is TaskKind.PREDICT_MOVE:
        return make_predict_move_task(board, task_id, seed)
    if kind in (TaskKind.BEST_MOVE, TaskKind.WORST_MOVE):
        return make_choice_task(board, session, kind, rng, config.quality_threshold_cp, task_id, seed)
    if kind is TaskKind.LEGAL_MOVES:
        return make_legal_moves_task(board, rng, config.evals.get("piece_weights"), task_id, seed)
    return make_ood_mate_task(board, task_id)


def _teacher_fn(config: RunConfig) -> Callable[[str], str]:
    def call(prompt: str) -> str:
        if config.teacher is None:
            raise RunError("this family needs a teacher section in the config")
        return teacher_complete(config.teacher, prompt)
    return call


def _map_boards(fn, boards: List[Board], handle: Optional[EngineHandle], workers: int):
    """Run ``fn(index, board, session)`` over boards; results come back in index order."""
    def task(i):
        if handle is None:
            return fn(i, boards[i], None)
        with handle.pool.session() as sess:
            return fn(i, boards[i], sess)

    if workers <= 1:
        return [task(i) for i in range(len(boards))]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(task, range(len(boards))))


def write_manifest(path, manifest: dict) -> Path:
    return atomic_write_text(path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def run_gen(family: str, config: RunConfig, positions_path, out, count: Optional[int] = None,
            teacher_fn: Optional[Callable[[str], str]] = None) -> dict:
    """Generate one dataset family; writes ``out`` and ``out.manifest.json`` atomically."""
    if family not in FAMILIES:
        raise RunError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if family in ("guided_synthetic", "rejection_sampled") and config.teacher is None and teacher_fn is None:
        raise RunError(f"{family} needs a teacher section in the config")
    diags: List[Diagnostic] = []
    boards = load_positions(positions_path, config, count, diags)
    bank = PromptBank.load(config.vabp.get("bank", "v1")) if family == "vabp" else None
    teacher_fn = teacher_fn or _teacher_fn(config)
    handle = None if family in ENGINE_FREE else EngineHandle(config)
    ok = False
    try:
        outcomes = _map_boards(lambda i, b, s: _sample_one(family, i, b, config, s, bank, teacher_fn),
                               boards, handle, config.workers)
        ok = True
    finally:
        if handle is not None:
            handle.close(save=ok)
    samples = [s for o in outcomes for s in o.samples]
    skipped = [o.skipped for o in outcomes if o.skipped]
    rejected = [o.rejected for o in outcomes if o.rejected]
    balance = None
    if family == "fba" and config.fba.get("balance"):
        res = balance_fba(samples, config.fba["balance"], config.seed)
        samples, balance = res.samples, {"before": res.before, "after": res.after, "diagnostics": res.diagnostics}
    if family == "rejection_sampled" and config.rejection.get("rebalance"):
        res = rebalance_accepted(samples, config.rejection["rebalance"], config.seed)
        samples, balance = res.samples, {"before": res.before, "after": res.after, "diagnostics": res.diagnostics}
    atomic_write_text(out, "".join(s.to_json() + "\n" for s in samples))
    manifest = {
        "family": family,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "chessforge_version": __version__,
        "prompt_version": prompts.PROMPT_VERSION,
        "board_format": config.board_format.value,
        "engine": None if handle is None else {"id": handle.engine_id, **config.engine.to_dict()},
        "positions": {"path": str(positions_path), "sha256": _sha256_file(positions_path),
                      "selected": len(boards), "diagnostics": [str(d) for d in diags]},
        "counts": {"written": len(samples), "skipped": len(skipped), "rejected": len(rejected)},
        "skipped": skipped,
        "rejected": rejected,
        "balance": balance,
    }
    if handle is not None:
        manifest["engine"]["executable"] = config.raw.get("engine", {}).get("executable", "mini")
    write_manifest(manifest_path(out), manifest)
    return manifest


def run_make_evals(kind: str, config: RunConfig, positions_path, out, count: Optional[int] = None) -> dict:
    """Eval tasks for ``kind``; boards that cannot host the task are skipped (and counted)."""
    kind = TaskKind(kind)
    diags: List[Diagnostic] = []
    boards = load_positions(positions_path, config, None, diags)
    target = len(boards) if count is None else count
    needs_engine = kind in (TaskKind.BEST_MOVE, TaskKind.WORST_MOVE)
    handle = EngineHandle(config) if needs_engine else None
    tasks: List[EvalTask] = []
    skipped: List[str] = []
    ok = False
    try:
        ctx = handle.pool.session() if handle is not None else contextlib.nullcontext()
        with ctx as sess:
            for i, board in enumerate(boards):
                if len(tasks) >= target:
                    break
                seed = config.seed ^ i
                try:
                    tasks.append(build_task(kind, board, sess, random.Random(seed), config,
                                            f"{kind.value}-{i:06d}", seed))
                except TaskError as exc:
                    skipped.append(f"{i}: {exc}")
        ok = True
    finally:
        if handle is not None:
            handle.close(save=ok)
    atomic_write_text(out, "".join(t.to_json() + "\n" for t in tasks))
    manifest = {
        "kind": kind.value,
        "config_hash": config.config_hash,
        "seed": config.seed,
        "chessforge_version": __version__,
        "engine": None if handle is None else {"id": handle.engine_id, "go": config.engine.rank_go},
        "positions": {"path": str(positions_path), "selected": len(boards), "diagnostics": [str(d) for d in diags]},
        "counts": {"written": len(tasks), "skipped": len(skipped)},
        "skipped": skipped,
    }
    write_manifest(manifest_path(out), manifest)
    if len(tasks) < target:
        log.warning("only %d of %d requested %s tasks could be built", len(tasks), target, kind.value)
    return manifest
