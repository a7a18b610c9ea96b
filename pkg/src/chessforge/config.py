"""Run configuration: a JSON or YAML file validated into :class:`RunConfig`.

Schema (every section optional except ``seed`` and ``engine``)::

    seed: 1234                      # base seed; sample i uses seed ^ i
    board_format: visual_ascii      # fen | spaced_fen | visual_ascii | uniform_visual
    workers: 1                      # generation threads
    pool_size: 1                    # engine sessions
    engine:
      executable: mini              # "mini" = bundled engine, else a command line or argv list
      depth: 12                     # or movetime_ms (exactly one)
      rank_depth: 12
      multipv_max: 256
      hash_mb: 16
      threads: 1
      cache: transcripts.jsonl      # engine transcript cache (optional)
      replay_only: false            # answer only from the cache
    positions: {min_ply: null, max_ply: null, side_to_move: null, dedupe_by_fen: true}
    best_line: {}
    fba: {n_questions: 5, weights: {...}, valuation: {...}, hard_negative_weight: 3.0, balance: {...}}
    vabp: {temperature: 100, root_candidates: 3, child_candidates: 2, depth_limit: 4,
           node_budget: 12, writeoff_margin: 150, bank: v1}
    guided: {plies: 5, band: 50}
    rejection: {kinds: [predict_move, best_move, worst_move, legal_moves],
                thresholds: {predict_move_rank: 0.8, legal_moves_iou: 0.9}, rebalance: {...}}
    evals: {quality_threshold_cp: 100, reward_mode: rank, piece_weights: {}}
    teacher: {endpoint: ..., model: ..., ...}
    service: {host: 127.0.0.1, port: 8000, checkout_timeout_s: 5, max_concurrent: 64,
              request_timeout_s: 30}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .board_format import BoardFormat
from .core import BLACK, WHITE, ValuationTable
from .datagen.fba import KINDS as FBA_KINDS
from .datagen.rejection import Thresholds
from .datagen.teacher import TeacherConfig
from .datagen.vabp import VabpParams
from .engine import EngineConfig, mini_engine_command
from .evals.tasks import DEFAULT_QUALITY_THRESHOLD_CP, TaskKind


class ConfigError(ValueError):
    pass


SECTIONS = {"seed", "board_format", "workers", "pool_size", "engine", "positions", "best_line", "best_move",
            "fba", "vabp", "guided", "rejection", "evals", "teacher", "service"}
ENGINE_EXTRA = {"cache", "replay_only"}


@dataclass
class RunConfig:
    seed: int
    engine: EngineConfig
    raw: Dict[str, Any]
    board_format: BoardFormat = BoardFormat.VISUAL_ASCII
    workers: int = 1
    pool_size: int = 1
    cache_path: Optional[Path] = None
    replay_only: bool = False
    positions: Dict[str, Any] = field(default_factory=dict)
    fba: Dict[str, Any] = field(default_factory=dict)
    vabp: Dict[str, Any] = field(default_factory=dict)
    guided: Dict[str, Any] = field(default_factory=dict)
    rejection: Dict[str, Any] = field(default_factory=dict)
    evals: Dict[str, Any] = field(default_factory=dict)
    teacher: Optional[TeacherConfig] = None
    service: Dict[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def vabp_params(self, seed: int) -> VabpParams:
        kw = {k: v for k, v in self.vabp.items() if k != "bank"}
        return VabpParams(**kw, seed=seed)

    @property
    def valuation(self) -> ValuationTable:
        vals = self.fba.get("valuation")
        return ValuationTable(vals) if vals else ValuationTable()

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(**self.rejection.get("thresholds", {}))

    @property
    def quality_threshold_cp(self) -> int:
        return int(self.evals.get("quality_threshold_cp", DEFAULT_QUALITY_THRESHOLD_CP))

    @property
    def reward_mode(self) -> str:
        return str(self.evals.get("reward_mode", "rank"))


def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _engine(section: dict) -> EngineConfig:
    _need(isinstance(section, dict), "engine must be a mapping")
    kw = {k: v for k, v in section.items() if k not in ENGINE_EXTRA}
    exe = kw.get("executable", "mini")
    kw["executable"] = tuple(mini_engine_command()) if exe == "mini" else exe
    if "depth" not in kw and "movetime_ms" not in kw:
        kw["depth"] = 12
    try:
        return EngineConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"engine: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"engine: {exc}") from exc


def from_dict(raw: Dict[str, Any], base_dir: Path = Path(".")) -> RunConfig:
    _need(isinstance(raw, dict), "config must be a mapping")
    unknown = set(raw) - SECTIONS
    _need(not unknown, f"unknown config sections {sorted(unknown)}")
    _need("seed" in raw, "seed is required")
    _need(isinstance(raw["seed"], int) and not isinstance(raw["seed"], bool) and raw["seed"] >= 0,
          "seed must be a non-negative integer")
    engine = _engine(raw.get("engine", {"executable": "mini"}))
    esec = raw.get("engine", {}) or {}
    try:
        fmt = BoardFormat(raw.get("board_format", BoardFormat.VISUAL_ASCII.value))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    workers = raw.get("workers", 1)
    pool = raw.get("pool_size", 1)
    _need(isinstance(workers, int) and workers >= 1, "workers must be >= 1")
    _need(isinstance(pool, int) and pool >= 1, "pool_size must be >= 1")
    cache = esec.get("cache")
    cache_path = (base_dir / cache) if cache else None
    replay = bool(esec.get("replay_only", False))
    if replay:
        _need(cache_path is not None and cache_path.exists(), "replay_only needs an existing engine.cache file")

    positions = dict(raw.get("positions") or {})
    side = positions.get("side_to_move")
    _need(side in (None, "white", "black"), "positions.side_to_move must be white, black or null")
    fba = dict(raw.get("fba") or {})
    bad = set(fba.get("weights", {})) - set(FBA_KINDS)
    _need(not bad, f"fba.weights has unknown kinds {sorted(bad)}")
    if fba.get("valuation"):
        try:
            ValuationTable(fba["valuation"])
        except ValueError as exc:
            raise ConfigError(f"fba.valuation: {exc}") from exc
    vabp = dict(raw.get("vabp") or {})
    try:
        VabpParams(**{k: v for k, v in vabp.items() if k != "bank"})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"vabp: {exc}") from exc
    rejection = dict(raw.get("rejection") or {})
    for k in rejection.get("kinds", []):
        _need(k in {t.value for t in TaskKind} - {"ood_mate"}, f"rejection.kinds: bad kind {k!r}")
    try:
        Thresholds(**rejection.get("thresholds", {}))
    except TypeError as exc:
        raise ConfigError(f"rejection.thresholds: {exc}") from exc
    evals = dict(raw.get("evals") or {})
    _need(evals.get("reward_mode", "rank") in ("rank", "centipawn_delta"),
          "evals.reward_mode must be rank or centipawn_delta")
    teacher = None
    if raw.get("teacher"):
        try:
            teacher = TeacherConfig(**raw["teacher"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"teacher: {exc}") from exc
    return RunConfig(
        seed=raw["seed"], engine=engine, raw=raw, board_format=fmt, workers=workers, pool_size=pool,
        cache_path=cache_path, replay_only=replay, positions=positions, fba=fba, vabp=vabp,
        guided=dict(raw.get("guided") or {}), rejection=rejection, evals=evals, teacher=teacher,
        service=dict(raw.get("service") or {}), base_dir=base_dir,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return from_dict(raw, path.parent)


def side_color(name: Optional[str]):
    return None if name is None else (WHITE if name == "white" else BLACK)
