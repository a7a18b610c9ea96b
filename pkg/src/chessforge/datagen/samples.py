"""Training-sample records and their JSONL form."""

from __future__ import annotations

import enum
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List

from ..core import parse_fen


class SampleTask(str, enum.Enum):
    BEST_MOVE = "best_move"
    BEST_LINE = "best_line"
    FBA = "fba"
    VABP = "vabp"
    GUIDED_SYNTHETIC = "guided_synthetic"
    REJECTION_SAMPLED = "rejection_sampled"


GENERATED = {SampleTask.BEST_MOVE, SampleTask.BEST_LINE, SampleTask.FBA, SampleTask.VABP}


class SampleError(ValueError):
    pass


@dataclass
class Sample:
    prompt: str
    response: str
    task: SampleTask
    fen: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.task = SampleTask(self.task)
        if not self.prompt or not self.response:
            raise SampleError("prompt and response must be non-empty")
        parse_fen(self.fen)
        if self.task in GENERATED and "seed" not in self.meta:
            raise SampleError(f"{self.task.value} samples need meta.seed")

    def to_record(self) -> dict:
        return {"prompt": self.prompt, "response": self.response, "task": self.task.value,
                "fen": self.fen, "meta": self.meta}

    def to_json(self) -> str:
        # top-level order is fixed by to_record; nested maps are sorted
        rec = self.to_record()
        meta = json.dumps(rec.pop("meta"), sort_keys=True, ensure_ascii=False, separators=(", ", ": "))
        head = json.dumps(rec, ensure_ascii=False)
        return head[:-1] + ', "meta": ' + meta + "}"

    @classmethod
    def from_record(cls, rec: dict) -> "Sample":
        return cls(rec["prompt"], rec["response"], rec["task"], rec["fen"], dict(rec.get("meta") or {}))


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dump_jsonl(records: Iterable, path) -> Path:
    lines = []
    for r in records:
        lines.append(r.to_json() if hasattr(r, "to_json") else json.dumps(r, sort_keys=True, ensure_ascii=False))
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


def iter_jsonl(path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON ({exc.msg})") from exc


def load_samples(path) -> List[Sample]:
    return [Sample.from_record(r) for r in iter_jsonl(path)]
