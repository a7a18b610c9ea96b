"""Engine transcript cache: (position, search command) -> raw engine reply lines.

The cache makes generation replayable without an engine binary. File format
is line-delimited JSON: an optional header ``{"engine": "<id name>"}`` then
one ``{"key": ..., "lines": [...]}`` record per query, sorted by key.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Dict, List, Optional, Sequence


def make_key(fen: str, go: str, multipv: int, searchmoves: Optional[Sequence[str]] = None) -> str:
    key = f"{fen}|{go}|multipv {multipv}"
    if searchmoves:
        key += "|searchmoves " + " ".join(searchmoves)
    return key


class TranscriptCache:
    def __init__(self, path: Optional[os.PathLike] = None, engine_id: Optional[str] = None):
        self.path = Path(path) if path is not None else None
        self.engine_id = engine_id
        self._entries: Dict[str, List[str]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            self.load(self.path)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, key: str) -> Optional[List[str]]:
        with self._lock:
            lines = self._entries.get(key)
            if lines is None:
                self.misses += 1
                return None
            self.hits += 1
            return list(lines)

    def put(self, key: str, lines: Sequence[str]) -> None:
        with self._lock:
            self._entries[key] = list(lines)

    def load(self, path: os.PathLike) -> None:
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                rec = json.loads(raw)
                if "engine" in rec and "key" not in rec:
                    self.engine_id = self.engine_id or rec["engine"]
                    continue
                self._entries[rec["key"]] = list(rec["lines"])

    def save(self, path: Optional[os.PathLike] = None) -> Path:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("no cache path given")
        target.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            items = sorted(self._entries.items())
            engine_id = self.engine_id
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                if engine_id:
                    fh.write(json.dumps({"engine": engine_id}) + "\n")
                for key, lines in items:
                    fh.write(json.dumps({"key": key, "lines": lines}, ensure_ascii=False) + "\n")
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target
