"""UCI wire protocol: subprocess transport and ``info`` line parsing."""

from __future__ import annotations

import logging
import queue
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

log = logging.getLogger(__name__)

_INT_FIELDS = {
    "depth", "seldepth", "time", "nodes", "multipv", "nps", "hashfull", "tbhits",
    "currmovenumber", "cpuload", "sbhits",
}
_KEYWORDS = _INT_FIELDS | {"score", "pv", "string", "currmove", "refutation", "currline", "wdl"}


class EngineError(RuntimeError):
    pass


class EngineSpawnError(EngineError):
    pass


class EngineTimeoutError(EngineError):
    pass


class EngineDiedError(EngineError):
    pass


class EngineOptionError(EngineError):
    pass


class EngineProtocolError(EngineError):
    pass


@dataclass
class InfoLine:
    depth: Optional[int] = None
    multipv: int = 1
    score_kind: Optional[str] = None
    score_value: Optional[int] = None
    bound: Optional[str] = None
    pv: List[str] = field(default_factory=list)
    nodes: Optional[int] = None
    string: Optional[str] = None


def parse_info(line: str) -> Optional[InfoLine]:
    """Parse an ``info`` line; unknown tokens are skipped. Returns None for non-info lines."""
    tokens = line.split()
    if not tokens or tokens[0] != "info":
        return None
    info = InfoLine()
    i = 1
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok in _INT_FIELDS and i + 1 < n:
            try:
                val = int(tokens[i + 1])
            except ValueError:
                i += 1
                continue
            if tok == "depth":
                info.depth = val
            elif tok == "multipv":
                info.multipv = val
            elif tok == "nodes":
                info.nodes = val
            i += 2
        elif tok == "score" and i + 2 < n:
            kind = tokens[i + 1]
            try:
                info.score_value = int(tokens[i + 2])
                info.score_kind = kind if kind in ("cp", "mate") else None
            except ValueError:
                pass
            i += 3
            while i < n and tokens[i] in ("lowerbound", "upperbound"):
                info.bound = tokens[i]
                i += 1
        elif tok == "wdl":
            i += 4
        elif tok == "pv":
            i += 1
            while i < n and tokens[i] not in _KEYWORDS:
                info.pv.append(tokens[i])
                i += 1
        elif tok == "string":
            info.string = " ".join(tokens[i + 1:])
            break
        elif tok in ("currmove",):
            i += 2
        elif tok in ("refutation", "currline"):
            i += 1
            while i < n and tokens[i] not in _KEYWORDS:
                i += 1
        else:
            i += 1
    return info


@dataclass
class SearchReply:
    """Final per-multipv results of one ``go`` command."""

    lines: dict  # multipv index -> InfoLine
    bestmove: Optional[str]


def summarize(reply_lines: Sequence[str]) -> SearchReply:
    """Keep, per multipv index, the last exact-score info line that carries a pv."""
    best: dict = {}
    bestmove = None
    for raw in reply_lines:
        if raw.startswith("bestmove"):
            parts = raw.split()
            bestmove = parts[1] if len(parts) > 1 else None
            continue
        info = parse_info(raw)
        if info is None or info.score_kind is None or info.bound is not None:
            continue
        if not info.pv and info.score_kind != "mate":
            continue
        prev = best.get(info.multipv)
        if prev is None or (info.depth or 0) >= (prev.depth or 0):
            best[info.multipv] = info
    return SearchReply(best, bestmove)


class UciProcess:
    """A running engine subprocess with a background line reader."""

    def __init__(self, args: Sequence[str], startup_timeout: float = 10.0):
        try:
            self._proc = subprocess.Popen(
                list(args),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise EngineSpawnError(f"cannot start engine {args!r}: {exc}") from exc
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self.startup_timeout = startup_timeout
        self.id_name: Optional[str] = None
        self.options: dict = {}

    def _read_loop(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line.rstrip("\r\n"))
        self._lines.put(None)

    @property
    def alive(self) -> bool:
        return self._proc.poll() is None

    def send(self, command: str) -> None:
        log.debug(">> %s", command)
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write(command + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise EngineDiedError(f"engine stdin closed: {exc}") from exc

    def read_until(self, done: Callable[[str], bool], timeout: Optional[float]) -> List[str]:
        out = []
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            remaining = None if deadline is None else deadline - time.monotonic()
            if remaining is not None and remaining <= 0:
                raise EngineTimeoutError("engine did not answer in time")
            try:
                line = self._lines.get(timeout=remaining)
            except queue.Empty:
                raise EngineTimeoutError("engine did not answer in time") from None
            if line is None:
                raise EngineDiedError("engine process exited")
            log.debug("<< %s", line)
            out.append(line)
            if done(line):
                return out

    def handshake(self) -> None:
        self.send("uci")
        for line in self.read_until(lambda s: s.strip() == "uciok", self.startup_timeout):
            parts = line.split()
            if line.startswith("id name "):
                self.id_name = line[len("id name "):].strip()
            elif parts[:2] == ["option", "name"] and "type" in parts:
                name = " ".join(parts[2:parts.index("type")])
                self.options[name.lower()] = line
        self.ready()

    def ready(self, timeout: Optional[float] = None) -> None:
        self.send("isready")
        self.read_until(lambda s: s.strip() == "readyok", timeout or self.startup_timeout)

    def set_option(self, name: str, value) -> None:
        if name.lower() not in self.options:
            raise EngineOptionError(f"engine does not support option {name!r}")
        self.send(f"setoption name {name} value {value}")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self.send("quit")
            except EngineError:
                pass
            try:
                self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
        except OSError:
            pass
        self._reader.join(timeout=1)

    def kill(self) -> None:
        self._proc.kill()
        self._proc.wait()
