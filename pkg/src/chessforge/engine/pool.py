"""Bounded pool of engine sessions; each checkout is exclusive."""

from __future__ import annotations

import contextlib
import logging
import queue
import threading
from typing import Callable, Iterator, List, Optional

from .session import EngineSession
from .uci import EngineDiedError, EngineTimeoutError

log = logging.getLogger(__name__)


class PoolExhausted(RuntimeError):
    """No session became free within the checkout timeout."""


class SessionPool:
    def __init__(self, factory: Callable[[], EngineSession], size: int = 1,
                 checkout_timeout: Optional[float] = None):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self._factory = factory
        self.size = size
        self.checkout_timeout = checkout_timeout
        self._idle: "queue.LifoQueue[Optional[EngineSession]]" = queue.LifoQueue()
        for _ in range(size):
            self._idle.put(None)  # created lazily
        self._lock = threading.Lock()
        self._all: List[EngineSession] = []
        self.in_use = 0
        self.max_in_use = 0
        self.restarts = 0

    @contextlib.contextmanager
    def session(self, timeout: Optional[float] = ...) -> Iterator[EngineSession]:
        wait = self.checkout_timeout if timeout is ... else timeout
        try:
            sess = self._idle.get(timeout=wait) if wait is None or wait > 0 else self._idle.get_nowait()
        except queue.Empty:
            raise PoolExhausted(f"all {self.size} engine sessions busy") from None
        with self._lock:
            self.in_use += 1
            self.max_in_use = max(self.max_in_use, self.in_use)
        broken = False
        try:
            if sess is None or not sess.alive:
                if sess is not None:
                    self._forget(sess)
                    self.restarts += 1
                sess = self._factory()
                with self._lock:
                    self._all.append(sess)
            yield sess
        except (EngineDiedError, EngineTimeoutError):
            broken = True
            raise
        finally:
            if broken and sess is not None:
                log.warning("engine session failed; it will be restarted on next checkout")
                self._forget(sess)
                try:
                    sess.close()
                except Exception:  # noqa: BLE001
                    pass
                sess = None
                self.restarts += 1
            with self._lock:
                self.in_use -= 1
            self._idle.put(sess)

    def _forget(self, sess):
        with self._lock:
            if sess in self._all:
                self._all.remove(sess)

    def status(self) -> dict:
        with self._lock:
            return {
                "size": self.size,
                "in_use": self.in_use,
                "max_in_use": self.max_in_use,
                "started": len(self._all),
                "restarts": self.restarts,
            }

    def close(self) -> None:
        with self._lock:
            sessions, self._all = list(self._all), []
        for s in sessions:
            s.close()
