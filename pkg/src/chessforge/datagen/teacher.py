"""HTTP client for a chat-completion style teacher model."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from typing import Optional

import requests

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TeacherConfig:
    endpoint: str
    model: str
    temperature: float = 0.7
    max_tokens: int = 1024
    timeout_ms: int = 60000
    retries: int = 2
    backoff_s: float = 0.5
    response_path: str = "choices.0.message.content"
    system_prompt: Optional[str] = None
    api_key_env: Optional[str] = None

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


class TeacherError(RuntimeError):
    retryable = False


class TeacherTimeout(TeacherError):
    retryable = True


class TeacherConnectionError(TeacherError):
    retryable = True


class TeacherStatusError(TeacherError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"teacher returned HTTP {status}: {body[:200]}")
        self.status = status
        self.retryable = status == 429 or status >= 500


class TeacherMalformedResponse(TeacherError):
    pass


def extract_path(body, path: str):
    cur = body
    for part in path.split("."):
        if isinstance(cur, list):
            try:
                cur = cur[int(part)]
            except (ValueError, IndexError) as exc:
                raise TeacherMalformedResponse(f"no element {part!r} in response") from exc
        elif isinstance(cur, dict):
            if part not in cur:
                raise TeacherMalformedResponse(f"no field {part!r} in response")
            cur = cur[part]
        else:
            raise TeacherMalformedResponse(f"cannot descend into {type(cur).__name__} at {part!r}")
    if not isinstance(cur, str):
        raise TeacherMalformedResponse("generated text is not a string")
    return cur


def build_request(config: TeacherConfig, prompt: str) -> dict:
    messages = []
    if config.system_prompt:
        messages.append({"role": "system", "content": config.system_prompt})
    messages.append({"role": "user", "content": prompt})
    return {"model": config.model, "messages": messages, "temperature": config.temperature,
            "max_tokens": config.max_tokens}


def _once(config: TeacherConfig, payload: dict, http) -> str:
    headers = {"Content-Type": "application/json"}
    if config.api_key_env and os.environ.get(config.api_key_env):
        headers["Authorization"] = f"Bearer {os.environ[config.api_key_env]}"
    try:
        resp = http.post(config.endpoint, json=payload, headers=headers, timeout=config.timeout_ms / 1000.0)
    except requests.Timeout as exc:
        raise TeacherTimeout(f"teacher timed out after {config.timeout_ms} ms") from exc
    except requests.ConnectionError as exc:
        raise TeacherConnectionError(f"cannot reach teacher: {exc}") from exc
    if not 200 <= resp.status_code < 300:
        raise TeacherStatusError(resp.status_code, resp.text)
    try:
        body = resp.json()
    except ValueError as exc:
        raise TeacherMalformedResponse("response body is not JSON") from exc
    return extract_path(body, config.response_path)


def teacher_complete(config: TeacherConfig, prompt: str, http=None, sleep=time.sleep) -> str:
    """Generated text for ``prompt``; retries retryable failures with exponential backoff."""
    http = http or requests
    payload = build_request(config, prompt)
    attempt = 0
    while True:
        try:
            return _once(config, payload, http)
        except TeacherError as exc:
            if not exc.retryable or attempt >= config.retries:
                raise
            delay = config.backoff_s * (2 ** attempt)
            log.warning("teacher call failed (%s); retry %d in %.2fs", exc, attempt + 1, delay)
            sleep(delay)
            attempt += 1
