"""Versioned prompt templates shipped under ``assets/``."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

PROMPT_VERSION = "v1"


@lru_cache(maxsize=None)
def load_asset(name: str) -> dict:
    text = resources.files("chessforge").joinpath("assets", name).read_text(encoding="utf-8")
    return json.loads(text)


def template(name: str, version: str = PROMPT_VERSION) -> str:
    return load_asset(f"prompts_{version}.json")[name]


def render(name: str, version: str = PROMPT_VERSION, **fields) -> str:
    return template(name, version).format(**fields)
