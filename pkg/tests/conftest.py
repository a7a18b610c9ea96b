import json
from pathlib import Path

import pytest

from chessforge.engine import EngineConfig, TranscriptCache, mini_engine_command, start_session
from chessforge.positions import random_walk_positions

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def mini_config(depth: int = 2, **kw) -> EngineConfig:
    return EngineConfig(tuple(mini_engine_command()), depth=depth, **kw)


@pytest.fixture(scope="session")
def engine_cache():
    return TranscriptCache()


@pytest.fixture(scope="session")
def session(engine_cache):
    """One mini engine at depth 2 shared by the whole run; replies are cached in memory."""
    sess = start_session(mini_config(), engine_cache)
    yield sess
    sess.close()


@pytest.fixture(scope="session")
def walk_boards():
    """Nonterminal middlegame-ish boards from seeded random play."""
    boards = [b for b in random_walk_positions(120, seed=7, min_ply=6, max_ply=50) if b.legal_moves()]
    return boards[:100]


def load_json(name):
    return json.loads((FIXTURES / name).read_text())


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
