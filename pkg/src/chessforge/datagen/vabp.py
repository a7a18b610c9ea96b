"""Verbalized alpha-beta pruning (VABP) traces.

A small search tree is sampled with engine scores, pruned and backed up by
minimax, then narrated with phrases from a prompt bank. Narration lines are
indented two spaces per tree level; every move on a line at level ``L`` is
legal after the first ``L`` moves of the current path, and the first move on
the line becomes path element ``L``. :func:`check_narration` replays that
contract.
"""

from __future__ import annotations

import json
import math
import random
import re
import string
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence

from .. import prompts
from ..board_format import BoardFormat, render_prompt_board
from ..core import Board, Move, apply_move, legal_moves, parse_uci_move
from ..engine import EngineSession, rank_moves
from .samples import Sample, SampleTask

SLOTS = ("intro", "propose_move", "state_value", "branch", "prune", "backtrack", "minimax_compare", "conclude")
# fields the narrator supplies to each slot
SLOT_FIELDS = {
    "intro": {"side"}, "propose_move": {"move"}, "state_value": {"score"}, "branch": {"side", "depth"},
    "prune": {"move", "score"}, "backtrack": {"move", "score"},
    "minimax_compare": {"side", "move", "score"}, "conclude": {"side", "move", "score"},
}
INDENT = "  "
UCI_RE = re.compile(r"(?<![A-Za-z0-9])([a-h][1-8][a-h][1-8][qrbn]?)(?![A-Za-z0-9])")


@dataclass(frozen=True)
class VabpParams:
    temperature: float = 100.0  # centipawns
    root_candidates: int = 3
    child_candidates: int = 2
    depth_limit: int = 4
    node_budget: int = 12
    writeoff_margin: int = 150
    seed: int = 0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.root_candidates < 2:
            raise ValueError("root_candidates must be >= 2")
        if self.child_candidates < 1:
            raise ValueError("child_candidates must be >= 1")
        if self.depth_limit < 1:
            raise ValueError("depth_limit must be >= 1")
        if self.node_budget < self.root_candidates:
            raise ValueError("node_budget must be >= root_candidates")
        if self.writeoff_margin <= 0:
            raise ValueError("writeoff_margin must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class PromptBank:
    """Phrase lists per narration slot."""

    def __init__(self, slots: Dict[str, Sequence[str]], version: str = "custom"):
        missing = [s for s in SLOTS if not slots.get(s)]
        if missing:
            raise ValueError(f"prompt bank is missing slots {missing}")
        fmt = string.Formatter()
        for slot in SLOTS:
            for phrase in slots[slot]:
                names = {f for _, f, _, _ in fmt.parse(phrase) if f is not None}
                if not names <= SLOT_FIELDS[slot]:
                    raise ValueError(f"bad placeholders {sorted(names - SLOT_FIELDS[slot])} in {slot!r} phrase")
        self.slots = {s: tuple(slots[s]) for s in SLOTS}
        self.version = version

    @classmethod
    def load(cls, version: str = "v1") -> "PromptBank":
        text = resources.files("chessforge").joinpath("assets", f"vabp_bank_{version}.json").read_text("utf-8")
        data = json.loads(text)
        return cls({s: data[s] for s in SLOTS if s in data}, version)

    @classmethod
    def from_file(cls, path) -> "PromptBank":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls({s: data[s] for s in SLOTS if s in data}, str(data.get("version", "custom")))

    def say(self, slot: str, rng: random.Random, **fields) -> str:
        phrase = rng.choice(self.slots[slot])
        try:
            return phrase.format(**fields)
        except KeyError as exc:
            raise ValueError(f"{slot!r} phrase needs field {exc.args[0]!r}: {phrase!r}") from None


@dataclass
class TreeNode:
    move: Optional[Move]
    score: int  # absolute: centipawns from White's point of view
    depth: int
    white_to_move: bool  # side to move at this node
    children: List["TreeNode"] = field(default_factory=list)
    pruned: bool = False
    prune_reference: Optional[int] = None  # best sibling value (absolute) when pruned
    minimax_value: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"move": self.move.uci() if self.move else None, "score": self.score, "depth": self.depth,
             "pruned": self.pruned, "minimax": self.minimax_value}
        if self.prune_reference is not None:
            d["prune_reference"] = self.prune_reference
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    @classmethod
    def from_dict(cls, d: dict, white_to_move: bool) -> "TreeNode":
        node = cls(parse_uci_move(d["move"]) if d.get("move") else None, d["score"], d["depth"], white_to_move,
                   pruned=d.get("pruned", False), prune_reference=d.get("prune_reference"),
                   minimax_value=d.get("minimax"))
        node.children = [cls.from_dict(c, not white_to_move) for c in d.get("children", ())]
        return node

    def iter_nodes(self):
        yield self
        for c in self.children:
            yield from c.iter_nodes()


@dataclass
class SearchTree:
    board: Board
    root: TreeNode
    params: VabpParams
    nodes: int = 0  # non-root nodes

    @property
    def winner(self) -> TreeNode:
        return pick_best(self.root)

    @property
    def max_depth(self) -> int:
        return max(n.depth for n in self.root.iter_nodes())

    def to_dict(self) -> dict:
        return {"fen": self.board.fen(), "nodes": self.nodes, "params": self.params.to_dict(),
                "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchTree":
        board = Board.from_fen(d["fen"])
        root = TreeNode.from_dict(d["root"], board.white_to_move)
        return cls(board, root, VabpParams(**d["params"]), d["nodes"])


def _sign(white_to_move: bool) -> int:
    return 1 if white_to_move else -1


def pick_best(node: TreeNode) -> TreeNode:
    """Child preferred by the side to move at ``node``; ties go to the earlier child."""
    s = _sign(node.white_to_move)
    best = None
    for c in node.children:
        if best is None or s * c.minimax_value > s * best.minimax_value:
            best = c
    return best


def softmax_order(scores: Sequence[float], k: int, temperature: float, rng: random.Random) -> List[int]:
    """Sample ``k`` distinct indices, each draw with p proportional to exp(score / temperature)."""
    remaining = list(range(len(scores)))
    out = []
    for _ in range(min(k, len(remaining))):
        top = max(scores[i] for i in remaining)
        weights = [math.exp((scores[i] - top) / temperature) for i in remaining]
        total = sum(weights)
        r = rng.random() * total
        acc = 0.0
        pick = remaining[-1]
        for i, w in zip(remaining, weights):
            acc += w
            if r < acc:
                pick = i
                break
        out.append(pick)
        remaining.remove(pick)
    return out


def build_vabp_tree(board: Board, session: EngineSession, params: VabpParams,
                    rng: Optional[random.Random] = None) -> SearchTree:
    """Sample, prune and back up a search tree.

    Children are sampled without replacement by softmax over the engine
    scores from the mover's point of view. Children are visited in sampled
    order; a child whose own score is worse than the best backed-up sibling
    value by more than ``writeoff_margin`` is pruned. Expansion stops at
    ``depth_limit`` or once ``node_budget`` non-root nodes exist.
    """
    rng = rng or random.Random(params.seed)
    if len(legal_moves(board)) < 2:
        raise ValueError("VABP needs at least two legal moves")
    root = TreeNode(None, 0, 0, board.white_to_move)
    tree = SearchTree(board, root, params)

    def expand(node: TreeNode, pos: Board):
        if node.depth >= params.depth_limit or tree.nodes >= params.node_budget:
            return
        if not legal_moves(pos):
            return
        ranked = rank_moves(session, pos)
        k = params.root_candidates if node.depth == 0 else params.child_candidates
        k = min(k, len(ranked), params.node_budget - tree.nodes)
        s = _sign(node.white_to_move)
        picks = softmax_order([e.score.value for e in ranked], k, params.temperature, rng)
        for i in picks:
            e = ranked[i]
            node.children.append(TreeNode(e.move, s * e.score.value, node.depth + 1, not node.white_to_move))
        tree.nodes += len(picks)
        best = None
        for child in node.children:
            if best is not None and s * (best - child.score) > params.writeoff_margin:
                child.pruned = True
                child.prune_reference = best
                child.minimax_value = child.score
                continue
            expand(child, apply_move(pos, child.move))
            child.minimax_value = child.score if not child.children else pick_best(child).minimax_value
            if best is None or s * child.minimax_value > s * best:
                best = child.minimax_value

    expand(root, board)
    root.minimax_value = pick_best(root).minimax_value
    return tree


def brute_force_minimax(node: TreeNode) -> int:
    """Minimax over the stored tree without using stored values."""
    if not node.children:
        return node.score
    vals = [brute_force_minimax(c) for c in node.children]
    return max(vals) if node.white_to_move else min(vals)


def fmt_score(cp: int) -> str:
    return f"{cp:+d}cp"


def _side(white: bool) -> str:
    return "White" if white else "Black"


def verbalize_tree(tree: SearchTree, bank: PromptBank, rng: random.Random) -> str:
    lines: List[str] = []

    def say(level: int, text: str):
        lines.append(INDENT * level + text)

    say(0, bank.say("intro", rng, side=_side(tree.root.white_to_move)))

    def narrate(node: TreeNode, level: int):
        for child in node.children:
            mv = child.move.uci()
            if child.pruned:
                say(level, bank.say("prune", rng, move=mv, score=fmt_score(child.score)))
                continue
            say(level, bank.say("propose_move", rng, move=mv) + " "
                + bank.say("state_value", rng, score=fmt_score(child.score)))
            if child.children:
                say(level + 1, bank.say("branch", rng, side=_side(child.white_to_move), depth=child.depth + 1))
                narrate(child, level + 1)
                best = pick_best(child)
                say(level + 1, bank.say("minimax_compare", rng, side=_side(child.white_to_move),
                                        move=best.move.uci(), score=fmt_score(best.minimax_value)))
                say(level, bank.say("backtrack", rng, move=mv, score=fmt_score(child.minimax_value)))

    narrate(tree.root, 0)
    win = tree.winner
    say(0, bank.say("conclude", rng, move=win.move.uci(), score=fmt_score(win.minimax_value),
                    side=_side(tree.root.white_to_move)))
    say(0, f"Final Answer: {win.move.uci()}")
    return "\n".join(lines)


def check_narration(board: Board, text: str) -> List[str]:
    """Replay every UCI token of a narration along its indented path; return problems."""
    problems = []
    path: List[Move] = []
    positions = [board]
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.lstrip(" ")
        level = (len(line) - len(stripped)) // len(INDENT)
        if level > len(path):
            problems.append(f"line {lineno}: level {level} deeper than path {len(path)}")
            continue
        del path[level:]
        del positions[level + 1:]
        pos = positions[level]
        legal = set(legal_moves(pos))
        for j, tok in enumerate(UCI_RE.findall(stripped)):
            mv = parse_uci_move(tok)
            if mv not in legal:
                problems.append(f"line {lineno}: {tok} is not legal after {[m.uci() for m in path]}")
                continue
            if j == 0:
                path.append(mv)
                positions.append(apply_move(pos, mv))
    return problems


def gen_vabp(board: Board, session: EngineSession, params: VabpParams, bank: Optional[PromptBank] = None,
             fmt: BoardFormat = BoardFormat.VISUAL_ASCII) -> Sample:
    """Tree and phrases use separate seeded streams, so rephrasing never changes the tree."""
    bank = bank or PromptBank.load()
    tree = build_vabp_tree(board, session, params, random.Random(params.seed * 2))
    text = verbalize_tree(tree, bank, random.Random(params.seed * 2 + 1))
    prompt = prompts.render("vabp", board=render_prompt_board(board, fmt))
    meta = {"seed": params.seed, "format": BoardFormat(fmt).value, "params": params.to_dict(),
            "bank": bank.version, "tree": tree.to_dict(), "winner": tree.winner.move.uci(),
            "rank_go": session.config.rank_go, "engine": session.engine_id}
    return Sample(prompt, text, SampleTask.VABP, board.fen(), meta)
