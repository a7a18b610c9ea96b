"""Predictive-complexity statistics over token probability logs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence

DEFAULT_THRESHOLD = 0.995
GROUP_KEYS = ("dataset", "question_type", "position_tag")
NO_GROUP = "(none)"


@dataclass(frozen=True)
class TokenProbRecord:
    dataset: str
    sample_id: str
    token_index: int
    prob: float
    question_type: Optional[str] = None
    position_tag: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"probability {self.prob} outside [0, 1]")
        if self.token_index < 0:
            raise ValueError("token_index must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TokenProbRecord":
        return cls(str(d["dataset"]), str(d["sample_id"]), int(d["token_index"]), float(d["prob"]),
                   d.get("question_type"), d.get("position_tag"))


def iter_prob_log(path) -> Iterator[TokenProbRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield TokenProbRecord.from_dict(json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc


def triviality_fraction(records: Iterable[TokenProbRecord], threshold: float = DEFAULT_THRESHOLD) -> float:
    """Share of tokens predicted with probability strictly above ``threshold``."""
    n = hits = 0
    for r in records:
        n += 1
        hits += r.prob > threshold
    if n == 0:
        raise ValueError("no records")
    return hits / n


def triviality_grouped(records: Iterable[TokenProbRecord], group_by: str = "dataset",
                       threshold: float = DEFAULT_THRESHOLD) -> List[dict]:
    """Per-group triviality fraction and token share, one row per group sorted by name."""
    if group_by not in GROUP_KEYS:
        raise ValueError(f"group_by must be one of {GROUP_KEYS}")
    counts: Dict[str, List[int]] = {}
    total = 0
    for r in records:
        key = getattr(r, group_by)
        row = counts.setdefault(NO_GROUP if key is None else str(key), [0, 0])
        row[0] += 1
        row[1] += r.prob > threshold
        total += 1
    if total == 0:
        raise ValueError("no records")
    return [{"group": g, "tokens": n, "trivial": h, "trivial_fraction": h / n, "token_share": n / total}
            for g, (n, h) in sorted(counts.items())]


def move_quality_histogram(scores: Sequence[float], n_bins: int = 10) -> dict:
    """Equal-width bins over [0, 1]; the last bin is closed on the right."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    counts = [0] * n_bins
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"score {s} outside [0, 1]")
        counts[min(int(s * n_bins), n_bins - 1)] += 1
    n = sum(counts)
    edges = [i / n_bins for i in range(n_bins + 1)]
    return {"edges": edges, "counts": counts, "freqs": [c / n if n else 0.0 for c in counts], "n": n}


def format_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    """Plain-text table; floats in [0, 1] columns named *fraction/share are shown as percentages."""
    def cell(col, v):
        if isinstance(v, float) and (col.endswith("fraction") or col.endswith("share")):
            return f"{100 * v:.2f}%"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    table = [list(columns)] + [[cell(c, r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(columns))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in table) + "\n"
