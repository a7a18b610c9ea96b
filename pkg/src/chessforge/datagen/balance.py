"""Seeded subsampling of labelled items toward target bucket frequencies."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Sequence


@dataclass
class QuotaResult:
    keep: List[int]
    before: Dict[str, int]
    after: Dict[str, int]
    feasible: bool
    diagnostics: List[str] = field(default_factory=list)


def normalize_targets(targets: Mapping[Hashable, float]) -> Dict[str, float]:
    total = float(sum(targets.values()))
    if total <= 0 or any(v < 0 for v in targets.values()):
        raise ValueError("targets must be non-negative with a positive sum")
    return {str(k): v / total for k, v in targets.items()}


def quota_subsample(labels: Sequence[Hashable], targets: Mapping[Hashable, float], rng: random.Random,
                    name: str = "") -> QuotaResult:
    """Pick indices so that label frequencies match ``targets``.

    When every targeted bucket is populated the largest exact-proportion
    subset is kept (size ``min(count_b / t_b)``, rounded per bucket). When a
    targeted bucket is empty the target cannot be met; each bucket is then
    capped at ``t_b * len(labels)`` and a diagnostic is returned. Labels
    without a target are dropped. Kept indices are returned in input order.
    """
    t = normalize_targets(targets)
    labels = [str(x) for x in labels]
    counts = Counter(labels)
    before = {k: counts.get(k, 0) for k in sorted(set(t) | set(counts))}
    diags = []
    live = {k: v for k, v in t.items() if v > 0}
    feasible = all(counts.get(k, 0) > 0 for k in live)
    if not labels:
        return QuotaResult([], before, dict(before), True, [])
    if feasible:
        n = min(counts[k] / v for k, v in live.items())
        quota = {k: min(counts[k], int(math.floor(n * v + 1e-9))) for k, v in live.items()}
    else:
        missing = sorted(k for k in live if counts.get(k, 0) == 0)
        diags.append(f"{name or 'balance'}: no items for target bucket(s) {missing}; best-effort capping")
        quota = {k: min(counts.get(k, 0), int(math.floor(v * len(labels) + 1e-9))) for k, v in live.items()}
    by_label: Dict[str, List[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    keep = []
    for k in sorted(quota):
        idx = by_label.get(k, [])
        keep.extend(rng.sample(idx, quota[k]) if quota[k] < len(idx) else idx)
    keep.sort()
    after_counts = Counter(labels[i] for i in keep)
    after = {k: after_counts.get(k, 0) for k in before}
    if len(keep) < len(labels) and not feasible:
        diags.append(f"{name or 'balance'}: kept {len(keep)} of {len(labels)}")
    return QuotaResult(keep, before, after, feasible, diags)
