"""Engine scores on a single bounded centipawn scale."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

MATE_BASE = 10000
# plain centipawn reports are clamped below the mate band
CP_LIMIT = MATE_BASE - 1000


def mate_to_centipawn(mate_in_plies: int) -> int:
    """Map a signed mate distance in plies to centipawns.

    ``sign(m) * (MATE_BASE - |m|)``: faster mates land farther from zero.
    """
    if mate_in_plies == 0:
        raise ValueError("mate distance must be nonzero")
    sign = 1 if mate_in_plies > 0 else -1
    return sign * (MATE_BASE - abs(mate_in_plies))


@dataclass(frozen=True, order=False)
class CentipawnScore:
    """Engine valuation from one side's point of view.

    ``mate_in`` is the signed distance to mate in plies (positive: this side
    mates). ``mate_in == 0`` marks a position where the side is already
    checkmated (``value == -MATE_BASE``) or, after a perspective flip, has
    delivered mate (``value == +MATE_BASE``).
    """

    value: int
    mate_in: Optional[int] = None

    @classmethod
    def cp(cls, value: int) -> "CentipawnScore":
        return cls(max(-CP_LIMIT, min(CP_LIMIT, int(value))))

    @classmethod
    def mate(cls, plies: int) -> "CentipawnScore":
        return cls(mate_to_centipawn(plies), plies)

    @classmethod
    def checkmated(cls) -> "CentipawnScore":
        return cls(-MATE_BASE, 0)

    @classmethod
    def from_uci(cls, kind: str, n: int) -> "CentipawnScore":
        """Build from a UCI ``score cp n`` / ``score mate n`` pair (mate in full moves)."""
        if kind == "cp":
            return cls.cp(n)
        if kind == "mate":
            if n == 0:
                return cls.checkmated()
            return cls.mate(2 * n - 1 if n > 0 else 2 * n)
        raise ValueError(f"unknown score kind {kind!r}")

    def flipped(self) -> "CentipawnScore":
        return CentipawnScore(-self.value, None if self.mate_in is None else -self.mate_in)

    @property
    def is_mate(self) -> bool:
        return self.mate_in is not None

    def to_dict(self) -> dict:
        return {"value": self.value, "mate_in": self.mate_in}

    @classmethod
    def from_dict(cls, d: dict) -> "CentipawnScore":
        return cls(int(d["value"]), None if d.get("mate_in") is None else int(d["mate_in"]))

    def __str__(self) -> str:
        if self.mate_in is not None:
            return f"mate {self.mate_in:+d} plies ({self.value:+d})"
        return f"{self.value:+d}"
