"""Model(s) for scoring rules."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from votesurprise.errors import InvalidInput


class RuleName(Enum):
    """Enum with the preset scoring rules."""

    PLURALITY = "plurality"
    BORDA = "borda"
    VETO = "veto"
    CUSTOM = "custom"

    @property
    def short(self) -> str:
        """Return the three letter abbreviation used in orderings."""
        return {
            RuleName.PLURALITY: "Plu",
            RuleName.BORDA: "Bor",
            RuleName.VETO: "Vet",
        }.get(self, "Cus")


@dataclass(frozen=True)
class ScoringRule:
    """
    Represent a scoring rule: a non-increasing score vector over positions.

    A candidate at position i of a vote receives scores[i]; the winner is
    the candidate with the largest total.
    """

    name: RuleName
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate the score vector."""
        scores = tuple(float(s) for s in self.scores)
        object.__setattr__(self, "scores", scores)
        if len(scores) < 2:
            raise InvalidInput(f"rule {self.name.value} needs at least 2 scores")
        if not all(np.isfinite(scores)):
            raise InvalidInput(f"rule {self.name.value} has non-finite scores")
        for i in range(len(scores) - 1):
            if scores[i] < scores[i + 1]:
                raise InvalidInput(
                    f"rule {self.name.value}: scores[{i}]={scores[i]} < "
                    f"scores[{i + 1}]={scores[i + 1]}"
                )
        if scores[0] <= scores[-1]:
            raise InvalidInput(f"rule {self.name.value}: scores[0] must exceed scores[-1]")

    @property
    def m(self) -> int:
        """Return the number of candidates this rule ranks."""
        return len(self.scores)

    @property
    def vector(self) -> np.ndarray:
        """Return the scores as a numpy vector."""
        return np.asarray(self.scores, dtype=np.float64)

    def affine(self, scale: float, shift: float = 0.0) -> "ScoringRule":
        """Return the equivalent rule scale * scores + shift (scale > 0)."""
        if scale <= 0:
            raise InvalidInput(f"scale={scale} must be positive")
        return ScoringRule(RuleName.CUSTOM, tuple(scale * s + shift for s in self.scores))


def preset_rule(name: RuleName | str, m: int) -> ScoringRule:
    """
    Return a preset rule normalised so its scores sum to 1.

    plurality: (1, 0, ..., 0); Borda: (m-1, ..., 1, 0); veto: (1, ..., 1, 0).
    """
    try:
        rule = RuleName(name)
    except ValueError as exc:
        raise InvalidInput(f"unknown rule `{name}`") from exc
    if m < 2:
        raise InvalidInput(f"m={m} must be at least 2")
    if rule is RuleName.PLURALITY:
        raw = [1.0] + [0.0] * (m - 1)
    elif rule is RuleName.BORDA:
        raw = [float(m - 1 - i) for i in range(m)]
    elif rule is RuleName.VETO:
        raw = [1.0] * (m - 1) + [0.0]
    else:
        raise InvalidInput("custom rules have no preset")
    total = sum(raw)
    return ScoringRule(rule, tuple(s / total for s in raw))


def rule_from_config(name: str, m: int, scores: tuple[float, ...] | None = None) -> ScoringRule:
    """Build a rule from config: a preset name or explicit custom scores."""
    if scores is not None:
        if len(scores) != m:
            raise InvalidInput(f"custom scores have {len(scores)} entries for m={m}")
        return ScoringRule(RuleName.CUSTOM, scores)
    return preset_rule(name, m)
