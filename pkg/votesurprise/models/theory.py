"""Model(s) for the closed-form evaluators."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from votesurprise.errors import DimensionMismatch, InvalidInput

from .connection import ConnectionMatrix
from .preference import ClassSystem

KNIFE_EDGE_TOLERANCE = 1e-12


class Verdict(Enum):
    """Asymptotic verdict for a voter class."""

    SURPRISED = "surprised"
    NOT_SURPRISED = "not surprised"
    KNIFE_EDGE = "knife-edge"


class WinnerRank(Enum):
    """Where a class ranks the (designated) true winner."""

    FIRST = "first"
    SECOND = "second"
    LAST = "last"

    @classmethod
    def _missing_(cls: type, value: object):  # noqa: ARG003
        """Accept 0-based positions for three candidates."""
        return {0: WinnerRank.FIRST, 1: WinnerRank.SECOND, 2: WinnerRank.LAST}.get(value)


@dataclass(frozen=True)
class WinnerBound:
    """Bound on the minority candidate winning a two-candidate plurality election."""

    n: int
    epsilon: float
    value: float
    # smallest n for which the bound holds (1 / (16 eps^4))
    threshold_n: float
    in_force: bool


@dataclass(frozen=True)
class TwoCandidateVerdict:
    """Threshold classification of one class in a two-candidate election."""

    class_index: int
    ratio_lhs: float
    ratio_rhs: float
    verdict: Verdict
    rate_exponent_coeff: float
    n: int
    # e^(-c sqrt n): upper bound on surprise when not surprised
    tail_bound: float
    # 1 - 2 e^(-c sqrt n): lower bound on surprise when surprised
    surprise_lower_bound: float
    winner_bound: WinnerBound

    @property
    def surprised_whp(self) -> bool:
        """Return True when the voter is surprised with high probability."""
        return self.verdict is Verdict.SURPRISED

    @property
    def knife_edge(self) -> bool:
        """Return True when both sides of the threshold coincide."""
        return self.verdict is Verdict.KNIFE_EDGE


@dataclass(frozen=True)
class ScoreDiffMoments:
    """Moments of one voter's contribution to a challenger-minus-winner score gap."""

    rule: str
    voter_class: int
    challenger: int
    winner: int
    mean: float
    second_moment: float
    n: int

    @property
    def variance(self) -> float:
        """Return second_moment - mean^2."""
        return self.second_moment - self.mean**2

    @property
    def mu_normalized(self) -> float:
        """Return sqrt(n) * mean / sqrt(variance)."""
        return float(np.sqrt(self.n) * self.mean / np.sqrt(self.variance))


@dataclass(frozen=True)
class ReducedConnection:
    """
    Two-level connection model: one value inside a class, one across classes.

    The three-candidate moment formulas are derived for this form only.
    """

    p_same: float
    p_cross: float
    phat_same: float
    phat_cross: float

    def __post_init__(self) -> None:
        """Validate that every value is a probability in (0, 1]."""
        for name in ("p_same", "p_cross", "phat_same", "phat_cross"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidInput(f"{name}={value} must be in (0, 1]")

    @property
    def ratio_same(self) -> float:
        """Return p_same / phat_same."""
        return self.p_same / self.phat_same

    @property
    def ratio_cross(self) -> float:
        """Return p_cross / phat_cross."""
        return self.p_cross / self.phat_cross

    @property
    def strict_mee(self) -> bool:
        """Return True when the estimation error strictly decreases with distance."""
        return self.ratio_same > self.ratio_cross

    @classmethod
    def from_matrices(
        cls, p: ConnectionMatrix, phat: ConnectionMatrix, cs: ClassSystem
    ) -> "ReducedConnection":
        """Reduce full matrices, raising when they are not two-level."""
        cs.check_size(p.size, "p")
        cs.check_size(phat.size, "phat")
        values = []
        for name, matrix in (("p", p.p), ("phat", phat.p)):
            diag = np.diag(matrix)
            off = matrix[~np.eye(matrix.shape[0], dtype=bool)]
            if np.ptp(diag) > KNIFE_EDGE_TOLERANCE or np.ptp(off) > KNIFE_EDGE_TOLERANCE:
                raise DimensionMismatch(
                    f"{name} is not two-level: same-class entries span "
                    f"[{diag.min()}, {diag.max()}], cross-class [{off.min()}, {off.max()}]"
                )
            values.extend([float(diag[0]), float(off[0])])
        return cls(*values)

    def to_matrices(self, cs: ClassSystem) -> tuple[ConnectionMatrix, ConnectionMatrix]:
        """Return the full (P, P-hat) pair over a class system."""
        return (
            ConnectionMatrix.two_level(cs.size, self.p_same, self.p_cross),
            ConnectionMatrix.two_level(cs.size, self.phat_same, self.phat_cross),
        )


@dataclass(frozen=True)
class AnalyticMpfb:
    """Normal-approximation MPFB factors of one class under several rules."""

    voter_class: int
    class_label: str
    winner: int
    category: WinnerRank
    n: int
    # rule short name -> MPFB value, challenger reaching it
    values: dict[str, float]
    challengers: dict[str, int]
    order: tuple[str, ...]
    matches_claim: bool

    @property
    def ties(self) -> bool:
        """Return True when all rules give the same value."""
        vals = list(self.values.values())
        return max(vals) - min(vals) <= KNIFE_EDGE_TOLERANCE

    @property
    def label(self) -> str:
        """Return e.g. `Plu<=Bor<=Vet`."""
        return "<=".join(self.order)
