"""
Closed-form evaluators.

Two candidates: the threshold on the estimated connection ratio that
separates surprised from non-surprised classes, with the Hoeffding rates
behind it, and the concentration of the true winner.

Three candidates: mean and variance of one voter's contribution to a
challenger-minus-winner score gap under a uniform population and a
two-level connection model, their normal approximation, and the MPFB
ordering of plurality, Borda and veto it predicts.
"""

from collections.abc import Sequence
import logging
import math

import numpy as np

from .errors import DegenerateConfig, DimensionMismatch, InvalidInput, PreconditionFailed
from .models.connection import ConnectionMatrix, satisfies_mee
from .models.preference import ClassSystem
from .models.report import MpfbOrdering
from .models.scoring import RuleName, ScoringRule, preset_rule
from .models.theory import (
    KNIFE_EDGE_TOLERANCE,
    AnalyticMpfb,
    ReducedConnection,
    ScoreDiffMoments,
    TwoCandidateVerdict,
    Verdict,
    WinnerBound,
    WinnerRank,
)

LOGGER = logging.getLogger(__package__).getChild("theory")

# the class of the designated winner in the three-candidate analysis
DEFAULT_WINNER = 1
THREE_RULES = (RuleName.PLURALITY, RuleName.BORDA, RuleName.VETO)

# (lower, higher) pairs of MPFB values claimed per winner rank
CLAIMS: dict[WinnerRank, tuple[tuple[str, str], ...]] = {
    WinnerRank.FIRST: (("Plu", "Bor"), ("Bor", "Vet")),
    WinnerRank.SECOND: (("Vet", "Bor"), ("Bor", "Plu")),
    WinnerRank.LAST: (("Vet", "Bor"), ("Plu", "Bor")),
}


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 0.5:
        raise InvalidInput(f"epsilon={epsilon} must be in (0, 1/2)")


def winner_concentration_bound(n: int, epsilon: float) -> WinnerBound:
    """
    Bound the chance that the minority candidate wins a plurality vote.

    Returns e^(-sqrt(n)/2), in force once n >= 1 / (16 epsilon^4).
    """
    if not 0.0 < epsilon <= 0.5:
        raise InvalidInput(f"epsilon={epsilon} must be in (0, 1/2]")
    if n < 1:
        raise InvalidInput(f"n={n} must be at least 1")
    threshold = 1.0 / (16.0 * epsilon**4)
    in_force = n >= threshold
    if not in_force:
        LOGGER.warning("winner bound not in force: n=%s < %.6g", n, threshold)
    return WinnerBound(
        n=n,
        epsilon=epsilon,
        value=math.exp(-math.sqrt(n) / 2),
        threshold_n=threshold,
        in_force=in_force,
    )


def rate_exponent_coeff(phat_own: float, phat_other: float) -> float:
    """Return 2 (a b / (a + b))^2 for the two estimated probabilities of a row."""
    return 2.0 * (phat_own * phat_other / (phat_own + phat_other)) ** 2


def hoeffding_threshold_n(coeff: float, delta: float = 0.5) -> int:
    """
    Return the smallest n with e^(-coeff sqrt n) <= delta.

    With the default delta the lower bound 1 - 2 e^(-coeff sqrt n) stops being
    vacuous from this n on.
    """
    if coeff <= 0:
        raise InvalidInput(f"coeff={coeff} must be positive")
    if not 0.0 < delta < 1.0:
        raise InvalidInput(f"delta={delta} must be in (0, 1)")
    return math.ceil((math.log(1.0 / delta) / coeff) ** 2)


def classify_two_candidate(
    epsilon: float,
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    class_index: int,
    n: int,
) -> TwoCandidateVerdict:
    """
    Classify a class of a two-candidate election won by candidate 0.

    Class 0 (preferring the winner) is surprised with high probability when
    phat00/phat01 > (p00/p01) (1/2 + eps)/(1/2 - eps); class 1 when
    phat11/phat10 < (p11/p10) (1/2 - eps)/(1/2 + eps).
    """
    _check_epsilon(epsilon)
    if p.size != 2 or phat.size != 2:
        raise DimensionMismatch("two-candidate classification needs 2 x 2 matrices")
    if class_index not in (0, 1):
        raise InvalidInput(f"class_index={class_index} must be 0 or 1")
    if n < 1:
        raise InvalidInput(f"n={n} must be at least 1")
    j, k = class_index, 1 - class_index
    lhs = phat[j, j] / phat[j, k]
    majority = (0.5 + epsilon) / (0.5 - epsilon)
    rhs = p[j, j] / p[j, k] * (majority if j == 0 else 1.0 / majority)
    if abs(lhs - rhs) <= KNIFE_EDGE_TOLERANCE * max(1.0, abs(rhs)):
        verdict = Verdict.KNIFE_EDGE
    elif (lhs > rhs) == (j == 0):
        verdict = Verdict.SURPRISED
    else:
        verdict = Verdict.NOT_SURPRISED
    coeff = rate_exponent_coeff(phat[j, j], phat[j, k])
    tail = math.exp(-coeff * math.sqrt(n))
    return TwoCandidateVerdict(
        class_index=class_index,
        ratio_lhs=lhs,
        ratio_rhs=rhs,
        verdict=verdict,
        rate_exponent_coeff=coeff,
        n=n,
        tail_bound=tail,
        surprise_lower_bound=max(0.0, 1.0 - 2.0 * tail),
        winner_bound=winner_concentration_bound(n, epsilon),
    )


def normal_tail(mu: float) -> float:
    """Return P(G >= 0) for G ~ Normal(mu, 1), i.e. Phi(mu)."""
    return 0.5 * math.erfc(-mu / math.sqrt(2.0))


def _check_three(cs: ClassSystem) -> None:
    if cs.m != 3:
        raise PreconditionFailed(f"the analytic MPFB model covers m=3 only, got m={cs.m}")


def score_diff_moments(
    rule: ScoringRule,
    voter_class: int,
    challenger: int,
    reduced: ReducedConnection,
    cs: ClassSystem,
    n: int,
    winner: int = DEFAULT_WINNER,
) -> ScoreDiffMoments:
    """
    Return the moments of X_u: another voter's share of s(challenger) - s(winner).

    X_u is the score gap u's vote creates, scaled by 1 / phat, when u is a
    neighbour of the voter and 0 otherwise; u falls in each class with
    probability 1/|C|.
    """
    _check_three(cs)
    if rule.m != cs.m:
        raise DimensionMismatch(f"rule ranks {rule.m} candidates, classes {cs.m}")
    if challenger == winner or not (0 <= challenger < cs.m and 0 <= winner < cs.m):
        raise InvalidInput(f"challenger={challenger} and winner={winner} must be distinct candidates")
    if not 0 <= voter_class < cs.size:
        raise InvalidInput(f"voter_class={voter_class} outside 0..{cs.size - 1}")
    if n < 1:
        raise InvalidInput(f"n={n} must be at least 1")
    scores = cs.score_matrix(rule.scores)
    gap = scores[:, challenger] - scores[:, winner]
    own = np.arange(cs.size) == voter_class
    p = np.where(own, reduced.p_same, reduced.p_cross)
    phat = np.where(own, reduced.phat_same, reduced.phat_cross)
    share = 1.0 / cs.size
    mean = float(np.sum(share * p / phat * gap))
    second = float(np.sum(share * p / phat**2 * gap**2))
    moments = ScoreDiffMoments(
        rule=rule.name.short,
        voter_class=voter_class,
        challenger=challenger,
        winner=winner,
        mean=mean,
        second_moment=second,
        n=n,
    )
    if moments.variance <= 0:
        raise DegenerateConfig(
            f"{rule.name.short}: variance of the gap a{challenger + 1}-a{winner + 1} "
            f"for class {voter_class} is {moments.variance}"
        )
    return moments


def theorem_claim(rank: WinnerRank | int) -> tuple[tuple[str, str], ...]:
    """Return the (lower, higher) MPFB pairs claimed for a winner rank."""
    return CLAIMS[WinnerRank(rank)]


def claim_holds(values: dict[str, float], claim: Sequence[tuple[str, str]]) -> bool:
    """Return True when every claimed pair is ordered as claimed (ties allowed)."""
    return all(values[lo] <= values[hi] + KNIFE_EDGE_TOLERANCE for lo, hi in claim)


def ordering_contradicts(ordering: MpfbOrdering, claim: Sequence[tuple[str, str]]) -> bool:
    """Return True when some claimed pair is reversed with separated CIs."""
    by_name = {name: (value, ci) for name, value, ci in ordering.entries}
    for lo, hi in claim:
        lo_value, lo_ci = by_name[lo]
        hi_value, hi_ci = by_name[hi]
        if lo_value - lo_ci > hi_value + hi_ci:
            return True
    return False


def analytic_mpfb_ordering(
    voter_class: int,
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    cs: ClassSystem,
    n: int,
    winner: int = DEFAULT_WINNER,
) -> AnalyticMpfb:
    """
    Predict the MPFB factor of a class under plurality, Borda and veto.

    Each factor is the larger normal tail over the two challengers. Requires
    monotone estimation error and the two-level form of p and phat.
    """
    _check_three(cs)
    if not satisfies_mee(p, phat, cs):
        raise PreconditionFailed("p / phat does not decrease with KT distance")
    reduced = ReducedConnection.from_matrices(p, phat, cs)
    values: dict[str, float] = {}
    challengers: dict[str, int] = {}
    for name in THREE_RULES:
        rule = preset_rule(name, cs.m)
        best = -1.0
        for challenger in range(cs.m):
            if challenger == winner:
                continue
            moments = score_diff_moments(rule, voter_class, challenger, reduced, cs, n, winner)
            tail = normal_tail(moments.mu_normalized)
            if tail > best:
                best, challengers[name.short] = tail, challenger
        values[name.short] = best
    order = tuple(sorted(values, key=lambda name: values[name]))
    category = WinnerRank(int(cs.positions[voter_class, winner]))
    matches = claim_holds(values, theorem_claim(category))
    if reduced.strict_mee and not matches:
        LOGGER.warning(
            "class %s: analytic ordering %s disagrees with the claim for a winner ranked %s",
            voter_class,
            "<=".join(order),
            category.value,
        )
    return AnalyticMpfb(
        voter_class=voter_class,
        class_label=str(cs.classes[voter_class]),
        winner=winner,
        category=category,
        n=n,
        values=values,
        challengers=challengers,
        order=order,
        matches_claim=matches,
    )
