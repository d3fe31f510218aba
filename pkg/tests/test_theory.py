"""Test the closed-form evaluators."""

import logging
import math

import numpy as np
import pytest
from scipy import stats

from votesurprise.engine import TrialConfig, compare_rules, mpfb_empirical_ordering
from votesurprise.errors import DimensionMismatch, InvalidInput, PreconditionFailed
from votesurprise.models.connection import ClassDistribution, ConnectionMatrix
from votesurprise.models.preference import build_class_system
from votesurprise.models.report import MpfbOrdering
from votesurprise.models.scoring import RuleName, preset_rule
from votesurprise.models.theory import ReducedConnection, Verdict, WinnerRank
from votesurprise.streams import RngSeed
from votesurprise.theory import (
    analytic_mpfb_ordering,
    claim_holds,
    classify_two_candidate,
    hoeffding_threshold_n,
    normal_tail,
    ordering_contradicts,
    rate_exponent_coeff,
    score_diff_moments,
    theorem_claim,
    winner_concentration_bound,
)

P = ConnectionMatrix(np.array([[0.4, 0.2], [0.2, 0.4]]))


def _phat(same_minority: float) -> ConnectionMatrix:
    return ConnectionMatrix(np.array([[0.4, 0.2], [0.2, same_minority]]))


def test_minority_threshold():
    """Test the verdict on both sides of the minority threshold."""
    rhs = 2.0 * 0.45 / 0.55
    below = classify_two_candidate(0.05, P, _phat(0.8 * rhs * 0.2), 1, 4000)
    assert below.verdict is Verdict.SURPRISED
    assert below.ratio_rhs == pytest.approx(rhs)
    assert below.ratio_lhs == pytest.approx(0.8 * rhs)
    above = classify_two_candidate(0.05, P, _phat(1.25 * rhs * 0.2), 1, 4000)
    assert above.verdict is Verdict.NOT_SURPRISED
    edge = classify_two_candidate(0.05, P, _phat(rhs * 0.2), 1, 4000)
    assert edge.knife_edge
    assert not edge.surprised_whp


def test_majority_threshold():
    """Test the class preferring the winner."""
    # knowing p exactly leaves the majority calm
    assert classify_two_candidate(0.05, P, P, 0, 4000).verdict is Verdict.NOT_SURPRISED
    # overrating own-class links beyond (p00/p01)(0.55/0.45) flips the verdict
    overrated = ConnectionMatrix(np.array([[1.0, 0.2], [0.2, 0.4]]))
    verdict = classify_two_candidate(0.05, P, overrated, 0, 4000)
    assert verdict.verdict is Verdict.SURPRISED
    assert verdict.ratio_lhs == pytest.approx(5.0)
    assert verdict.ratio_rhs == pytest.approx(2.0 * 0.55 / 0.45)


def test_rates():
    """Test the Hoeffding rate and the bounds derived from it."""
    coeff = rate_exponent_coeff(0.4, 0.2)
    assert coeff == pytest.approx(2 * (0.08 / 0.6) ** 2)
    verdict = classify_two_candidate(0.05, P, P, 0, 4000)
    assert verdict.rate_exponent_coeff == pytest.approx(coeff)
    assert verdict.tail_bound == pytest.approx(math.exp(-coeff * math.sqrt(4000)))
    assert verdict.surprise_lower_bound == pytest.approx(max(0.0, 1 - 2 * verdict.tail_bound))
    n = hoeffding_threshold_n(coeff)
    assert math.exp(-coeff * math.sqrt(n)) <= 0.5
    assert math.exp(-coeff * math.sqrt(n - 1)) > 0.5
    with pytest.raises(InvalidInput):
        hoeffding_threshold_n(0.0)
    with pytest.raises(InvalidInput):
        hoeffding_threshold_n(coeff, delta=1.0)


def test_winner_bound(caplog):
    """Test the winner concentration bound and its range."""
    bound = winner_concentration_bound(4000, 0.1)
    assert bound.in_force
    assert bound.threshold_n == pytest.approx(625.0)
    assert bound.value == pytest.approx(math.exp(-math.sqrt(4000) / 2))
    with caplog.at_level(logging.WARNING):
        weak = winner_concentration_bound(4000, 0.05)
    assert not weak.in_force
    assert "not in force" in caplog.text
    assert winner_concentration_bound(1, 0.5).in_force
    with pytest.raises(InvalidInput):
        winner_concentration_bound(10, 0.0)
    with pytest.raises(InvalidInput):
        classify_two_candidate(0.5, P, P, 0, 10)
    with pytest.raises(InvalidInput):
        classify_two_candidate(0.1, P, P, 2, 10)
    with pytest.raises(DimensionMismatch):
        classify_two_candidate(0.1, ConnectionMatrix.uniform(6, 0.5), P, 0, 10)


@pytest.mark.parametrize("mu", [-3.0, -0.5, 0.0, 0.25, 2.0])
def test_normal_tail(mu):
    """Test P(G >= 0) against scipy."""
    assert normal_tail(mu) == pytest.approx(stats.norm.cdf(mu), abs=1e-12)


def test_score_diff_moments():
    """Test mean and second moment of plurality with exact estimates."""
    cs = build_class_system(3)
    reduced = ReducedConnection(0.5, 0.25, 0.5, 0.25)
    moments = score_diff_moments(preset_rule(RuleName.PLURALITY, 3), 0, 0, reduced, cs, 100)
    assert moments.mean == pytest.approx(0.0)
    assert moments.second_moment == pytest.approx(14 / 6)
    assert moments.variance == pytest.approx(14 / 6)
    assert moments.mu_normalized == pytest.approx(0.0)
    with pytest.raises(InvalidInput):
        score_diff_moments(preset_rule(RuleName.PLURALITY, 3), 0, 1, reduced, cs, 100)
    with pytest.raises(DimensionMismatch):
        score_diff_moments(preset_rule(RuleName.PLURALITY, 2), 0, 0, reduced, cs, 100)
    with pytest.raises(PreconditionFailed):
        score_diff_moments(
            preset_rule(RuleName.PLURALITY, 2), 0, 1, reduced, build_class_system(2), 100
        )


def test_analytic_ordering_follows_the_claims():
    """Test the predicted MPFB order for every class under strict estimation error."""
    cs = build_class_system(3)
    p = ConnectionMatrix.two_level(6, 0.5, 0.25)
    phat = ConnectionMatrix.two_level(6, 0.4, 0.25)
    ranks = [WinnerRank.SECOND, WinnerRank.LAST, WinnerRank.FIRST,
             WinnerRank.FIRST, WinnerRank.LAST, WinnerRank.SECOND]
    for k, rank in enumerate(ranks):
        result = analytic_mpfb_ordering(k, p, phat, cs, 3000)
        assert result.category is rank
        assert result.matches_claim
        assert claim_holds(result.values, theorem_claim(rank))

    first = analytic_mpfb_ordering(2, p, phat, cs, 3000)
    root = math.sqrt(3000)
    assert first.values["Plu"] == pytest.approx(stats.norm.cdf(-0.0262522 * root), rel=1e-3)
    assert first.values["Bor"] == pytest.approx(stats.norm.cdf(-0.0148690 * root), rel=1e-3)
    assert first.values["Vet"] == pytest.approx(0.5)
    assert first.label == "Plu<=Bor<=Vet"
    assert first.challengers["Bor"] == 0

    second = analytic_mpfb_ordering(0, p, phat, cs, 3000)
    assert second.label == "Vet<=Bor<=Plu"


def test_analytic_ordering_preconditions():
    """Test neutral estimates, non-MEE and non two-level inputs."""
    cs = build_class_system(3)
    p = ConnectionMatrix.two_level(6, 0.5, 0.25)
    neutral = analytic_mpfb_ordering(4, p, p, cs, 500)
    assert neutral.ties
    assert neutral.matches_claim
    reversed_error = ConnectionMatrix.two_level(6, 0.5, 0.125)
    with pytest.raises(PreconditionFailed):
        analytic_mpfb_ordering(0, p, reversed_error, cs, 500)
    regular = ConnectionMatrix.from_kt(cs, 0.8)
    with pytest.raises(DimensionMismatch):
        analytic_mpfb_ordering(0, regular, regular, cs, 500)
    two = build_class_system(2)
    with pytest.raises(PreconditionFailed):
        analytic_mpfb_ordering(0, ConnectionMatrix.uniform(2, 0.5), ConnectionMatrix.uniform(2, 0.5), two, 10)


def test_claims_and_contradictions():
    """Test the claim table and how empirical orderings are checked against it."""
    assert theorem_claim(0) == (("Plu", "Bor"), ("Bor", "Vet"))
    assert theorem_claim(WinnerRank.LAST) == (("Vet", "Bor"), ("Plu", "Bor"))
    assert WinnerRank(1) is WinnerRank.SECOND
    separated = MpfbOrdering(
        class_index=0,
        entries=(("Plu", 0.1, 0.01), ("Bor", 0.2, 0.01), ("Vet", 0.4, 0.01)),
        inconclusive=False,
    )
    assert not ordering_contradicts(separated, theorem_claim(WinnerRank.FIRST))
    assert ordering_contradicts(separated, theorem_claim(WinnerRank.SECOND))
    assert separated.label == "Plu<=Bor<=Vet"
    overlapping = MpfbOrdering(
        class_index=0,
        entries=(("Plu", 0.1, 0.1), ("Bor", 0.15, 0.1), ("Vet", 0.2, 0.1)),
        inconclusive=True,
    )
    assert not ordering_contradicts(overlapping, theorem_claim(WinnerRank.SECOND))
    assert overlapping.label.endswith("(inconclusive)")


def _random_mee_models(count: int, rng: np.random.Generator) -> list[ReducedConnection]:
    models = []
    for _ in range(count):
        p_same = rng.uniform(0.35, 0.6)
        p_cross = rng.uniform(0.2, 0.35)
        own, other = rng.uniform(2.5, 4.0), rng.uniform(0.8, 1.2)
        models.append(ReducedConnection(p_same, p_cross, p_same / own, p_cross / other))
    return models


@pytest.mark.slow
@pytest.mark.parametrize("model", _random_mee_models(5, np.random.default_rng(4)))
def test_mpfb_orderings_on_random_models(model):
    """Test analytic and Monte Carlo MPFB orderings against the claims at n=3000."""
    assert model.strict_mee
    cs = build_class_system(3)
    p = ConnectionMatrix.two_level(6, model.p_same, model.p_cross)
    phat = ConnectionMatrix.two_level(6, model.phat_same, model.phat_cross)
    config = TrialConfig(
        n=3000,
        dist=ClassDistribution.uniform(6),
        p=p,
        phat=phat,
        rule=preset_rule(RuleName.PLURALITY, 3),
        trials=1000,
        panel_size=10,
        conditioning=1,
    )
    reports = compare_rules(config, RngSeed(17))
    plu, bor, vet = (reports[name] for name in (RuleName.PLURALITY, RuleName.BORDA, RuleName.VETO))
    seen = set()
    for k in range(cs.size):
        analytic = analytic_mpfb_ordering(k, p, phat, cs, 3000, winner=1)
        claim = theorem_claim(analytic.category)
        seen.add(analytic.category)
        assert analytic.matches_claim
        assert claim_holds(analytic.values, claim)
        ordering = mpfb_empirical_ordering(plu, bor, vet, k)
        assert not ordering_contradicts(ordering, claim), ordering.label
    assert seen == set(WinnerRank)
