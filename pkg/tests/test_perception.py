"""Test bias-corrected estimates and winner determination."""

from hypothesis import given, strategies as st
import numpy as np
import pytest

from votesurprise.errors import DimensionMismatch, InvalidInput
from votesurprise.genesis import sample_assignment, sample_sbm_graph
from votesurprise.models.connection import ClassDistribution, ConnectionMatrix
from votesurprise.models.preference import build_class_system
from votesurprise.models.sample import ElectionSample
from votesurprise.streams import RngSeed
from votesurprise.models.scoring import RuleName, ScoringRule, preset_rule
from votesurprise.perception import (
    beats,
    estimate_counts,
    favoring,
    perceive_counts,
    perceive_panel,
    perceived_scores,
    priority_rank,
    true_scores,
    winner,
    winners,
)


def test_estimate_counts():
    """Test scaling by 1 / phat plus the voter herself."""
    phat = ConnectionMatrix(np.array([[0.5, 0.25], [0.25, 0.5]]))
    assert estimate_counts(np.array([2, 3]), 0, phat).tolist() == [5.0, 12.0]
    assert estimate_counts(np.array([2, 3]), 1, phat).tolist() == [8.0, 7.0]
    panel = estimate_counts(np.array([[2, 3], [2, 3]]), np.array([0, 1]), phat)
    assert panel.tolist() == [[5.0, 12.0], [8.0, 7.0]]
    with pytest.raises(DimensionMismatch):
        estimate_counts(np.array([1, 2, 3]), 0, phat)


def test_panel_matches_full_graph(seed):
    """Test that panel perception reproduces perception on the sampled graph."""
    dist = ClassDistribution(np.array([0.6, 0.4]))
    p = ConnectionMatrix(np.array([[0.3, 0.1], [0.1, 0.25]]))
    phat = ConnectionMatrix(np.array([[0.2, 0.15], [0.15, 0.3]]))
    sigma, _ = sample_assignment(300, dist, seed, 5)
    sample = sample_sbm_graph(sigma, p, seed, 5)
    panel = np.array([0, 7, 42, 150, 299])
    estimates = perceive_panel(sigma, panel, p, phat, seed.pair_key(5))
    for row, v in zip(estimates, panel, strict=True):
        assert row == pytest.approx(perceive_counts(sample, int(v), phat).estimates)


def test_perceived_scores_three_candidates():
    """Test scores computed from a voter's estimates."""
    cs = build_class_system(3)
    sigma = np.array([0, 0, 3, 5])
    sample = ElectionSample.from_edges(sigma, 6, np.array([[0, 1], [0, 2], [0, 3]]))
    pc = perceive_counts(sample, 0, ConnectionMatrix.uniform(6, 1.0))
    assert pc.estimates.tolist() == [2.0, 0.0, 0.0, 1.0, 0.0, 1.0]
    scores = perceived_scores(pc, preset_rule(RuleName.PLURALITY, 3), cs)
    assert scores.tolist() == [2.0, 1.0, 1.0]
    borda = perceived_scores(pc, preset_rule(RuleName.BORDA, 3), cs)
    assert borda.tolist() == pytest.approx([4 / 3, 5 / 3, 1.0])
    assert winner(borda) == 1


def test_ties_and_rounding():
    """Test deterministic tie-breaks, also across float noise."""
    assert winner([1.0, 1.0]) == 0
    assert winner([1.0, 1.0], (1, 0)) == 1
    assert winner([0.3, 0.1 + 0.2]) == 0
    assert winners(np.array([[0.0, 1.0], [2.0, 2.0]])).tolist() == [1, 0]
    assert beats(np.array([1.0, 1.0]), 0, 1) is True
    assert beats(np.array([1.0, 1.0]), 1, 0) is False
    assert beats(np.array([1.0, 1.0]), 1, 0, (1, 0)) is True
    assert beats(np.array([[2.0, 1.0], [1.0, 2.0]]), 1, 0).tolist() == [False, True]
    assert priority_rank(3, (2, 0, 1)).tolist() == [1, 2, 0]
    with pytest.raises(InvalidInput):
        priority_rank(3, (0, 0, 1))
    assert favoring(3, 1) == (1, 0, 2)
    assert winner([1.0, 1.0, 0.0], favoring(3, 1)) == 1


def test_true_scores_validation():
    """Test dimension checks of the scoring helpers."""
    cs = build_class_system(3)
    with pytest.raises(DimensionMismatch):
        true_scores(np.ones(6), preset_rule(RuleName.PLURALITY, 2), cs)
    with pytest.raises(DimensionMismatch):
        true_scores(np.ones(2), preset_rule(RuleName.PLURALITY, 3), cs)
    counts = np.array([10, 0, 0, 0, 0, 9])
    assert true_scores(counts, preset_rule(RuleName.VETO, 3), cs).tolist() == [5.0, 9.5, 4.5]


def _mean_relative_error(n: int, seed: RngSeed) -> float:
    dist = ClassDistribution(np.array([0.6, 0.4]))
    p = ConnectionMatrix(np.array([[0.3, 0.1], [0.1, 0.25]]))
    errors = []
    for trial in range(20):
        sigma, counts = sample_assignment(n, dist, seed, n, trial)
        estimates = perceive_panel(sigma, np.arange(50), p, p, seed.pair_key(n, trial))
        errors.append(np.max(np.abs(estimates - counts) / counts, axis=1))
    return float(np.mean(errors))


def test_estimates_are_consistent():
    """Test that exact phat estimates converge to the class sizes as n grows."""
    seed = RngSeed(31)
    errors = [_mean_relative_error(n, seed) for n in (500, 2000, 8000)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.1


@st.composite
def _rule_and_counts(draw):
    m = draw(st.integers(min_value=2, max_value=4))
    scores = sorted(draw(st.lists(st.integers(0, 10), min_size=m, max_size=m)), reverse=True)
    if scores[0] == scores[-1]:
        scores[0] += 1
    size = build_class_system(m).size
    counts = draw(st.lists(st.integers(0, 50), min_size=size, max_size=size))
    return ScoringRule(RuleName.CUSTOM, tuple(scores)), np.array(counts)


@given(_rule_and_counts(), st.integers(1, 10), st.integers(-10, 10))
def test_winner_survives_affine_scores(rule_and_counts, scale, shift):
    """Test that scaling and shifting the score vector keeps the winner."""
    rule, counts = rule_and_counts
    cs = build_class_system(rule.m)
    moved = rule.affine(scale, shift)
    assert winner(true_scores(counts, moved, cs)) == winner(true_scores(counts, rule, cs))
