"""Bias-corrected estimates of class sizes and the winners they imply."""

from collections.abc import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .genesis import neighbor_class_counts
from .models.connection import ConnectionMatrix
from .models.preference import ClassSystem
from .models.sample import ElectionSample, PerceivedCounts
from .models.scoring import ScoringRule
from .streams import pair_uniforms

# scores are compared after rounding so float noise never splits a tie
SCORE_DECIMALS = 9


def estimate_counts(
    neighbor_counts: np.ndarray, own_class: np.ndarray | int, phat: ConnectionMatrix
) -> np.ndarray:
    """
    Scale neighbour counts by 1 / phat[own][k] and add the voter herself.

    Works on one voter (vector) or a panel (one row per voter).
    """
    counts = np.asarray(neighbor_counts, dtype=np.float64)
    own = np.asarray(own_class, dtype=np.int64)
    if counts.shape[-1] != phat.size:
        raise DimensionMismatch(f"{counts.shape[-1]} class counts for a {phat.size} class phat")
    estimates = counts / phat.p[own]
    if estimates.ndim == 1:
        estimates[own] += 1.0
    else:
        estimates[np.arange(estimates.shape[0]), own] += 1.0
    return estimates


def perceive_counts(sample: ElectionSample, v: int, phat: ConnectionMatrix) -> PerceivedCounts:
    """Return voter v's estimate of every class size."""
    if phat.size != sample.num_classes:
        raise DimensionMismatch(
            f"phat has {phat.size} classes, sample has {sample.num_classes}"
        )
    own = int(sample.sigma[v])
    estimates = estimate_counts(neighbor_class_counts(sample, v), own, phat)
    return PerceivedCounts(voter=v, own_class=own, estimates=estimates)


def perceive_panel(
    sigma: np.ndarray,
    panel: np.ndarray,
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    key: int,
) -> np.ndarray:
    """
    Return the estimates of a panel of voters without building the graph.

    The incident edges of every panel voter are drawn from the same pair
    stream `genesis.sample_sbm_graph` uses with this key, so the result is
    what `perceive_counts` gives on the full sample.
    """
    panel = np.asarray(panel, dtype=np.int64)
    n = sigma.size
    others = np.arange(n)
    uniforms = pair_uniforms(key, panel[:, None], others[None, :]).reshape(panel.size, n)
    edges = (uniforms < p.p[sigma[panel]][:, sigma]) & (panel[:, None] != others[None, :])
    onehot = np.zeros((n, p.size), dtype=np.int64)
    onehot[others, sigma] = 1
    return estimate_counts(edges.astype(np.int64) @ onehot, sigma[panel], phat)


def _check_rule(rule: ScoringRule, cs: ClassSystem) -> None:
    if rule.m != cs.m:
        raise DimensionMismatch(f"rule {rule.name.value} ranks {rule.m} candidates, classes {cs.m}")


def true_scores(counts: np.ndarray, rule: ScoringRule, cs: ClassSystem) -> np.ndarray:
    """Return the score of every candidate given the class counts."""
    _check_rule(rule, cs)
    counts = np.asarray(counts, dtype=np.float64)
    cs.check_size(counts.shape[-1], "counts")
    return counts @ cs.score_matrix(rule.scores)


def perceived_scores(pc: PerceivedCounts, rule: ScoringRule, cs: ClassSystem) -> np.ndarray:
    """Return the scores a voter perceives from her estimates."""
    return true_scores(pc.estimates, rule, cs)


def favoring(m: int, candidate: int) -> tuple[int, ...]:
    """Return the tie-break order with `candidate` first, the others ascending."""
    return (candidate, *(c for c in range(m) if c != candidate))


def priority_rank(m: int, priority: Sequence[int] | None = None) -> np.ndarray:
    """Return rank[c]: position of candidate c in the tie-break order (0 wins ties)."""
    order = tuple(range(m)) if priority is None else tuple(priority)
    if sorted(order) != list(range(m)):
        raise InvalidInput(f"tie-break order {order} is not a permutation of 0..{m - 1}")
    rank = np.empty(m, dtype=np.int64)
    rank[list(order)] = np.arange(m)
    return rank


def winners(scores: np.ndarray, priority: Sequence[int] | None = None) -> np.ndarray:
    """Vectorised `winner` over the last axis."""
    scores = np.round(np.asarray(scores, dtype=np.float64), SCORE_DECIMALS)
    rank = priority_rank(scores.shape[-1], priority)
    tied = scores == scores.max(axis=-1, keepdims=True)
    return np.argmin(np.where(tied, rank, rank.size), axis=-1)


def winner(scores: np.ndarray | Sequence[float], priority: Sequence[int] | None = None) -> int:
    """Return the highest scoring candidate, ties going to the earliest in `priority`."""
    return int(winners(np.asarray(scores, dtype=np.float64), priority))


def beats(
    scores: np.ndarray, b: int, w: int, priority: Sequence[int] | None = None
) -> np.ndarray | bool:
    """Return whether b outscores w, an exact tie counting when b has priority."""
    scores = np.round(np.asarray(scores, dtype=np.float64), SCORE_DECIMALS)
    rank = priority_rank(scores.shape[-1], priority)
    s_b = scores[..., b]
    s_w = scores[..., w]
    result = (s_b > s_w) | ((s_b == s_w) & (rank[b] < rank[w]))
    return bool(result) if np.ndim(result) == 0 else result
