"""Monte Carlo estimation of surprise, beat events and MPFB factors."""

import asyncio
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from functools import cache
from itertools import product
import logging
import math
from typing import Any

import networkx as nx
import numpy as np

from .errors import (
    ConditioningStarved,
    DimensionMismatch,
    InvalidInput,
    PreconditionFailed,
)
from .genesis import sample_assignment
from .models.connection import ClassDistribution, ConnectionMatrix
from .models.preference import ClassSystem, build_class_system
from .models.report import (
    ClassEstimate,
    Example1Result,
    MpfbOrdering,
    SurpriseReport,
    TrialOutcome,
)
from .models.sample import ElectionSample
from .models.scoring import RuleName, ScoringRule, preset_rule
from .perception import (
    beats,
    estimate_counts,
    favoring,
    perceive_counts,
    perceive_panel,
    priority_rank,
    true_scores,
    winner,
    winners,
)
from .runner import batches, run_jobs
from .streams import RngSeed

Z_95 = 1.959963984540054
BRUTE_FORCE_MAX_N = 8
DEFAULT_BATCH = 200


@cache
def class_system(m: int) -> ClassSystem:
    """Return the (shared, immutable) class system over m candidates."""
    return build_class_system(m)


@dataclass(frozen=True)
class TrialConfig:
    """
    Everything a Monte Carlo run depends on, apart from the seed.

    Parameters:
        `n`: number of voters.
        `dist`: class distribution.
        `p`: true connection probabilities.
        `phat`: the voters' estimate of p.
        `rule`: scoring rule.
        `trials`: number of independent elections.
        `panel_size`: voters evaluated per class and trial.
        `tiebreak`: candidate priority order for ties (default: the conditioned
            candidate first, then ascending index).
        `conditioning`: keep only trials won by this candidate.
    """

    n: int
    dist: ClassDistribution
    p: ConnectionMatrix
    phat: ConnectionMatrix
    rule: ScoringRule
    trials: int = 1000
    panel_size: int = 10
    tiebreak: tuple[int, ...] | None = None
    conditioning: int | None = None
    batch_size: int = field(default=DEFAULT_BATCH, compare=False)

    def __post_init__(self) -> None:
        """Validate the config before any work starts."""
        if self.n < 1:
            raise InvalidInput(f"n={self.n} must be at least 1")
        if self.trials < 1:
            raise InvalidInput(f"trials={self.trials} must be at least 1")
        if self.panel_size < 1:
            raise InvalidInput(f"panel_size={self.panel_size} must be at least 1")
        m = self.rule.m
        cs = class_system(m)
        cs.check_size(self.dist.size, "eps")
        cs.check_size(self.p.size, "p")
        cs.check_size(self.phat.size, "phat")
        if self.conditioning is not None and not 0 <= self.conditioning < m:
            raise InvalidInput(f"conditioning={self.conditioning} is not a candidate of 0..{m - 1}")
        if self.tiebreak is None and self.conditioning is not None:
            object.__setattr__(self, "tiebreak", favoring(m, self.conditioning))
        priority_rank(m, self.tiebreak)

    @property
    def m(self) -> int:
        """Return the number of candidates."""
        return self.rule.m

    @property
    def class_system(self) -> ClassSystem:
        """Return the class system of this config."""
        return class_system(self.m)

    def with_rule(self, rule: ScoringRule) -> "TrialConfig":
        """Return the same config under another rule."""
        return replace(self, rule=rule)

    def echo(self) -> dict[str, Any]:
        """Return the effective config as plain json values."""
        return {
            "n": self.n,
            "m": self.m,
            "eps": self.dist.eps.tolist(),
            "p": self.p.p.tolist(),
            "phat": self.phat.p.tolist(),
            "rule": self.rule.name.value,
            "scores": list(self.rule.scores),
            "trials": self.trials,
            "panel_size": self.panel_size,
            "tiebreak": list(self.tiebreak) if self.tiebreak is not None else None,
            "conditioning": self.conditioning,
        }


@dataclass
class _TrialStats:
    winner: int
    kept: bool
    # per class: class size, share of the panel surprised, share beaten by each candidate
    weights: np.ndarray
    surprise: np.ndarray
    beat: np.ndarray


def _ratio_estimate(weights: np.ndarray, freq: np.ndarray) -> tuple[float, float]:
    """
    Return the class-size weighted mean of per-trial frequencies and its CI.

    The half-width comes from the normal approximation of the ratio
    estimator; near 0 or 1 the Wilson interval over the effective number of
    trials is used instead.
    """
    total = float(weights.sum())
    if total == 0:
        return 0.0, 1.0
    estimate = float(weights @ freq) / total
    n_eff = total**2 / float(weights @ weights)
    boundary = 2.0 / len(weights)
    if estimate <= boundary or estimate >= 1.0 - boundary:
        z2 = Z_95**2
        denom = 1.0 + z2 / n_eff
        center = (estimate + z2 / (2 * n_eff)) / denom
        half = Z_95 * math.sqrt(estimate * (1 - estimate) / n_eff + z2 / (4 * n_eff**2)) / denom
        return estimate, max(center + half - estimate, estimate - (center - half))
    resid = weights * (freq - estimate)
    return estimate, Z_95 * math.sqrt(float(resid @ resid)) / total


class SurpriseEngine:
    """
    Run seeded Monte Carlo trials of one configuration.

    Trial t draws its assignment and panel from `seed.generator(t)` and its
    edges from `seed.pair_key(t)`, so reports only depend on (config, seed).
    """

    def __init__(
        self,
        config: TrialConfig,
        seed: RngSeed,
        threads: int = 1,
        label: str | None = None,
    ) -> None:
        """
        Initialize the engine.

        Parameters:
            `config`: the validated trial configuration.
            `seed`: master seed and stream of this run.
            `threads`: worker threads, never changes results.
            `label`: name used in log records.
        """
        self._config = config
        self._seed = seed
        self._threads = threads
        self._cs = config.class_system
        self._score_matrix = self._cs.score_matrix(config.rule.scores)
        self.logger = logging.getLogger(
            f"{__package__}[{label or config.rule.name.short}]"
        )

    @property
    def config(self) -> TrialConfig:
        """Return the trial configuration."""
        return self._config

    def outcome(self, trial: int) -> TrialOutcome:
        """Return the panel outcome of a single trial (kept or not)."""
        sigma, _, panel, true_winner = self._draw(trial)
        scores = self._perceive(sigma, panel, trial)
        return TrialOutcome(
            true_winner=true_winner,
            panel_classes=sigma[panel],
            per_voter_perceived=winners(scores, self._config.tiebreak),
        )

    def _draw(self, trial: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        config = self._config
        rng = self._seed.generator(trial)
        sigma, counts = sample_assignment(config.n, config.dist, rng)
        true_winner = winner(counts @ self._score_matrix, config.tiebreak)
        panel = []
        for k in np.flatnonzero(counts):
            members = np.flatnonzero(sigma == k)
            size = min(config.panel_size, members.size)
            panel.append(rng.choice(members, size=size, replace=False))
        return sigma, counts, np.concatenate(panel), true_winner

    def _perceive(self, sigma: np.ndarray, panel: np.ndarray, trial: int) -> np.ndarray:
        config = self._config
        estimates = perceive_panel(sigma, panel, config.p, config.phat, self._seed.pair_key(trial))
        return estimates @ self._score_matrix

    def _trial(self, trial: int) -> _TrialStats:
        config = self._config
        num_classes = self._cs.size
        sigma, counts, panel, true_winner = self._draw(trial)
        if config.conditioning is not None and true_winner != config.conditioning:
            zeros = np.zeros(num_classes)
            return _TrialStats(
                true_winner, False, zeros, zeros, np.zeros((num_classes, config.m))
            )
        scores = self._perceive(sigma, panel, trial)
        perceived = winners(scores, config.tiebreak)
        beat = np.column_stack(
            [beats(scores, b, true_winner, config.tiebreak) for b in range(config.m)]
        ).astype(np.float64)
        panel_cls = sigma[panel]
        sizes = np.bincount(panel_cls, minlength=num_classes).astype(np.float64)
        safe = np.where(sizes > 0, sizes, 1.0)
        surprise = np.bincount(
            panel_cls, weights=(perceived != true_winner).astype(np.float64), minlength=num_classes
        )
        beat_sum = np.stack(
            [np.bincount(panel_cls, weights=beat[:, b], minlength=num_classes) for b in range(config.m)],
            axis=1,
        )
        return _TrialStats(
            true_winner,
            True,
            counts.astype(np.float64),
            surprise / safe,
            beat_sum / safe[:, None],
        )

    def _batch(self, trials: range) -> list[_TrialStats]:
        return [self._trial(t) for t in trials]

    async def run_trials(self) -> SurpriseReport:
        """Run every trial and aggregate them into a report."""
        config = self._config
        self.logger.info(
            "running %s trials of n=%s with seed %s", config.trials, config.n, self._seed.master_seed
        )
        results = await run_jobs(
            self._batch, batches(config.trials, config.batch_size), self._threads
        )
        stats = [item for batch in results for item in batch]
        return self._aggregate(stats)

    def run_trials_sync(self) -> SurpriseReport:
        """Blocking variant of run_trials."""
        if self._threads == 1:
            return self._aggregate(self._batch(range(self._config.trials)))
        return asyncio.run(self.run_trials())

    def _aggregate(self, stats: list[_TrialStats]) -> SurpriseReport:
        config = self._config
        kept = [s for s in stats if s.kept]
        winner_counts = np.bincount([s.winner for s in stats], minlength=config.m)
        discarded = len(stats) - len(kept)
        self.logger.debug("%s of %s trials discarded by conditioning", discarded, len(stats))
        if not kept:
            raise ConditioningStarved(
                f"candidate {config.conditioning} never won in {len(stats)} trials",
                trials=len(stats),
                discarded=discarded,
            )
        weights = np.stack([s.weights for s in kept])
        surprise = np.stack([s.surprise for s in kept])
        beat = np.stack([s.beat for s in kept])
        per_class = []
        for k in range(self._cs.size):
            if weights[:, k].sum() == 0:
                self.logger.warning("class %s never drawn, its estimates are void", k)
            surp, surp_ci = _ratio_estimate(weights[:, k], surprise[:, k])
            beat_est = [_ratio_estimate(weights[:, k], beat[:, k, b]) for b in range(config.m)]
            probs = tuple(est for est, _ in beat_est)
            cis = tuple(ci for _, ci in beat_est)
            challenger = int(np.argmax(probs))
            per_class.append(
                ClassEstimate(
                    class_index=k,
                    class_label=str(self._cs.classes[k]),
                    surprise=surp,
                    surprise_ci=surp_ci,
                    beat_probs=probs,
                    beat_ci=cis,
                    mpfb=probs[challenger],
                    mpfb_ci=cis[challenger],
                    mpfb_challenger=challenger,
                    panel_voters=int(
                        sum(min(config.panel_size, int(c)) for c in weights[:, k])
                    ),
                )
            )
        report = SurpriseReport(
            rule=config.rule.name.value,
            scores=config.rule.scores,
            m=config.m,
            eps=tuple(config.dist.eps.tolist()),
            trials=len(stats),
            kept_trials=len(kept),
            panel_size=config.panel_size,
            winner_counts=tuple(int(c) for c in winner_counts),
            per_class=tuple(per_class),
            conditioning=config.conditioning,
            config={
                **config.echo(),
                "master_seed": self._seed.master_seed,
                "stream_id": self._seed.stream_id,
            },
        )
        if violations := report.sandwich_violations():
            self.logger.warning("MPFB bounds do not bracket surprise for classes %s", violations)
        return report


def run_trials(config: TrialConfig, seed: RngSeed, threads: int = 1) -> SurpriseReport:
    """Run a configuration and return its report (blocking)."""
    return SurpriseEngine(config, seed, threads).run_trials_sync()


def compare_rules(
    config: TrialConfig,
    seed: RngSeed,
    rules: Sequence[RuleName] = (RuleName.PLURALITY, RuleName.BORDA, RuleName.VETO),
    threads: int = 1,
) -> dict[RuleName, SurpriseReport]:
    """Run one configuration under several preset rules with the same seed."""
    return {
        name: SurpriseEngine(config.with_rule(preset_rule(name, config.m)), seed, threads).run_trials_sync()
        for name in rules
    }


def brute_force_surprise(
    n: int,
    dist: ClassDistribution,
    p: ConnectionMatrix,
    phat: ConnectionMatrix,
    rule: ScoringRule,
    focus_class: int,
    tiebreak: tuple[int, ...] | None = None,
    conditioning: int | None = None,
) -> float:
    """
    Return the exact surprise probability of a voter in `focus_class`.

    Enumerates every class assignment of the other n - 1 voters and every
    pattern of edges incident to the voter; nothing else affects what she
    perceives. Two candidates and n <= 8 only.
    Ties favour the conditioned candidate unless `tiebreak` is given.
    """
    if dist.size != 2 or rule.m != 2:
        raise PreconditionFailed("exact enumeration supports two candidates only")
    if not 1 <= n <= BRUTE_FORCE_MAX_N:
        raise PreconditionFailed(f"n={n} is outside 1..{BRUTE_FORCE_MAX_N} for exact enumeration")
    if focus_class not in (0, 1):
        raise InvalidInput(f"focus_class={focus_class} must be 0 or 1")
    cs = class_system(2)
    for name, matrix in (("p", p), ("phat", phat)):
        cs.check_size(matrix.size, name)
    if tiebreak is None and conditioning is not None:
        tiebreak = favoring(2, conditioning)
    score_matrix = cs.score_matrix(rule.scores)
    eps = dist.eps
    row = p.p[focus_class]
    surprised = 0.0
    mass = 0.0
    for others in product((0, 1), repeat=n - 1):
        prob_assign = math.prod(eps[c] for c in others)
        if prob_assign == 0.0:
            continue
        counts = np.bincount([*others, focus_class], minlength=2)
        true_winner = winner(counts @ score_matrix, tiebreak)
        if conditioning is not None and true_winner != conditioning:
            continue
        mass += prob_assign
        for pattern in product((False, True), repeat=n - 1):
            prob_edges = math.prod(
                row[c] if linked else 1.0 - row[c]
                for c, linked in zip(others, pattern, strict=True)
            )
            if prob_edges == 0.0:
                continue
            nbr = np.bincount(
                [c for c, linked in zip(others, pattern, strict=True) if linked], minlength=2
            )
            scores = estimate_counts(nbr, focus_class, phat) @ score_matrix
            if winner(scores, tiebreak) != true_winner:
                surprised += prob_assign * prob_edges
    if mass == 0.0:
        raise PreconditionFailed(f"candidate {conditioning} can never be the true winner")
    return surprised / mass


def example1_graph(n: int) -> nx.Graph:
    """
    Return the structural two-half construction.

    Voters 0..n/2-1 form class 0, the rest class 1. Every voter is linked to
    her whole class and to every voter of the other class except her mirror
    (i and n/2 + i), leaving n/2 - 1 cross-class neighbours each.
    """
    if n < 2 or n % 2:
        raise InvalidInput(f"n={n} must be even and at least 2")
    half = n // 2
    graph = nx.Graph()
    graph.add_nodes_from(range(half), cls=0)
    graph.add_nodes_from(range(half, n), cls=1)
    graph.add_edges_from(nx.complete_graph(range(half)).edges())
    graph.add_edges_from(nx.complete_graph(range(half, n)).edges())
    graph.add_edges_from((i, half + j) for i in range(half) for j in range(half) if i != j)
    return graph


def example1_fixture(n: int, declared_winner: int = 0) -> Example1Result:
    """Perceive naively (phat = 1, plurality) on the two-half construction."""
    if declared_winner not in (0, 1):
        raise InvalidInput(f"declared_winner={declared_winner} must be 0 or 1")
    graph = example1_graph(n)
    sigma = np.array([graph.nodes[v]["cls"] for v in range(n)], dtype=np.int64)
    sample = ElectionSample.from_edges(sigma, 2, np.array(list(graph.edges()), dtype=np.int64))
    cs = class_system(2)
    phat = ConnectionMatrix.uniform(2, 1.0)
    rule = preset_rule(RuleName.PLURALITY, 2)
    perceived = np.array(
        [
            winner(true_scores(perceive_counts(sample, v, phat).estimates, rule, cs))
            for v in range(n)
        ],
        dtype=np.int64,
    )
    # each voter's own candidate is the favourite of her class
    own = cs.favorites[sigma]
    return Example1Result(
        sample=sample,
        declared_winner=declared_winner,
        perceived=perceived,
        all_perceive_own=bool(np.all(perceived == own)),
        surprised_fraction=float(np.mean(perceived != declared_winner)),
    )


def mpfb_empirical_ordering(
    report_plu: SurpriseReport,
    report_bor: SurpriseReport,
    report_vet: SurpriseReport,
    class_index: int,
) -> MpfbOrdering:
    """Order the MPFB factor of one class over the three rules, flagging CI overlap."""
    reports = {"Plu": report_plu, "Bor": report_bor, "Vet": report_vet}
    for name, report in reports.items():
        if report.rule != name_to_rule(name).value:
            raise InvalidInput(f"report for {name} was produced under rule {report.rule}")
    base = _without_rule(report_plu.config)
    for name, report in reports.items():
        if _without_rule(report.config) != base:
            raise InvalidInput(f"report for {name} comes from a different configuration")
    if not 0 <= class_index < len(report_plu.per_class):
        raise DimensionMismatch(f"class {class_index} outside 0..{len(report_plu.per_class) - 1}")
    entries = sorted(
        (
            (name, report.per_class[class_index].mpfb, report.per_class[class_index].mpfb_ci)
            for name, report in reports.items()
        ),
        key=lambda entry: entry[1],
    )
    inconclusive = any(
        hi[1] - lo[1] <= lo[2] + hi[2] for lo, hi in zip(entries, entries[1:], strict=False)
    )
    return MpfbOrdering(class_index=class_index, entries=tuple(entries), inconclusive=inconclusive)


def name_to_rule(short: str) -> RuleName:
    """Return the rule for a three letter name."""
    for rule in RuleName:
        if rule.short == short:
            return rule
    raise InvalidInput(f"unknown rule abbreviation `{short}`")


def _without_rule(config: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in config.items() if k not in ("rule", "scores")}
