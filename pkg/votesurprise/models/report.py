"""Model(s) for Monte Carlo results: trial outcomes and surprise reports."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from votesurprise.util import dump_json

from .sample import ElectionSample

CSV_FIELDS = (
    "class_index",
    "class_label",
    "rule",
    "challenger",
    "beat_prob",
    "beat_ci",
    "mpfb",
    "mpfb_ci",
    "surprise",
    "surprise_ci",
    "trials",
    "kept_trials",
    "panel_size",
)


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one trial for its panel of voters."""

    true_winner: int
    panel_classes: np.ndarray = field(compare=False)
    per_voter_perceived: np.ndarray = field(compare=False)

    @property
    def surprised(self) -> np.ndarray:
        """Return which panel voters perceive a winner other than the true one."""
        return self.per_voter_perceived != self.true_winner


@dataclass(frozen=True)
class ClassEstimate:
    """Surprise estimates for the voters of one class."""

    class_index: int
    class_label: str
    surprise: float
    surprise_ci: float
    # one entry per candidate: P(candidate beats the true winner)
    beat_probs: tuple[float, ...]
    beat_ci: tuple[float, ...]
    mpfb: float
    mpfb_ci: float
    mpfb_challenger: int
    # voters evaluated over all kept trials
    panel_voters: int


@dataclass(frozen=True)
class SurpriseReport:
    """
    Per-class surprise, beat probabilities and MPFB factors for one rule.

    `winner_counts[c]` counts the trials (before conditioning) in which
    candidate c was the true winner.
    """

    rule: str
    scores: tuple[float, ...]
    m: int
    eps: tuple[float, ...]
    trials: int
    kept_trials: int
    panel_size: int
    winner_counts: tuple[int, ...]
    per_class: tuple[ClassEstimate, ...]
    conditioning: int | None = None
    config: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def discarded(self) -> int:
        """Return the number of trials dropped by conditioning."""
        return self.trials - self.kept_trials

    @property
    def discard_rate(self) -> float:
        """Return the fraction of trials dropped by conditioning."""
        return self.discarded / self.trials

    @property
    def per_class_surprise(self) -> tuple[float, ...]:
        """Return the surprise estimate of every class."""
        return tuple(est.surprise for est in self.per_class)

    @property
    def mpfb(self) -> tuple[float, ...]:
        """Return the MPFB factor of every class."""
        return tuple(est.mpfb for est in self.per_class)

    @property
    def marginal_surprise(self) -> float:
        """Return the surprise of a uniformly drawn voter: eps-weighted class average."""
        return float(sum(e * est.surprise for e, est in zip(self.eps, self.per_class, strict=True)))

    @property
    def winner_constant(self) -> bool:
        """Return True when every kept trial had the same true winner."""
        return self.conditioning is not None or sum(1 for c in self.winner_counts if c) == 1

    def sandwich_violations(self, slack: float = 3.0) -> list[int]:
        """
        Return the classes breaking mpfb <= surprise <= (m-1) * mpfb.

        The upper bound needs a fixed true winner; with a varying winner the
        union bound over all candidates is checked instead. `slack` scales
        the combined CI half-widths.
        """
        violations = []
        for est in self.per_class:
            tol = slack * (est.surprise_ci + est.mpfb_ci)
            if self.winner_constant:
                upper = (self.m - 1) * est.mpfb
                tol += slack * (self.m - 1) * est.mpfb_ci
            else:
                upper = sum(est.beat_probs)
                tol += slack * sum(est.beat_ci)
            if est.mpfb > est.surprise + tol or est.surprise > upper + tol:
                violations.append(est.class_index)
        return violations

    def to_dict(self) -> dict[str, Any]:
        """Return a json friendly dict, including derived values."""
        return {
            "rule": self.rule,
            "scores": list(self.scores),
            "m": self.m,
            "eps": list(self.eps),
            "trials": self.trials,
            "kept_trials": self.kept_trials,
            "discard_rate": self.discard_rate,
            "panel_size": self.panel_size,
            "conditioning": self.conditioning,
            "winner_counts": list(self.winner_counts),
            "marginal_surprise": self.marginal_surprise,
            "per_class": list(self.per_class),
            "config": self.config,
        }

    def write_json(self, path: Path) -> None:
        """Write the report as json."""
        dump_json(self.to_dict(), path)

    def csv_rows(self) -> list[dict[str, Any]]:
        """Return one row per class and challenger."""
        rows = []
        for est in self.per_class:
            for challenger, (prob, ci) in enumerate(zip(est.beat_probs, est.beat_ci, strict=True)):
                rows.append(
                    {
                        "class_index": est.class_index,
                        "class_label": est.class_label,
                        "rule": self.rule,
                        "challenger": challenger,
                        "beat_prob": repr(float(prob)),
                        "beat_ci": repr(float(ci)),
                        "mpfb": repr(float(est.mpfb)),
                        "mpfb_ci": repr(float(est.mpfb_ci)),
                        "surprise": repr(float(est.surprise)),
                        "surprise_ci": repr(float(est.surprise_ci)),
                        "trials": self.trials,
                        "kept_trials": self.kept_trials,
                        "panel_size": self.panel_size,
                    }
                )
        return rows


def write_reports_csv(reports: list[SurpriseReport], path: Path) -> None:
    """Write the rows of one or more reports to a single csv file."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerows(report.csv_rows())


@dataclass(frozen=True)
class MpfbOrdering:
    """Ascending order of the MPFB factor of one class over several rules."""

    class_index: int
    # (rule short name, value, ci half-width), ascending by value
    entries: tuple[tuple[str, float, float], ...]
    inconclusive: bool

    @property
    def order(self) -> tuple[str, ...]:
        """Return the rule names, smallest MPFB first."""
        return tuple(name for name, _, _ in self.entries)

    @property
    def label(self) -> str:
        """Return e.g. `Plu<=Bor<=Vet`, suffixed when CIs overlap."""
        text = "<=".join(self.order)
        return f"{text} (inconclusive)" if self.inconclusive else text

    def value(self, name: str) -> float:
        """Return the MPFB value of a rule."""
        for entry_name, value, _ in self.entries:
            if entry_name == name:
                return value
        raise KeyError(name)


@dataclass(frozen=True)
class Example1Result:
    """Naive perception on the structural construction with two equal halves."""

    sample: ElectionSample = field(repr=False, compare=False)
    declared_winner: int
    perceived: np.ndarray = field(repr=False, compare=False)
    all_perceive_own: bool
    surprised_fraction: float
