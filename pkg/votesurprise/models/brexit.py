"""Model(s) for the referendum pipeline."""

from dataclasses import dataclass, field, replace

from votesurprise.errors import InvalidInput

from .sample import GeoDecayParams

LEAVE = 0
REMAIN = 1
CLASS_NAMES = ("L", "R")
WEIGHT_TOLERANCE = 1e-12

PAPER_SAMPLE = 10_000
PAPER_ATTEMPTS = 500


@dataclass(frozen=True)
class RegionRecord:
    """Vote counts of one region plus its (possibly filled-in) centroid."""

    region_id: str
    leave_count: int
    remain_count: int
    lat: float | None = None
    lon: float | None = None
    # False when the centroid was filled in from all located regions
    located: bool = True

    def __post_init__(self) -> None:
        """Validate counts."""
        if self.leave_count < 0 or self.remain_count < 0:
            raise InvalidInput(f"region {self.region_id}: counts must be non-negative")
        if self.leave_count + self.remain_count == 0:
            raise InvalidInput(f"region {self.region_id}: no votes")

    @property
    def total(self) -> int:
        """Return the number of votes in the region."""
        return self.leave_count + self.remain_count


@dataclass(frozen=True)
class CoverageReport:
    """What ingestion could and could not match."""

    regions: int
    located: int
    filled: tuple[str, ...]
    malformed_rows: tuple[str, ...] = ()

    @property
    def missing_fraction(self) -> float:
        """Return the share of regions without a location match."""
        return len(self.filled) / self.regions if self.regions else 0.0


@dataclass(frozen=True)
class ObservationMix:
    """Weights of the private and the global observation, plus global noise scale."""

    w_I: float
    w_G: float
    bias: float = 0.0

    def __post_init__(self) -> None:
        """Validate weights and bias."""
        for name in ("w_I", "w_G"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidInput(f"{name}={value} must be in [0, 1]")
        if abs(self.w_I + self.w_G - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidInput(f"w_I + w_G = {self.w_I + self.w_G}, expected 1")
        if self.bias < 0:
            raise InvalidInput(f"bias={self.bias} must be non-negative")

    @classmethod
    def from_global_weight(cls, w_G: float, bias: float = 0.0) -> "ObservationMix":
        """Return the mix with w_I = 1 - w_G."""
        if not 0.0 <= w_G <= 1.0:
            raise InvalidInput(f"w_G={w_G} must be in [0, 1]")
        return cls(w_I=1.0 - w_G, w_G=w_G, bias=bias)


@dataclass(frozen=True)
class CurvePoint:
    """Surprised share of the minority class at one grid point."""

    p: float
    q: float
    bias: float
    w_G: float
    surprised_fraction: float
    ci_halfwidth: float
    trials: int

    def __post_init__(self) -> None:
        """Validate the fraction."""
        if not 0.0 <= self.surprised_fraction <= 1.0:
            raise InvalidInput(f"surprised_fraction={self.surprised_fraction} outside [0, 1]")


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one referendum sweep."""

    p: float = 0.4
    q: float = 0.2
    bias_grid: tuple[float, ...] = (0.0, 0.05, 0.1)
    wg_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    sample_size: int = 2000
    attempts: int = 100
    trials: int = 20
    decay: GeoDecayParams = field(default_factory=GeoDecayParams)
    # one noisy global view for all voters of a trial instead of one per voter
    shared_noise: bool = False
    tiebreak: tuple[int, ...] = (LEAVE, REMAIN)
    # upper bound on attempted pairs held in memory at once
    max_pairs: int = 20_000_000

    def __post_init__(self) -> None:
        """Validate the sweep, naming the offending field."""
        for name in ("p", "q"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidInput(f"{name}={value} must be in (0, 1]")
        if self.p < self.q:
            raise InvalidInput(f"p={self.p} must be at least q={self.q}")
        if not self.bias_grid:
            raise InvalidInput("bias_grid is empty")
        if not self.wg_grid:
            raise InvalidInput("wg_grid is empty")
        for bias in self.bias_grid:
            if bias < 0:
                raise InvalidInput(f"bias_grid holds negative bias {bias}")
        for w_G in self.wg_grid:
            if not 0.0 <= w_G <= 1.0:
                raise InvalidInput(f"wg_grid holds w_G={w_G} outside [0, 1]")
        for name in ("sample_size", "attempts", "trials", "max_pairs"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name}={getattr(self, name)} must be positive")
        if sorted(self.tiebreak) != [LEAVE, REMAIN]:
            raise InvalidInput(f"tiebreak={self.tiebreak} must order both outcomes")

    @property
    def attempted_pairs(self) -> int:
        """Return the number of attempted pairs per trial."""
        return self.sample_size * min(self.attempts, self.sample_size - 1)

    def paper_scale(self) -> "SweepConfig":
        """Return this config at the published sample size and attempt count."""
        return replace(self, sample_size=PAPER_SAMPLE, attempts=PAPER_ATTEMPTS)
