"""
Referendum pipeline: region counts in, surprise curves of the minority out.

A sub-election is sampled from the national vote, voters sit at their
region's centroid and connect through `genesis.sample_attempt_graph`. Each
voter mixes what her neighbourhood shows with a noisy view of the global
outcome and calls the larger side the winner.
"""

import asyncio
from collections import defaultdict
from collections.abc import Sequence
import csv
from dataclasses import dataclass
import logging
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInput, MalformedInput, SizingError
from .genesis import sample_attempt_graph
from .models.brexit import (
    CLASS_NAMES,
    LEAVE,
    REMAIN,
    CoverageReport,
    CurvePoint,
    ObservationMix,
    RegionRecord,
    SweepConfig,
)
from .models.sample import ElectionSample, GeoVoter
from .perception import winners
from .runner import run_jobs
from .streams import RngSeed

LOGGER = logging.getLogger(__package__).getChild("brexit")

VOTES_HEADER = ("region", "leave", "remain")
LOCATIONS_HEADER = ("town", "region", "lat", "lon")
CURVE_HEADER = ("p", "q", "bias", "w_G", "surprised_fraction", "ci", "trials")
MAX_MALFORMED = 0.05
MAX_REJECTIONS = 10_000
Z_95 = 1.959963984540054

# stream ids under the run seed
SUBELECTION_STREAM = 1
GRAPH_STREAM = 2
NOISE_STREAM = 3


def _read_rows(path: Path, header: Sequence[str]) -> list[dict[str, str]]:
    try:
        with Path(path).open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = set(header) - set(reader.fieldnames or ())
            if missing:
                raise MalformedInput(f"{path}: missing column(s) {', '.join(sorted(missing))}")
            return list(reader)
    except OSError as exc:
        raise InvalidInput(f"Unable to read {path}: {exc}") from exc


def _check_malformed(path: Path, errors: list[str], rows: int) -> None:
    if errors:
        LOGGER.warning("%s: %s of %s rows malformed", path, len(errors), rows)
    if rows and len(errors) / rows > MAX_MALFORMED:
        raise MalformedInput(
            f"{path}: {len(errors)} of {rows} rows malformed (limit {MAX_MALFORMED:.0%})",
            row_errors=errors,
        )


def _parse_votes(path: Path) -> tuple[dict[str, tuple[int, int]], list[str]]:
    rows = _read_rows(path, VOTES_HEADER)
    if not rows:
        raise MalformedInput(f"{path}: no vote rows")
    counts: dict[str, tuple[int, int]] = {}
    errors: list[str] = []
    # header is line 1
    for line, row in enumerate(rows, start=2):
        region = (row.get("region") or "").strip()
        try:
            leave = int(row["leave"])
            remain = int(row["remain"])
        except (TypeError, ValueError):
            errors.append(f"{path}:{line}: counts {row.get('leave')!r}, {row.get('remain')!r} are not integers")
            continue
        if not region:
            errors.append(f"{path}:{line}: empty region")
        elif leave < 0 or remain < 0 or leave + remain == 0:
            errors.append(f"{path}:{line}: counts ({leave}, {remain}) must be non-negative, not both 0")
        elif region in counts:
            errors.append(f"{path}:{line}: duplicate region {region}")
        else:
            counts[region] = (leave, remain)
    _check_malformed(path, errors, len(rows))
    return counts, errors


def _parse_locations(path: Path) -> tuple[dict[str, list[tuple[float, float]]], list[str]]:
    rows = _read_rows(path, LOCATIONS_HEADER)
    towns: dict[str, list[tuple[float, float]]] = defaultdict(list)
    errors: list[str] = []
    for line, row in enumerate(rows, start=2):
        region = (row.get("region") or "").strip()
        try:
            lat = float(row["lat"])
            lon = float(row["lon"])
        except (TypeError, ValueError):
            errors.append(f"{path}:{line}: coordinates {row.get('lat')!r}, {row.get('lon')!r} are not numbers")
            continue
        if not region:
            errors.append(f"{path}:{line}: empty region")
        elif not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            errors.append(f"{path}:{line}: ({lat}, {lon}) is not a valid location")
        else:
            towns[region].append((lat, lon))
    _check_malformed(path, errors, len(rows))
    return towns, errors


def ingest(votes_csv: Path, locations_csv: Path) -> tuple[list[RegionRecord], CoverageReport]:
    """
    Read region counts and town locations.

    A region's location is the mean of its towns; regions without towns get
    the mean of all located regions and are listed in the coverage report.
    """
    counts, vote_errors = _parse_votes(votes_csv)
    towns, location_errors = _parse_locations(locations_csv)
    centroids = {
        region: (
            float(np.mean([lat for lat, _ in towns[region]])),
            float(np.mean([lon for _, lon in towns[region]])),
        )
        for region in counts
        if towns.get(region)
    }
    if not centroids:
        raise InvalidInput("no region of the votes file has a location")
    fill_lat = float(np.mean([lat for lat, _ in centroids.values()]))
    fill_lon = float(np.mean([lon for _, lon in centroids.values()]))
    records = []
    filled = []
    for region, (leave, remain) in counts.items():
        located = region in centroids
        lat, lon = centroids[region] if located else (fill_lat, fill_lon)
        if not located:
            filled.append(region)
        records.append(RegionRecord(region, leave, remain, lat, lon, located=located))
    coverage = CoverageReport(
        regions=len(records),
        located=len(centroids),
        filled=tuple(filled),
        malformed_rows=tuple(vote_errors + location_errors),
    )
    if filled:
        LOGGER.warning(
            "%s of %s regions (%.1f%%) have no location, using the centroid of the rest",
            len(filled),
            len(records),
            100 * coverage.missing_fraction,
        )
    return records, coverage


def sample_subelection(
    records: Sequence[RegionRecord],
    sample_size: int,
    seed: RngSeed | np.random.Generator,
    *path: int,
) -> list[GeoVoter]:
    """Draw sample_size votes without replacement and place them at their region."""
    if not records:
        raise InvalidInput("no regions")
    colors = np.array([[r.leave_count, r.remain_count] for r in records], dtype=np.int64)
    total = int(colors.sum())
    if not 1 <= sample_size <= total:
        raise InvalidInput(f"sample_size={sample_size} must be in 1..{total}")
    rng = seed if isinstance(seed, np.random.Generator) else seed.generator(*path)
    drawn = rng.multivariate_hypergeometric(colors.ravel(), sample_size).reshape(colors.shape)
    voters = []
    for record, (leave, remain) in zip(records, drawn, strict=True):
        if record.lat is None or record.lon is None:
            raise InvalidInput(f"region {record.region_id} has no location")
        voters.extend([GeoVoter(LEAVE, record.lat, record.lon)] * int(leave))
        voters.extend([GeoVoter(REMAIN, record.lat, record.lon)] * int(remain))
    return voters


def noisy_global(
    true_dist: Sequence[float] | np.ndarray,
    bias: float,
    seed: RngSeed | np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """
    Perturb the first component by Normal(0, bias), redrawing until it lies in [0, 1].

    Returns a 2-vector, or a (size, 2) array of independent draws. Every
    round draws a full batch of normals, so runs with different bias read
    the same normals in the same places.
    """
    dist = np.asarray(true_dist, dtype=np.float64)
    if dist.shape != (2,) or np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-12:
        raise InvalidInput(f"{dist.tolist()} is not a distribution over two outcomes")
    if bias < 0:
        raise InvalidInput(f"bias={bias} must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else seed.generator(NOISE_STREAM)
    count = 1 if size is None else size
    first = np.full(count, dist[0])
    pending = np.ones(count, dtype=bool)
    rejected = 0
    for _ in range(MAX_REJECTIONS):
        z = rng.standard_normal(count)
        candidate = dist[0] + bias * z
        ok = pending & (candidate >= 0.0) & (candidate <= 1.0)
        first[ok] = candidate[ok]
        pending &= ~ok
        if not pending.any():
            break
        rejected += int(pending.sum())
    else:
        raise InvalidInput(f"bias={bias} too large to keep {dist[0]} inside [0, 1]")
    if rejected:
        LOGGER.debug("truncated normal rejected %s draws", rejected)
    noisy = np.column_stack([first, 1.0 - first])
    return noisy[0] if size is None else noisy


def perceive_mixed(
    neighbor_dist: np.ndarray | Sequence[float],
    noisy_global_dist: np.ndarray | Sequence[float],
    mix: ObservationMix,
    tiebreak: Sequence[int] = (LEAVE, REMAIN),
) -> np.ndarray | int:
    """
    Return the outcome with more mass in w_I * neighbourhood + w_G * global.

    Accepts single 2-vectors or one row per voter.
    """
    mixed = mix.w_I * np.asarray(neighbor_dist, dtype=np.float64) + mix.w_G * np.asarray(
        noisy_global_dist, dtype=np.float64
    )
    result = winners(mixed, tiebreak)
    return int(result) if np.ndim(result) == 0 else result


def neighborhood_dist(sample: ElectionSample) -> np.ndarray:
    """Return every voter's (L, R) shares over her neighbours and herself."""
    counts = np.zeros((sample.n, 2), dtype=np.float64)
    counts[np.arange(sample.n), sample.sigma] = 1.0
    edges = sample.edges
    np.add.at(counts, (edges[:, 0], sample.sigma[edges[:, 1]]), 1.0)
    np.add.at(counts, (edges[:, 1], sample.sigma[edges[:, 0]]), 1.0)
    return counts / counts.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class _Sweep:
    sweep: SweepConfig
    voters: list[GeoVoter]
    seed: RngSeed
    true_dist: np.ndarray
    majority: int


def _sweep_trial(job: tuple[_Sweep, int]) -> np.ndarray:
    """Return the surprised minority share for every (bias, w_G) in one trial."""
    ctx, trial = job
    sweep = ctx.sweep
    sample = sample_attempt_graph(
        ctx.voters,
        sweep.p,
        sweep.q,
        sweep.decay,
        sweep.attempts,
        ctx.seed,
        GRAPH_STREAM,
        trial,
        max_pairs=sweep.max_pairs,
    )
    minority = np.flatnonzero(sample.sigma != ctx.majority)
    local = neighborhood_dist(sample)[minority]
    shares = np.zeros((len(sweep.bias_grid), len(sweep.wg_grid)))
    if minority.size == 0:
        return shares
    for i, bias in enumerate(sweep.bias_grid):
        # a fresh generator per bias: every bias sees the same normals
        rng = ctx.seed.generator(NOISE_STREAM, trial)
        size = 1 if sweep.shared_noise else minority.size
        global_view = noisy_global(ctx.true_dist, bias, rng, size=size)
        for j, w_G in enumerate(sweep.wg_grid):
            mix = ObservationMix.from_global_weight(w_G, bias)
            perceived = perceive_mixed(local, global_view, mix, sweep.tiebreak)
            shares[i, j] = float(np.mean(perceived != ctx.majority))
    return shares


async def run_sweep(
    records: Sequence[RegionRecord],
    sweep: SweepConfig,
    seed: RngSeed,
    threads: int = 1,
) -> list[CurvePoint]:
    """
    Sweep bias and w_G over one sampled sub-election.

    Graphs and noise depend on (seed, trial) only, so every grid point of a
    trial sees the same network and the same normals.
    """
    total = sum(r.total for r in records)
    if sweep.sample_size > total:
        raise SizingError(
            f"sample_size={sweep.sample_size} exceeds the {total} votes available",
            suggested_sample=total,
        )
    if sweep.attempted_pairs > sweep.max_pairs:
        raise SizingError(
            f"{sweep.attempted_pairs} attempted pairs exceed the bound of {sweep.max_pairs}",
            suggested_sample=max(2, sweep.max_pairs // sweep.attempts),
        )
    voters = sample_subelection(records, sweep.sample_size, seed, SUBELECTION_STREAM)
    sigma = np.array([v.class_index for v in voters])
    true_dist = np.bincount(sigma, minlength=2) / sigma.size
    majority = int(winners(true_dist, sweep.tiebreak))
    LOGGER.info(
        "sub-election of %s voters: %s %.4f, %s %.4f; minority %s",
        sigma.size,
        CLASS_NAMES[LEAVE],
        true_dist[LEAVE],
        CLASS_NAMES[REMAIN],
        true_dist[REMAIN],
        CLASS_NAMES[1 - majority],
    )
    ctx = _Sweep(sweep, voters, seed, true_dist, majority)
    per_trial = await run_jobs(_sweep_trial, [(ctx, t) for t in range(sweep.trials)], threads)
    stacked = np.stack(per_trial)
    mean = stacked.mean(axis=0)
    spread = stacked.std(axis=0, ddof=1) if sweep.trials > 1 else np.zeros_like(mean)
    ci = Z_95 * spread / math.sqrt(sweep.trials)
    return [
        CurvePoint(
            p=sweep.p,
            q=sweep.q,
            bias=bias,
            w_G=w_G,
            surprised_fraction=float(np.clip(mean[i, j], 0.0, 1.0)),
            ci_halfwidth=float(ci[i, j]),
            trials=sweep.trials,
        )
        for i, bias in enumerate(sweep.bias_grid)
        for j, w_G in enumerate(sweep.wg_grid)
    ]


def run_sweep_sync(
    records: Sequence[RegionRecord], sweep: SweepConfig, seed: RngSeed, threads: int = 1
) -> list[CurvePoint]:
    """Blocking variant of run_sweep."""
    return asyncio.run(run_sweep(records, sweep, seed, threads))


def write_curve_csv(points: Sequence[CurvePoint], path: Path) -> None:
    """Write curve points as `p,q,bias,w_G,surprised_fraction,ci,trials`."""
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for point in points:
            writer.writerow(
                [
                    repr(float(point.p)),
                    repr(float(point.q)),
                    repr(float(point.bias)),
                    repr(float(point.w_G)),
                    repr(float(point.surprised_fraction)),
                    repr(float(point.ci_halfwidth)),
                    point.trials,
                ]
            )
