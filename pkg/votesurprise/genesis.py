"""
Sampling of election realisations.

Class assignments are drawn from a numpy Generator; edges come from the
counter-based pair stream of `streams`, so a pair's coin is the same no
matter which part of the graph is being built.
"""

import logging
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import InvalidInput, SizingError
from .models.connection import ClassDistribution, ConnectionMatrix
from .models.sample import ElectionSample, GeoDecayParams, GeoVoter
from .streams import MAX_VOTERS, RngSeed, pair_uniforms
from .util import dump_json, load_json

LOGGER = logging.getLogger(__package__).getChild("genesis")

EARTH_RADIUS_KM = 6371.0
EDGES_FILE = "edges.txt"
SIDECAR_FILE = "sample.json"


def _generator(seed: RngSeed | np.random.Generator, *path: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return seed.generator(*path)


def _check_n(n: int) -> None:
    if n < 1:
        raise InvalidInput(f"n={n} must be at least 1")
    if n > MAX_VOTERS:
        raise InvalidInput(f"n={n} exceeds the supported {MAX_VOTERS} voters")


def sample_assignment(
    n: int, dist: ClassDistribution, seed: RngSeed | np.random.Generator, *path: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw n i.i.d. class indices from dist.

    Returns (sigma, counts) with counts[k] the number of voters in class k.
    """
    _check_n(n)
    rng = _generator(seed, *path)
    sigma = rng.choice(dist.size, size=n, p=dist.eps)
    return sigma.astype(np.int64), np.bincount(sigma, minlength=dist.size)


def _check_sigma(sigma: np.ndarray, num_classes: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.ndim != 1:
        raise InvalidInput("sigma must be a vector")
    _check_n(sigma.size)
    if sigma.min() < 0 or sigma.max() >= num_classes:
        raise InvalidInput(f"sigma holds class indices outside 0..{num_classes - 1}")
    return sigma


def sample_sbm_graph(
    sigma: np.ndarray, p: ConnectionMatrix, seed: RngSeed, *path: int
) -> ElectionSample:
    """Connect every pair u != v independently with probability p[sigma[u]][sigma[v]]."""
    sigma = _check_sigma(sigma, p.size)
    key = seed.pair_key(*path)
    n = sigma.size
    parts = []
    for u in range(n - 1):
        others = np.arange(u + 1, n)
        keep = pair_uniforms(key, u, others) < p.p[sigma[u], sigma[others]]
        if keep.any():
            parts.append(np.column_stack([np.full(keep.sum(), u), others[keep]]))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    LOGGER.debug("sampled %s edges over %s voters", len(edges), n)
    return ElectionSample.from_edges(sigma, p.size, edges)


def neighbor_class_counts(sample: ElectionSample, v: int) -> np.ndarray:
    """Return the number of v's neighbours in every class."""
    if not 0 <= v < sample.n:
        raise InvalidInput(f"voter {v} outside 0..{sample.n - 1}")
    return np.bincount(sample.sigma[sample.neighbors[v]], minlength=sample.num_classes)


def haversine_km(
    lat1: np.ndarray | float,
    lon1: np.ndarray | float,
    lat2: np.ndarray | float,
    lon2: np.ndarray | float,
) -> np.ndarray:
    """Return great-circle distances in km (mean earth radius)."""
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = np.sin(dlat / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2) ** 2
    return EARTH_RADIUS_KM * 2 * np.arctan2(np.sqrt(a), np.sqrt(1 - a))


def geo_edge_probability(
    distance_km: np.ndarray | float,
    same_class: np.ndarray | bool,
    p: float,
    q: float,
    decay: GeoDecayParams,
) -> np.ndarray:
    """Return (p1(d) + p2) / 2 with p1(d) = p1_max exp(-d / length) and p2 = p or q."""
    decay = decay.resolve(p)
    assert decay.p1_max is not None
    p1 = decay.p1_max * np.exp(-np.asarray(distance_km, dtype=np.float64) / decay.length_km)
    p2 = np.where(same_class, p, q)
    return (p1 + p2) / 2


def _check_geo(p: float, q: float) -> None:
    for name, value in (("p", p), ("q", q)):
        if not 0.0 < value <= 1.0:
            raise InvalidInput(f"{name}={value} must be in (0, 1]")
    if p < q:
        raise InvalidInput(f"p={p} must be at least q={q}")


def _voter_arrays(voters: list[GeoVoter]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not voters:
        raise InvalidInput("no voters")
    _check_n(len(voters))
    sigma = np.array([voter.class_index for voter in voters], dtype=np.int64)
    lat = np.array([voter.lat for voter in voters], dtype=np.float64)
    lon = np.array([voter.lon for voter in voters], dtype=np.float64)
    return sigma, lat, lon


def _keep_pairs(
    key: int,
    pairs: np.ndarray,
    sigma: np.ndarray,
    lat: np.ndarray,
    lon: np.ndarray,
    p: float,
    q: float,
    decay: GeoDecayParams,
) -> np.ndarray:
    u, v = pairs[:, 0], pairs[:, 1]
    dist = haversine_km(lat[u], lon[u], lat[v], lon[v])
    prob = geo_edge_probability(dist, sigma[u] == sigma[v], p, q, decay)
    return pairs[pair_uniforms(key, u, v) < prob]


def sample_geo_graph(
    voters: list[GeoVoter],
    p: float,
    q: float,
    decay: GeoDecayParams,
    seed: RngSeed,
    *path: int,
) -> ElectionSample:
    """Consider every pair once and connect it with the geo+class probability."""
    _check_geo(p, q)
    sigma, lat, lon = _voter_arrays(voters)
    key = seed.pair_key(*path)
    n = sigma.size
    parts = []
    for u in range(n - 1):
        others = np.arange(u + 1, n)
        pairs = np.column_stack([np.full(others.size, u), others])
        parts.append(_keep_pairs(key, pairs, sigma, lat, lon, p, q, decay))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    return ElectionSample.from_edges(sigma, max(2, int(sigma.max()) + 1), edges)


def sample_attempt_graph(
    voters: list[GeoVoter],
    p: float,
    q: float,
    decay: GeoDecayParams,
    attempts: int,
    seed: RngSeed,
    *path: int,
    max_pairs: int | None = None,
) -> ElectionSample:
    """
    Let every voter attempt `attempts` partners drawn without replacement.

    Attempted pairs are made undirected and deduplicated, then each is kept
    once with the geo+class probability.
    """
    _check_geo(p, q)
    if attempts < 1:
        raise InvalidInput(f"attempts={attempts} must be positive")
    sigma, lat, lon = _voter_arrays(voters)
    n = sigma.size
    k = min(attempts, n - 1)
    if max_pairs is not None and n * k > max_pairs:
        raise SizingError(
            f"{n} voters x {k} attempts exceeds the bound of {max_pairs} pairs",
            suggested_sample=max(2, max_pairs // k),
        )
    if k == 0:
        return ElectionSample.from_edges(sigma, 2, np.empty((0, 2), dtype=np.int64))
    rng = seed.generator(*path)
    partners = np.empty((n, k), dtype=np.int64)
    for u in range(n):
        drawn = rng.choice(n - 1, size=k, replace=False)
        # skip u itself
        partners[u] = drawn + (drawn >= u)
    src = np.repeat(np.arange(n), k)
    dst = partners.ravel()
    pairs = np.unique(np.column_stack([np.minimum(src, dst), np.maximum(src, dst)]), axis=0)
    edges = _keep_pairs(seed.pair_key(*path), pairs, sigma, lat, lon, p, q, decay)
    LOGGER.debug("%s attempted pairs, %s kept", len(pairs), len(edges))
    return ElectionSample.from_edges(sigma, max(2, int(sigma.max()) + 1), edges)


def dump_sample(sample: ElectionSample, directory: Path) -> None:
    """Write `edges.txt` ("u v" per line) plus a json sidecar with sigma and counts."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    nx.write_edgelist(sample.to_networkx(), directory / EDGES_FILE, data=False)
    dump_json(
        {"n": sample.n, "sigma": sample.sigma, "counts": sample.counts},
        directory / SIDECAR_FILE,
    )


def load_sample(directory: Path) -> ElectionSample:
    """Read a sample written by dump_sample."""
    directory = Path(directory)
    sidecar = load_json(directory / SIDECAR_FILE)
    try:
        graph = nx.read_edgelist(directory / EDGES_FILE, nodetype=int, data=False)
    except (OSError, TypeError, ValueError) as exc:
        raise InvalidInput(f"Unable to read edge list in {directory}: {exc}") from exc
    sigma = np.asarray(sidecar["sigma"], dtype=np.int64)
    if sigma.size != sidecar["n"]:
        raise InvalidInput(f"sidecar n={sidecar['n']} but sigma has {sigma.size} entries")
    edges = np.array(list(graph.edges()), dtype=np.int64).reshape(-1, 2)
    return ElectionSample.from_edges(sigma, len(sidecar["counts"]), edges)
