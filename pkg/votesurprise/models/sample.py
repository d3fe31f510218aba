"""Model(s) for sampled elections and geo-located voters."""

from dataclasses import dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np

from votesurprise.errors import DimensionMismatch, InvalidInput


@dataclass(frozen=True)
class ElectionSample:
    """
    One realisation of an election: class assignment plus social graph.

    `neighbors[v]` is the sorted array of v's neighbours; the graph is
    undirected and free of self-loops.
    """

    n: int
    sigma: np.ndarray = field(repr=False, compare=False)
    counts: np.ndarray = field(compare=False)
    neighbors: tuple[np.ndarray, ...] = field(repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate the assignment against the counts and the adjacency."""
        if self.sigma.shape != (self.n,):
            raise DimensionMismatch(f"sigma has shape {self.sigma.shape}, expected ({self.n},)")
        if len(self.neighbors) != self.n:
            raise DimensionMismatch(f"{len(self.neighbors)} neighbour lists for n={self.n}")
        counts = np.bincount(self.sigma, minlength=self.counts.size)
        if counts.size != self.counts.size or np.any(counts != self.counts):
            raise InvalidInput("counts do not match sigma")

    @classmethod
    def from_edges(
        cls, sigma: np.ndarray, num_classes: int, edges: np.ndarray
    ) -> "ElectionSample":
        """Build a sample from an (E, 2) array of undirected edges."""
        sigma = np.asarray(sigma, dtype=np.int64)
        n = int(sigma.size)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise InvalidInput(f"edge endpoint outside 0..{n - 1}")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise InvalidInput("self-loops are not allowed")
        if np.any(sigma < 0) or np.any(sigma >= num_classes):
            raise InvalidInput(f"sigma holds class indices outside 0..{num_classes - 1}")
        both = np.concatenate([edges, edges[:, ::-1]])
        # sort by (source, target) and dedupe, then cut per source vertex
        both = np.unique(both, axis=0)
        bounds = np.searchsorted(both[:, 0], np.arange(n + 1))
        neighbors = tuple(
            _readonly(both[bounds[v] : bounds[v + 1], 1]) for v in range(n)
        )
        counts = np.bincount(sigma, minlength=num_classes)
        return cls(n=n, sigma=_readonly(sigma), counts=_readonly(counts), neighbors=neighbors)

    @property
    def num_classes(self) -> int:
        """Return the size of the class index space."""
        return int(self.counts.size)

    def degree(self, v: int | None = None) -> np.ndarray | int:
        """Return the degree of v, or the degree vector when v is None."""
        if v is None:
            return np.array([nbrs.size for nbrs in self.neighbors], dtype=np.int64)
        return int(self.neighbors[v].size)

    @cached_property
    def edges(self) -> np.ndarray:
        """Return the (E, 2) array of edges with u < v, sorted."""
        parts = [
            np.column_stack([np.full(nbrs.size, u), nbrs])[nbrs > u]
            for u, nbrs in enumerate(self.neighbors)
        ]
        if not parts:
            return np.empty((0, 2), dtype=np.int64)
        return np.concatenate(parts).astype(np.int64)

    @property
    def edge_count(self) -> int:
        """Return |E|."""
        return int(self.edges.shape[0])

    def to_networkx(self) -> nx.Graph:
        """Return the graph with a `cls` attribute per node."""
        graph = nx.Graph()
        graph.add_nodes_from((v, {"cls": int(k)}) for v, k in enumerate(self.sigma))
        graph.add_edges_from(map(tuple, self.edges.tolist()))
        return graph


def _readonly(values: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values)
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class GeoVoter:
    """A voter of the empirical model: class plus location in degrees."""

    class_index: int
    lat: float
    lon: float

    def __post_init__(self) -> None:
        """Validate coordinates."""
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidInput(f"lat={self.lat} must be in [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidInput(f"lon={self.lon} must be in [-180, 180]")
        if self.class_index < 0:
            raise InvalidInput(f"class_index={self.class_index} must be non-negative")


@dataclass(frozen=True)
class GeoDecayParams:
    """
    Distance decay of the geographic connection term.

    p1(d) = p1_max * exp(-d / length_km); p1_max defaults to the same-class
    probability p when left unset.
    """

    p1_max: float | None = None
    length_km: float = 100.0

    def __post_init__(self) -> None:
        """Validate parameters."""
        if self.p1_max is not None and not 0.0 < self.p1_max <= 1.0:
            raise InvalidInput(f"p1_max={self.p1_max} must be in (0, 1]")
        if not self.length_km > 0:
            raise InvalidInput(f"length_km={self.length_km} must be positive")

    def resolve(self, p: float) -> "GeoDecayParams":
        """Return params with p1_max filled in from p."""
        if self.p1_max is not None:
            return self
        return GeoDecayParams(p1_max=p, length_km=self.length_km)


@dataclass(frozen=True)
class PerceivedCounts:
    """A voter's estimated number of voters in every class."""

    voter: int
    own_class: int
    estimates: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        """Validate the estimates."""
        if not np.all(np.isfinite(self.estimates)) or np.any(self.estimates < 0):
            raise InvalidInput(f"voter {self.voter}: estimates must be finite and non-negative")
        if self.estimates[self.own_class] < 1:
            raise InvalidInput(f"voter {self.voter}: own class estimate below the self-count")
