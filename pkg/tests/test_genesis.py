"""Test sampling of assignments and graphs."""

import numpy as np
import pytest
from scipy import stats

from votesurprise.errors import InvalidInput, SizingError
from votesurprise.genesis import (
    dump_sample,
    geo_edge_probability,
    haversine_km,
    load_sample,
    neighbor_class_counts,
    sample_assignment,
    sample_attempt_graph,
    sample_geo_graph,
    sample_sbm_graph,
)
from votesurprise.models.connection import ClassDistribution, ConnectionMatrix
from votesurprise.models.sample import ElectionSample, GeoDecayParams, GeoVoter


def test_assignment_is_seeded(seed):
    """Test that an assignment only depends on the seed and path."""
    dist = ClassDistribution(np.array([0.7, 0.3]))
    sigma, counts = sample_assignment(20_000, dist, seed, 1)
    again, _ = sample_assignment(20_000, dist, seed, 1)
    other, _ = sample_assignment(20_000, dist, seed, 2)
    assert np.array_equal(sigma, again)
    assert not np.array_equal(sigma, other)
    assert counts.sum() == 20_000
    assert np.array_equal(counts, np.bincount(sigma, minlength=2))
    assert stats.binomtest(int(counts[0]), 20_000, 0.7).pvalue > 1e-4
    with pytest.raises(InvalidInput):
        sample_assignment(0, dist, seed)


def test_sbm_graph(seed):
    """Test structure and edge density of the block model."""
    sigma = np.repeat([0, 1], 200)
    p = ConnectionMatrix(np.array([[0.15, 0.05], [0.05, 0.15]]))
    sample = sample_sbm_graph(sigma, p, seed, 0)
    edges = sample.edges
    assert np.all(edges[:, 0] < edges[:, 1])
    graph = sample.to_networkx()
    assert graph.number_of_nodes() == 400
    assert graph.number_of_edges() == sample.edge_count
    assert nx_no_self_loops(graph)
    same = sigma[edges[:, 0]] == sigma[edges[:, 1]]
    within_pairs = 2 * (200 * 199 // 2)
    across_pairs = 200 * 200
    assert stats.binomtest(int(same.sum()), within_pairs, 0.15).pvalue > 1e-4
    assert stats.binomtest(int((~same).sum()), across_pairs, 0.05).pvalue > 1e-4
    # neighbour lists are symmetric
    for u, v in edges[:50]:
        assert u in sample.neighbors[v]
        assert v in sample.neighbors[u]
    assert neighbor_class_counts(sample, 0).sum() == sample.degree(0)
    assert np.array_equal(sample_sbm_graph(sigma, p, seed, 0).edges, edges)


def nx_no_self_loops(graph) -> bool:
    """Return True when no node links to itself."""
    return all(u != v for u, v in graph.edges())


def test_sample_validation():
    """Test that self-loops and bad endpoints are rejected."""
    sigma = np.array([0, 1, 1])
    with pytest.raises(InvalidInput):
        ElectionSample.from_edges(sigma, 2, np.array([[0, 0]]))
    with pytest.raises(InvalidInput):
        ElectionSample.from_edges(sigma, 2, np.array([[0, 3]]))
    with pytest.raises(InvalidInput):
        ElectionSample.from_edges(sigma, 1, np.empty((0, 2)))
    sample = ElectionSample.from_edges(sigma, 2, np.array([[0, 1], [1, 0], [2, 1]]))
    assert sample.edge_count == 2
    assert sample.degree().tolist() == [1, 2, 1]


def test_haversine():
    """Test great-circle distances."""
    assert haversine_km(51.5074, -0.1278, 48.8566, 2.3522) == pytest.approx(343.5, abs=2.0)
    assert haversine_km(10.0, 10.0, 10.0, 10.0) == pytest.approx(0.0)
    # a quarter of a meridian
    assert haversine_km(0.0, 0.0, 90.0, 0.0) == pytest.approx(np.pi * 6371.0 / 2)


def test_geo_edge_probability():
    """Test the mix of distance decay and class term."""
    decay = GeoDecayParams(length_km=100.0)
    assert geo_edge_probability(0.0, True, 0.4, 0.2, decay) == pytest.approx(0.4)
    assert geo_edge_probability(0.0, False, 0.4, 0.2, decay) == pytest.approx(0.3)
    assert geo_edge_probability(100.0, False, 0.4, 0.2, decay) == pytest.approx(
        (0.4 * np.exp(-1.0) + 0.2) / 2
    )
    assert geo_edge_probability(1e6, True, 0.4, 0.2, decay) == pytest.approx(0.2)
    capped = GeoDecayParams(p1_max=0.1, length_km=50.0)
    assert geo_edge_probability(0.0, True, 0.4, 0.2, capped) == pytest.approx(0.25)
    with pytest.raises(InvalidInput):
        GeoDecayParams(length_km=0.0)


def _voters(n: int) -> list[GeoVoter]:
    rng = np.random.default_rng(3)
    return [
        GeoVoter(int(c), float(lat), float(lon))
        for c, lat, lon in zip(
            rng.integers(0, 2, n), rng.uniform(50, 55, n), rng.uniform(-3, 1, n), strict=True
        )
    ]


def test_attempt_graph(seed):
    """Test that certain links keep every attempted pair."""
    voters = [GeoVoter(v % 2, 52.0, -1.0) for v in range(50)]
    sure = GeoDecayParams(p1_max=1.0)
    sample = sample_attempt_graph(voters, 1.0, 1.0, sure, 5, seed, 0)
    assert np.all(sample.degree() >= 5)
    assert sample.edge_count <= 50 * 5
    again = sample_attempt_graph(voters, 1.0, 1.0, sure, 5, seed, 0)
    assert np.array_equal(sample.edges, again.edges)
    # more attempts than voters: everybody tries everybody
    full = sample_attempt_graph(voters[:6], 1.0, 1.0, sure, 100, seed, 0)
    assert full.edge_count == 15
    with pytest.raises(SizingError) as err:
        sample_attempt_graph(voters, 0.4, 0.2, sure, 5, seed, 0, max_pairs=100)
    assert err.value.suggested_sample == 20
    with pytest.raises(InvalidInput):
        sample_attempt_graph(voters, 0.2, 0.4, sure, 5, seed, 0)


def test_geo_graph_is_subset_of_pair_stream(seed):
    """Test that the full geo graph and the attempt graph share pair coins."""
    voters = _voters(60)
    decay = GeoDecayParams()
    full = sample_geo_graph(voters, 0.4, 0.2, decay, seed, 9)
    attempted = sample_attempt_graph(voters, 0.4, 0.2, decay, 10, seed, 9)
    full_edges = {tuple(e) for e in full.edges.tolist()}
    assert all(tuple(e) in full_edges for e in attempted.edges.tolist())


def test_dump_and_load(tmp_path, seed):
    """Test the edge list plus sidecar format."""
    sigma = np.array([0, 1, 1, 0, 1])
    sample = sample_sbm_graph(sigma, ConnectionMatrix.uniform(2, 0.6), seed, 1)
    dump_sample(sample, tmp_path)
    assert (tmp_path / "edges.txt").exists()
    loaded = load_sample(tmp_path)
    assert np.array_equal(loaded.sigma, sample.sigma)
    assert np.array_equal(loaded.edges, sample.edges)
