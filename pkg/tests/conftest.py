"""Shared fixtures."""

import numpy as np
import pytest

from votesurprise.brexit import ingest
from votesurprise.models.connection import ClassDistribution, ConnectionMatrix
from votesurprise.models.scoring import RuleName, preset_rule
from votesurprise.streams import RngSeed

from tests.common import fixture_path


@pytest.fixture
def seed():
    """Return a fixed run seed."""
    return RngSeed(20240623)


@pytest.fixture
def plurality2():
    """Return plurality over two candidates."""
    return preset_rule(RuleName.PLURALITY, 2)


@pytest.fixture
def two_candidate_model():
    """Return (dist, p) of a lopsided two-candidate election."""
    dist = ClassDistribution.two_candidate(0.05)
    p = ConnectionMatrix(np.array([[0.4, 0.2], [0.2, 0.4]]))
    return dist, p


@pytest.fixture(scope="session")
def referendum():
    """Return the ingested referendum fixture."""
    return ingest(fixture_path("votes.csv"), fixture_path("locations.csv"))
