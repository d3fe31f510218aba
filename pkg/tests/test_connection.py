"""Test class distributions, connection matrices and model files."""

import json

import numpy as np
import pytest

from votesurprise.errors import DimensionMismatch, InvalidInput
from votesurprise.models.connection import (
    ClassDistribution,
    ConnectionMatrix,
    is_regular,
    load_model_file,
    satisfies_mee,
)
from votesurprise.models.preference import build_class_system

from tests.common import fixture_path


def test_class_distribution():
    """Test validation of eps."""
    assert ClassDistribution.two_candidate(0.1).eps.tolist() == pytest.approx([0.6, 0.4])
    assert ClassDistribution.uniform(6).size == 6
    with pytest.raises(InvalidInput, match="sums to"):
        ClassDistribution(np.array([0.5, 0.4]))
    with pytest.raises(InvalidInput):
        ClassDistribution(np.array([1.2, -0.2]))
    with pytest.raises(InvalidInput):
        ClassDistribution.two_candidate(0.6)
    dist = ClassDistribution(np.array([0.3, 0.7]))
    with pytest.raises(ValueError):
        dist.eps[0] = 0.5


def test_connection_matrix_validation():
    """Test that zero, out of range and asymmetric entries are named."""
    with pytest.raises(InvalidInput, match=r"p\[0\]\[1\]=0.0"):
        ConnectionMatrix(np.array([[0.5, 0.0], [0.0, 0.5]]))
    with pytest.raises(InvalidInput, match="differs"):
        ConnectionMatrix(np.array([[0.5, 0.2], [0.3, 0.5]]))
    with pytest.raises(InvalidInput, match="square"):
        ConnectionMatrix(np.ones((2, 3)) * 0.5)
    p = ConnectionMatrix.two_level(2, 0.4, 0.1)
    assert p[0, 0] == 0.4
    assert p[1, 0] == 0.1
    assert p.size == 2


def test_regular_and_mee():
    """Test monotonicity in KT distance."""
    cs = build_class_system(3)
    p = ConnectionMatrix.from_kt(cs, 0.8)
    assert is_regular(p, cs, strict=True)
    assert is_regular(ConnectionMatrix.uniform(6, 0.3), cs)
    assert not is_regular(ConnectionMatrix.uniform(6, 0.3), cs, strict=True)
    assert not is_regular(ConnectionMatrix.two_level(6, 0.1, 0.4), cs)
    # a uniform estimate keeps the error monotone
    assert satisfies_mee(p, ConnectionMatrix.uniform(6, 0.5), cs, strict=True)
    # estimating p exactly gives a flat error
    assert satisfies_mee(p, p, cs)
    assert not satisfies_mee(ConnectionMatrix.uniform(6, 0.5), p, cs)
    with pytest.raises(DimensionMismatch):
        is_regular(ConnectionMatrix.uniform(2, 0.5), cs)


def test_load_model_file(tmp_path):
    """Test the model json loader."""
    model = load_model_file(fixture_path("model.json"))
    assert model.m == 2
    assert model.eps.eps.tolist() == [0.55, 0.45]
    assert model.phat is not None
    assert model.phat[1, 1] == 0.3

    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"m": 2, "eps": [0.5, 0.5], "p": [[0.5, 0.5], [0.5, 0.5]], "q": 1}))
    with pytest.raises(InvalidInput, match="unknown model key"):
        load_model_file(path)

    path.write_text(json.dumps({"m": 3, "eps": [0.5, 0.5], "p": [[0.5, 0.5], [0.5, 0.5]]}))
    with pytest.raises(DimensionMismatch):
        load_model_file(path)

    path.write_text(json.dumps({"m": 2, "eps": [0.5, 0.5]}))
    with pytest.raises(InvalidInput, match="misses `p`"):
        load_model_file(path)

    path.write_text("{not json")
    with pytest.raises(InvalidInput):
        load_model_file(path)
