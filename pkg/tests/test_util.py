"""Test parser functions that convert raw json config into dataclass models."""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pytest

from votesurprise.errors import InvalidInput
from votesurprise.util import (
    dataclass_from_dict,
    dump_json,
    load_json,
    parse_config,
    parse_float_list,
    to_jsonable,
)


class Color(Enum):
    """Basic test enum."""

    RED = "red"
    BLUE = "blue"


@dataclass
class BasicModelChild:
    """Basic test model."""

    a: int
    b: str
    c: str
    d: int | None


@dataclass
class BasicModel:
    """Basic test model."""

    a: int
    b: float
    c: str
    d: int | None
    e: BasicModelChild
    f: Path
    g: str = "default"
    h: tuple[float, ...] = ()
    i: Color = Color.RED


def test_dataclass_from_dict():
    """Test dataclass from dict parsing."""
    raw = {
        "a": 1,
        "b": 1.0,
        "c": "hello",
        "d": 1,
        "e": {"a": 2, "b": "test", "c": "test", "d": None},
        "f": "runs/out",
        "h": [1, 2.5],
        "i": "blue",
    }
    res = dataclass_from_dict(BasicModel, raw)
    # test the basic values
    assert isinstance(res, BasicModel)
    assert res.a == 1
    assert res.b == 1.0
    assert res.d == 1
    # test recursive parsing
    assert isinstance(res.e, BasicModelChild)
    # test default value
    assert res.g == "default"
    # test path, tuple and enum conversion
    assert res.f == Path("runs/out")
    assert res.h == (1.0, 2.5)
    assert res.i is Color.BLUE
    # test int gets converted to float
    raw["b"] = 2
    res = dataclass_from_dict(BasicModel, raw)
    assert res.b == 2.0
    # test string doesn't match int
    with pytest.raises(TypeError):
        raw2 = {**raw}
        raw2["a"] = "blah"
        dataclass_from_dict(BasicModel, raw2)
    # test missing key result in keyerror
    with pytest.raises(KeyError):
        raw2 = {**raw}
        del raw2["a"]
        dataclass_from_dict(BasicModel, raw2)
    # test extra keys silently ignored in non-strict mode
    raw2 = {**raw}
    raw2["extrakey"] = "something"
    dataclass_from_dict(BasicModel, raw2, strict=False)
    # test extra keys not silently ignored in strict mode
    with pytest.raises(KeyError):
        dataclass_from_dict(BasicModel, raw2, strict=True)


def test_parse_config():
    """Test that config problems surface as InvalidInput."""
    with pytest.raises(InvalidInput, match="extrakey"):
        parse_config(BasicModelChild, {"a": 1, "b": "x", "c": "y", "d": None, "extrakey": 1})
    with pytest.raises(InvalidInput):
        parse_config(BasicModelChild, {"b": "x", "c": "y"})
    assert parse_config(BasicModelChild, {"a": "3", "b": "x", "c": "y"}).a == 3


def test_json_helpers(tmp_path):
    """Test json conversion of numpy values and stable output."""
    data = {"b": np.float64(0.5), "a": np.arange(3), "c": Color.RED, "d": Path("x")}
    assert to_jsonable(data) == {"b": 0.5, "a": [0, 1, 2], "c": "red", "d": "x"}
    text = dump_json(data, tmp_path / "out.json")
    assert text.index('"a"') < text.index('"b"')
    assert load_json(tmp_path / "out.json")["a"] == [0, 1, 2]
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(InvalidInput, match="bad.json"):
        load_json(tmp_path / "bad.json")


def test_dataclasses_to_json():
    """Test nested dataclasses, None fields and enum members in to_jsonable."""
    child = BasicModelChild(a=1, b="x", c="y", d=None)
    model = BasicModel(a=2, b=0.5, c="z", d=None, e=child, f=Path("f"), h=(1.0,), i=Color.BLUE)
    expected_child = {"a": 1, "b": "x", "c": "y"}
    assert to_jsonable(model) == {
        "a": 2,
        "b": 0.5,
        "c": "z",
        "e": expected_child,
        "f": "f",
        "g": "default",
        "h": [1.0],
        "i": "blue",
    }
    assert to_jsonable(child, skip_none=False) == {**expected_child, "d": None}
    assert dataclass_from_dict(BasicModel, to_jsonable(model, skip_none=False)) == model


def test_parse_float_list():
    """Test comma separated numbers from the command line."""
    assert parse_float_list("0,0.25, 1") == (0.0, 0.25, 1.0)
    assert parse_float_list("0.5,") == (0.5,)
    with pytest.raises(InvalidInput):
        parse_float_list("0,a")
