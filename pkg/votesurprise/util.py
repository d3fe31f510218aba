"""Utils for votesurprise."""

import json
import logging
from dataclasses import MISSING, fields, is_dataclass
from enum import Enum
from pathlib import Path
from types import NoneType, UnionType
from typing import Any, Union, get_args, get_origin, get_type_hints

import numpy as np

from votesurprise.errors import InvalidInput


def to_jsonable(obj: Any, skip_none: bool = True) -> Any:
    """Convert dataclasses, enums and numpy values into plain json types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        result = {}
        for f in fields(obj):
            if f.name.startswith("_"):
                continue
            value = to_jsonable(getattr(obj, f.name), skip_none)
            if value is None and skip_none:
                continue
            result[f.name] = value
        return result
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, skip_none) for k, v in obj.items()}
    if isinstance(obj, list | tuple):
        return [to_jsonable(v, skip_none) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj: Any, path: Path | None = None) -> str:
    """Serialize to stable json text (sorted keys) and optionally write it."""
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def load_json(path: Path) -> Any:
    """Load a json file, raising InvalidInput with the file name on failure."""
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"Unable to read json file {path}: {exc}") from exc


def _parse_value(name: str, value: Any, value_type: Any, default: Any = MISSING) -> Any:
    """Try to parse a value from raw (json) data and type annotations."""
    # ruff: noqa: PLR0911, PLR0912
    # pylint: disable=too-many-return-statements,too-many-branches
    if isinstance(value_type, str):
        # postponed annotations are resolved by the caller, just in case
        value_type = get_type_hints(value_type, globals(), locals())

    if isinstance(value, dict) and hasattr(value_type, "from_dict"):
        # always prefer classes that have a from_dict
        return value_type.from_dict(value)

    if value is None and not isinstance(default, type(MISSING)):
        return default
    if value is None and value_type is NoneType:
        return None
    if is_dataclass(value_type) and isinstance(value, dict):
        return dataclass_from_dict(value_type, value, strict=True)
    origin: Any = get_origin(value_type)
    if origin in (list, tuple, set) and isinstance(value, list | tuple | set):
        sub_types = get_args(value_type)
        if origin is tuple and sub_types and sub_types[-1] is not Ellipsis:
            if len(sub_types) != len(value):
                raise TypeError(
                    f"`{name}` expects {len(sub_types)} items, got {len(value)}"
                )
            return tuple(
                _parse_value(f"{name}[{i}]", subvalue, sub_type)
                for i, (subvalue, sub_type) in enumerate(
                    zip(value, sub_types, strict=True)
                )
            )
        sub_type = sub_types[0] if sub_types else Any
        return origin(
            _parse_value(f"{name}[{i}]", subvalue, sub_type)
            for i, subvalue in enumerate(value)
        )
    if origin is dict and isinstance(value, dict):
        subkey_type, subvalue_type = get_args(value_type) or (Any, Any)
        return {
            _parse_value(subkey, subkey, subkey_type): _parse_value(
                f"{name}.{subkey}", subvalue, subvalue_type
            )
            for subkey, subvalue in value.items()
        }
    if origin is Union or origin is UnionType:
        sub_value_types = get_args(value_type)
        for sub_arg_type in sub_value_types:
            if value is None and sub_arg_type is NoneType:
                return None
            try:
                return _parse_value(name, value, sub_arg_type)
            except (KeyError, TypeError, ValueError):
                pass
        err = (
            f"Value {value} of type {type(value)} is invalid for {name}, "
            f"expected value of type {value_type}"
        )
        if NoneType not in sub_value_types:
            raise TypeError(err)
        logging.getLogger(__name__).warning(err)
        return None
    if value_type is Any:
        return value
    # raise if value is None and the value is required according to annotations
    if value is None and value_type is not NoneType:
        raise KeyError(f"`{name}` of type `{value_type}` is required.")

    try:
        if issubclass(value_type, Enum):
            return value_type(value)
        if issubclass(value_type, Path):
            return Path(value)
    except TypeError:
        # happens if value_type is not a class
        pass

    # common type conversions (e.g. int as float, numeric strings from the cli)
    if value_type is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if value_type is float and isinstance(value, str):
        return float(value)
    if value_type is int and isinstance(value, str) and value.lstrip("-").isnumeric():
        return int(value)
    if value_type is bool and isinstance(value, str):
        return value.lower() in ("1", "true", "yes", "on")

    if not isinstance(value, value_type):
        raise TypeError(
            f"Value {value} of type {type(value)} is invalid for {name}, "
            f"expected value of type {value_type}"
        )
    return value


def dataclass_from_dict(cls: Any, dict_obj: dict, strict: bool = False) -> Any:
    """
    Create (instance of) a dataclass by providing a dict with values.

    Including support for nested structures and common type conversions.
    If strict mode enabled, any additional keys in the provided dict will result in a KeyError.
    """
    if strict:
        extra_keys = dict_obj.keys() - {f.name for f in fields(cls)}
        if extra_keys:
            raise KeyError(
                f"Extra key(s) {','.join(sorted(extra_keys))} not allowed for {cls.__name__}"
            )
    hints = get_type_hints(cls)
    return cls(
        **{
            field.name: _parse_value(
                f"{cls.__name__}.{field.name}",
                dict_obj.get(field.name),
                hints.get(field.name, field.type),
                field.default
                if field.default_factory is MISSING
                else field.default_factory(),
            )
            for field in fields(cls)
            if field.init
        }
    )


def parse_config(cls: Any, dict_obj: dict) -> Any:
    """Parse a config dataclass in strict mode, reporting problems as InvalidInput."""
    try:
        return dataclass_from_dict(cls, dict_obj, strict=True)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(str(exc).strip("'\"")) from exc


def parse_float_list(raw: str) -> tuple[float, ...]:
    """Parse a comma separated list of floats as given on the command line."""
    try:
        return tuple(float(item) for item in raw.split(",") if item.strip())
    except ValueError as exc:
        raise InvalidInput(f"Invalid number list `{raw}`") from exc
