"""JSON file formats.  Rationals are always ``"p/q"`` strings; floats are rejected."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .errors import InputError
from .families import HereditaryFamily, family_from_json
from .measure import Block, GroundModel, order_key
from .verdict import fmt_q, parse_q


def read_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e})") from None


def sha256_file(path: str | Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def model_from_json(d: dict) -> GroundModel:
    try:
        blocks = tuple(
            Block(parse_q(b["measure"]), frozenset(str(p) for p in b.get("points", [])))
            for b in d["blocks"]
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"malformed model: {e}") from None
    return GroundModel(blocks)


def model_to_json(model: GroundModel) -> dict:
    return {"blocks": [{"measure": fmt_q(b.measure), "points": sorted(b.points, key=order_key)}
                       for b in model.blocks]}


def load_model(path) -> GroundModel:
    return model_from_json(read_json(path))


def load_family(path) -> HereditaryFamily:
    d = read_json(path)
    if not isinstance(d, dict):
        raise InputError("family file must hold a JSON object")
    try:
        return family_from_json(d)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed family: {e}") from None


def load_partition(path) -> list[list]:
    d = read_json(path)
    parts = d.get("parts") if isinstance(d, dict) else d
    if not isinstance(parts, list):
        raise InputError("partition file needs a 'parts' list")
    return parts
