"""JSON documents for games, markets, profiles and threshold graphs.

Unbounded budgets are written as the string "inf"; the numeric literals
Infinity and NaN are rejected on input.  Floats are written with Python's
shortest round-tripping repr, so dump followed by load is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .core import UNBOUNDED, GameError, RawMarket, ThrottlingGame
from .reductions import ThresholdGame


def _reject_constant(name: str):
    raise GameError(f"json: numeric literal {name} is not allowed; write unbounded budgets as \"inf\"")


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise GameError(f"json: {exc}") from None


def load_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GameError(f"{path}: {exc.strerror}") from None
    return loads(text)


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_default)


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if obj is UNBOUNDED:
        return "inf"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _matrix(doc, key: str, rows=None, cols=None) -> np.ndarray:
    value = doc[key]
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise GameError(f"{key}: expected a list of rows")
    for i, row in enumerate(value):
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise GameError(f"{key}[{i}][{j}]: expected a number, got {v!r}")
            if v < 0:
                raise GameError(f"{key}[{i}][{j}]: must be non-negative, got {v!r}")
    widths = {len(r) for r in value}
    if len(widths) > 1:
        raise GameError(f"{key}: rows have different lengths {sorted(widths)}")
    if rows is not None and len(value) != rows:
        raise GameError(f"{key}: expected {rows} rows (n), got {len(value)}")
    if cols is not None and value and len(value[0]) != cols:
        raise GameError(f"{key}: expected {cols} columns (m), got {len(value[0])}")
    return np.array(value, dtype=float).reshape(len(value), widths.pop() if widths else 0)


def _budgets(doc, n: int) -> tuple:
    value = doc.get("budgets")
    if not isinstance(value, list):
        raise GameError("budgets: expected a list")
    if len(value) != n:
        raise GameError(f"budgets: expected {n} entries, got {len(value)}")
    out = []
    for i, b in enumerate(value):
        if isinstance(b, str):
            if b != "inf":
                raise GameError(f"budgets[{i}]: the only allowed string is \"inf\", got {b!r}")
            out.append(UNBOUNDED)
        elif isinstance(b, bool) or not isinstance(b, (int, float)):
            raise GameError(f"budgets[{i}]: expected a number or \"inf\", got {b!r}")
        elif b <= 0:
            raise GameError(f"budgets[{i}]: must be positive, got {b!r}")
        else:
            out.append(float(b))
    return tuple(out)


def _count(doc, key: str):
    if key not in doc:
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise GameError(f"{key}: expected a non-negative integer, got {v!r}")
    return v


def game_from_json(doc) -> ThrottlingGame:
    if not isinstance(doc, dict):
        raise GameError("game: expected a JSON object")
    n, m = _count(doc, "n"), _count(doc, "m")
    raw = "raw_bids" in doc or "good_probs" in doc
    if raw:
        if "bids" in doc:
            raise GameError("bids: not allowed together with raw_bids/good_probs")
        market = market_from_json(doc, n, m)
        return market.to_game()
    if "bids" not in doc:
        raise GameError("bids: missing")
    bids = _matrix(doc, "bids", n, m)
    budgets = _budgets(doc, bids.shape[0])
    return ThrottlingGame(bids, budgets, _priority(doc, bids.shape))


def _priority(doc, shape):
    prio = doc.get("priority")
    if prio is None:
        return None
    if not isinstance(prio, list) or len(prio) != shape[1]:
        raise GameError(f"priority: expected {shape[1]} per-good orders")
    for j, order in enumerate(prio):
        if not isinstance(order, list) or sorted(order) != list(range(shape[0])):
            raise GameError(f"priority[{j}]: must be a permutation of 0..{shape[0] - 1}")
    return tuple(tuple(o) for o in prio)


def market_from_json(doc, n=None, m=None) -> RawMarket:
    for key in ("good_probs", "raw_bids"):
        if key not in doc:
            raise GameError(f"{key}: missing")
    probs = doc["good_probs"]
    if not isinstance(probs, list) or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs):
        raise GameError("good_probs: expected a list of numbers")
    raw = _matrix(doc, "raw_bids", n, m if m is not None else len(probs))
    budgets = _budgets(doc, raw.shape[0]) if "budgets" in doc else ()
    return RawMarket(np.array(probs, dtype=float), raw, budgets, _priority(doc, raw.shape))


def game_to_json(game: ThrottlingGame) -> dict:
    doc = {
        "n": game.n,
        "m": game.m,
        "bids": game.bids.tolist(),
        "budgets": ["inf" if b is UNBOUNDED else b for b in game.budgets],
    }
    if game.priority is not None:
        doc["priority"] = [list(o) for o in game.priority]
    return doc


def market_to_json(market: RawMarket) -> dict:
    doc = {"good_probs": market.good_probs.tolist(), "raw_bids": market.raw_bids.tolist()}
    if market.budgets:
        doc["budgets"] = ["inf" if b is UNBOUNDED else b for b in market.budgets]
    if market.priority is not None:
        doc["priority"] = [list(o) for o in market.priority]
    return doc


def vector_from_json(doc, key: str, n: int = None) -> np.ndarray:
    """Accept a bare list or an object holding the list under ``key``."""
    value = doc.get(key) if isinstance(doc, dict) else doc
    if not isinstance(value, list):
        raise GameError(f"{key}: expected a list of numbers")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise GameError(f"{key}[{i}]: expected a number, got {v!r}")
    if n is not None and len(value) != n:
        raise GameError(f"{key}: expected {n} entries, got {len(value)}")
    return np.array(value, dtype=float)


def threshold_from_json(doc, epsilon: float = None) -> ThresholdGame:
    if not isinstance(doc, dict):
        raise GameError("graph: expected a JSON object")
    count = _count(doc, "node_count")
    if count is None:
        raise GameError("node_count: missing")
    edges = doc.get("edges", [])
    if not isinstance(edges, list):
        raise GameError("edges: expected a list of [from, to] pairs")
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e)):
            raise GameError(f"edges[{k}]: expected [from, to]")
    eps = epsilon if epsilon is not None else doc.get("epsilon")
    if eps is None:
        raise GameError("epsilon: missing")
    return ThresholdGame(count, tuple(tuple(e) for e in edges), float(eps))


def write_output(obj, path=None) -> None:
    text = dumps(obj)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")
