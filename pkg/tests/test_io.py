import json

import numpy as np
import pytest

from throttling import UNBOUNDED, GameError, RawMarket, ThrottlingGame, io
from throttling.analytics import poa_example_fp, poa_example_sp
from throttling.generate import GeneratorSpec, generate


FIXTURES = [
    ThrottlingGame([[2, 1], [1, 2]], (0.5, 0.5)),
    ThrottlingGame([[2, 2, 0, 1], [0, 1, 4, 4], [1, 0, 2, 0]], (1, 1, UNBOUNDED)),
    ThrottlingGame([[0.1 + 0.2, 1 / 3]], (2 / 3,)),
    ThrottlingGame([[1, 1], [1, 1]], (1, UNBOUNDED), priority=[[1, 0], [0, 1]]),
    poa_example_sp(4, 0.1),
    poa_example_fp(3),
    generate(GeneratorSpec(n=4, m=3, distribution="loguniform", seed=9)),
]


@pytest.mark.parametrize("game", FIXTURES)
def test_game_round_trip(game):
    text = io.dumps(io.game_to_json(game))
    back = io.game_from_json(io.loads(text))
    assert back == game
    assert np.array_equal(back.bids, game.bids)


def test_market_round_trip():
    market = RawMarket(np.array([0.25, 0.75]), np.array([[1.0, 3.0]]), (UNBOUNDED,))
    back = io.market_from_json(io.loads(io.dumps(io.market_to_json(market))))
    assert np.array_equal(back.raw_bids, market.raw_bids) and back.budgets == (UNBOUNDED,)


def test_game_from_raw_market_fields():
    doc = {"good_probs": [0.5, 0.5], "raw_bids": [[2, 4]], "budgets": [1]}
    assert io.game_from_json(doc).bids.tolist() == [[1, 2]]


@pytest.mark.parametrize("doc,path", [
    ({"bids": [[1, -1]], "budgets": [1]}, "bids[0][1]"),
    ({"bids": [[1, 1]], "budgets": [0]}, "budgets[0]"),
    ({"bids": [[1, 1]], "budgets": [1, 1]}, "budgets"),
    ({"bids": [[1, 1], [1]], "budgets": [1, 1]}, "bids"),
    ({"n": 2, "bids": [[1, 1]], "budgets": [1]}, "bids"),
    ({"bids": [[1, "a"]], "budgets": [1]}, "bids[0][1]"),
    ({"bids": [[1]], "budgets": ["infinity"]}, "budgets[0]"),
    ({"bids": [[1]], "budgets": [1], "priority": [[1]]}, "priority[0]"),
    ({"bids": [[1]], "raw_bids": [[1]], "good_probs": [1], "budgets": [1]}, "bids"),
])
def test_schema_rejection_names_field(doc, path):
    with pytest.raises(GameError, match=path.replace("[", r"\[").replace("]", r"\]")):
        io.game_from_json(doc)


def test_numeric_infinity_rejected():
    with pytest.raises(GameError, match="Infinity"):
        io.loads('{"bids": [[1]], "budgets": [Infinity]}')


def test_malformed_json():
    with pytest.raises(GameError):
        io.loads("{bad")


def test_vectors():
    assert io.vector_from_json([0.5, 1], "theta", 2).tolist() == [0.5, 1]
    assert io.vector_from_json({"theta": [1]}, "theta").tolist() == [1]
    with pytest.raises(GameError):
        io.vector_from_json([0.5], "theta", 2)


def test_floats_round_trip_exactly():
    value = 0.1 + 0.2
    assert json.loads(io.dumps({"x": value}))["x"] == value


def test_threshold_graph():
    tg = io.threshold_from_json({"node_count": 2, "edges": [[0, 1], [1, 0]]}, 0.5)
    assert tg.edges == ((0, 1), (1, 0))
    with pytest.raises(GameError):
        io.threshold_from_json({"node_count": 2, "edges": [[0]]}, 0.5)
