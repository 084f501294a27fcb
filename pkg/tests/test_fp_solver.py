import math

import numpy as np
import pytest

from throttling import (
    FIRST_PRICE,
    UNBOUNDED,
    GameError,
    PacingProfile,
    ThrottlingGame,
    ViolationKind,
    expected_payments,
    polish_fp_equilibrium,
    solve_fp_pacing,
    solve_fp_throttling,
    verify_equilibrium,
    verify_pacing_equilibrium,
)
from throttling.core import Allocation
from throttling.fp_solver import fp_iteration_bound, initial_throttle, pacing_revenue
from throttling.generate import random_small_games

from oracles import two_buyer_fp_residuals, two_buyer_fp_root


def test_pair_game_matches_bisection(fp_pair_game):
    root = two_buyer_fp_root()
    assert root[1] == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
    theta, trace = solve_fp_throttling(fp_pair_game, 1e-4)
    assert np.abs(theta - root).max() < 5e-3
    assert max(abs(r) for r in two_buyer_fp_residuals(theta)) < 1e-2
    assert trace.iterations <= trace.bound


def test_nearby_quadratic_root_fails_budget_equations():
    t2 = (7 - math.sqrt(33)) / 8
    t1 = 1 / (2 - t2)
    assert abs(two_buyer_fp_residuals((t1, t2))[1]) > 1e-2


def test_halving_delta_agrees(fp_pair_game):
    root = two_buyer_fp_root()
    delta = 1e-3
    a, _ = solve_fp_throttling(fp_pair_game, delta)
    b, _ = solve_fp_throttling(fp_pair_game, delta / 2)
    assert np.abs(a - b).max() <= 10 * delta
    assert (a <= root + 1e-12).all() and (b <= root + 1e-12).all()


def test_all_unbounded_gives_full_participation():
    g = ThrottlingGame([[1, 2], [3, 1]], (UNBOUNDED, UNBOUNDED))
    theta, _ = solve_fp_throttling(g, 0.01)
    assert np.all(theta == 1)


def test_single_buyer_band():
    g = ThrottlingGame([[1]], (0.25,))
    theta, _ = solve_fp_throttling(g, 0.01)
    assert 0.2475 <= theta[0] <= 0.25
    assert expected_payments(g, theta, FIRST_PRICE).per_buyer[0] <= 0.25


def test_zero_bid_buyer_pinned():
    g = ThrottlingGame([[1, 1], [0, 0]], (0.5, 0.5))
    start, pinned = initial_throttle(g)
    assert list(pinned) == [False, True] and start[1] == 1
    theta, _ = solve_fp_throttling(g, 0.01)
    assert theta[1] == 1 and verify_equilibrium(g, theta, 0.01)


def test_iteration_bound_formula(fp_pair_game):
    c, bound = fp_iteration_bound(fp_pair_game, 0.01)
    assert c == pytest.approx(0.125)
    assert bound == pytest.approx(2 * math.log(8) / 0.01)


def test_trace_safety_locality_monotonicity():
    delta = 5e-3
    for g in random_small_games(40, seed=21):
        theta, trace = solve_fp_throttling(g, delta)
        start, _ = initial_throttle(g)
        assert (theta >= start).all()
        budgets = g.budget_vector
        snaps = [t for t, _ in trace.per_round] + [theta]
        for (t, spent), nxt in zip(trace.per_round, snaps[1:]):
            assert (spent <= budgets + 1e-9).all()
            ratio = nxt / t
            moved = ~np.isclose(ratio, 1.0)
            assert np.allclose(ratio[moved], 1 / (1 - delta))
            assert (t[moved] < 1 - delta).all()
            assert (spent[moved] < (1 - delta) * budgets[moved]).all()
        final = expected_payments(g, theta, FIRST_PRICE).per_buyer
        assert (final <= budgets + 1e-9).all()


def test_polish_reaches_exact_equilibrium(fp_pair_game):
    theta, _ = solve_fp_throttling(fp_pair_game, 1e-3)
    exact = polish_fp_equilibrium(fp_pair_game, theta)
    assert verify_equilibrium(fp_pair_game, exact, 0.0)
    assert exact == pytest.approx(two_buyer_fp_root(), abs=1e-8)


def test_bad_delta_rejected(fp_pair_game):
    with pytest.raises(GameError):
        solve_fp_throttling(fp_pair_game, 0)
    with pytest.raises(GameError):
        solve_fp_throttling(fp_pair_game, 0.7)


# -- pacing --


def single_good_gap(eps):
    return ThrottlingGame([[1 / eps], [1 - eps]], (1, UNBOUNDED))


def two_good_gap(eps):
    return ThrottlingGame([[1 + eps, 1], [1, 0]], (1 - eps, UNBOUNDED))


def test_pacing_single_good_gap():
    g = single_good_gap(0.5)
    pacing = solve_fp_pacing(g, 1e-4)
    assert pacing.alpha == pytest.approx([0.5, 1], abs=1e-3)
    assert pacing_revenue(g, pacing) == pytest.approx(1, abs=1e-3)


def test_pacing_two_good_gap():
    pacing = solve_fp_pacing(two_good_gap(0.1), 1e-4)
    assert pacing.alpha == pytest.approx([0.9, 1], abs=1e-3)


def test_pacing_unbounded_is_full():
    g = ThrottlingGame([[1, 2], [3, 1]], (UNBOUNDED, UNBOUNDED))
    assert np.all(solve_fp_pacing(g, 1e-3).alpha == 1)


def test_pacing_verifier_examples():
    g = single_good_gap(0.5)
    good = PacingProfile(np.array([0.5, 1.0]), Allocation(np.array([[1.0], [0.0]])))
    assert verify_pacing_equilibrium(g, good, 0.0)
    loser = PacingProfile(np.array([0.5, 1.0]), Allocation(np.array([[0.5], [0.5]])))
    assert ViolationKind.NOT_HIGHEST_BID in verify_pacing_equilibrium(g, loser, 0.0).kinds()
    full = PacingProfile(np.ones(2), Allocation(np.array([[1.0], [0.0]])))
    cert = verify_pacing_equilibrium(g, full, 0.0)
    assert ViolationKind.BUDGET_VIOLATED in cert.kinds()
    assert cert.per_buyer_spend[0] == pytest.approx(2)


def test_pacing_certified_on_random_games():
    for g in random_small_games(80, seed=33):
        pacing = solve_fp_pacing(g, 1e-3)
        assert verify_pacing_equilibrium(g, pacing, 1e-3)
