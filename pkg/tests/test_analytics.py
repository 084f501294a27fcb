import math

import numpy as np
import pytest

from throttling import (
    FIRST_PRICE,
    SECOND_PRICE,
    UNBOUNDED,
    ThrottlingGame,
    expected_allocation,
    liquid_welfare,
    optimal_liquid_welfare,
    poa_ratio,
    polish_fp_equilibrium,
    revenue_comparison_fp,
    solve_fp_throttling,
    verify_equilibrium,
)
from throttling.analytics import (
    g_recursion,
    g_upper_bound,
    non_participation_products,
    optimal_liquid_welfare_exact,
    poa_example_fp,
    poa_example_sp,
    welfare_doubling_gap,
)
from throttling.generate import random_small_games

from oracles import best_lw_on_grid


def test_optimum_single_buyer_capped():
    value, alloc = optimal_liquid_welfare(ThrottlingGame([[3]], (2,)))
    assert value == pytest.approx(2)
    assert 3 * alloc.y[0, 0] >= 2 - 1e-12


def test_optimum_splits_good_between_capped_and_unbounded():
    # buyer 0 is worth at most 0.5; buyer 1 takes the rest of the good
    g = ThrottlingGame([[3], [1]], (0.5, UNBOUNDED))
    value, y = optimal_liquid_welfare_exact(g)
    assert float(value) == pytest.approx(4 / 3)
    assert best_lw_on_grid(g.bids, g.budget_vector, steps=60) == pytest.approx(4 / 3, abs=1e-9)
    assert y[0][0] * 3 == pytest.approx(0.5)


def test_optimum_matches_grid_search():
    rng = np.random.default_rng(4)
    for g in random_small_games(15, seed=12, max_n=3, max_m=2):
        value, _ = optimal_liquid_welfare(g)
        grid = best_lw_on_grid(g.bids, g.budget_vector, steps=20)
        assert grid <= value + 1e-9
        assert value - grid <= 0.06


def test_sp_tightness_welfare():
    g = poa_example_sp(3, 0.1)
    theta = np.ones(4)
    assert verify_equilibrium(g, theta, 0.0, SECOND_PRICE)
    assert liquid_welfare(g, expected_allocation(g, theta)) == pytest.approx(3.1)
    witness = np.zeros((4, 3))
    witness[0, 0] = witness[1, 1] = 1
    witness[3, 2] = 1
    assert liquid_welfare(g, witness) == pytest.approx(5)
    assert optimal_liquid_welfare(g)[0] >= 5


def test_sp_tightness_ratio_m4():
    report = poa_ratio(poa_example_sp(4, 0.1), np.ones(5), SECOND_PRICE)
    assert report.is_equilibrium
    assert report.equilibrium_lw == pytest.approx(4.1)
    # the fractional optimum beats the integral witness 2m - 1 = 7
    assert report.optimal_lw == pytest.approx(7.075)
    assert report.poa_ratio == pytest.approx(7.075 / 4.1)


def test_unbounded_full_participation_is_optimal():
    g = ThrottlingGame([[3, 1], [2, 4]], (UNBOUNDED, UNBOUNDED))
    assert poa_ratio(g, [1, 1], FIRST_PRICE).poa_ratio == pytest.approx(1)


def test_g_recursion_values():
    g = g_recursion(4)
    assert g[0] == pytest.approx(0.8)
    assert g[1] == pytest.approx(0.8**2 * 4 / (1 + 0.8 * 4))


@pytest.mark.parametrize("m", [2, 4, 8])
def test_fp_tightness_products(m):
    game = poa_example_fp(m)
    theta, _ = solve_fp_throttling(game, 1e-4)
    theta = polish_fp_equilibrium(game, theta)
    products = non_participation_products(theta, m)
    assert products == pytest.approx(g_recursion(m), abs=1e-6)
    assert (products <= g_upper_bound(m) + 1e-9).all()
    report = poa_ratio(game, theta, FIRST_PRICE)
    assert report.is_equilibrium
    assert report.poa_ratio == pytest.approx(2 / (1 + products[-1]), abs=1e-6)


def test_poa_at_most_two_random():
    for g in random_small_games(40, seed=17):
        theta, _ = solve_fp_throttling(g, 1e-3, record=False)
        theta = polish_fp_equilibrium(g, theta)
        report = poa_ratio(g, theta, FIRST_PRICE)
        assert report.is_equilibrium and report.poa_ratio <= 2 + 1e-6
        _, opt = optimal_liquid_welfare(g)
        lhs, rhs = welfare_doubling_gap(g, theta, opt)
        assert lhs >= rhs - 1e-9


def test_revenue_gap_single_good():
    report = revenue_comparison_fp(ThrottlingGame([[2], [0.5]], (1, UNBOUNDED)), 1e-3)
    assert report.rev_pe == pytest.approx(1, abs=0.02)
    assert report.rev_te == pytest.approx(1.25, abs=0.02)


def test_revenue_gap_two_goods():
    eps = 0.01
    report = revenue_comparison_fp(ThrottlingGame([[1 + eps, 1], [1, 0]], (1 - eps, UNBOUNDED)), 1e-3)
    assert abs(report.ratio_pe_over_te - 4 / 3) <= 0.05


def test_revenue_single_unbounded_buyer():
    report = revenue_comparison_fp(ThrottlingGame([[1, 2]], (UNBOUNDED,)), 1e-3)
    assert report.rev_te == pytest.approx(3) and report.rev_pe == pytest.approx(3)
    assert report.ratio_te_over_pe == pytest.approx(1)


def test_revenue_within_factor_two():
    delta = 1e-3
    for g in random_small_games(30, seed=19):
        r = revenue_comparison_fp(g, delta)
        assert max(r.ratio_te_over_pe, r.ratio_pe_over_te) <= 2 + 10 * delta


def test_report_json_is_finite():
    report = poa_ratio(ThrottlingGame([[1]], (1,)), [0], FIRST_PRICE)
    assert math.isinf(report.poa_ratio) and report.to_json()["poa_ratio"] == "inf"
