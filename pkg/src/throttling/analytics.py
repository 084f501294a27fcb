"""Revenue comparison, liquid welfare optimum, price of anarchy and the
tightness constructions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DEFAULT_TOL,
    FIRST_PRICE,
    UNBOUNDED,
    Allocation,
    AuctionFormat,
    GameError,
    ThrottlingGame,
    check_delta,
    expected_allocation,
    expected_payments_fp,
    liquid_welfare,
    verify_equilibrium,
)
from .fp_solver import PacingProfile, pacing_revenue, solve_fp_pacing, solve_fp_throttling
from .lp import maximize


@dataclass
class WelfareReport:
    equilibrium_lw: float
    optimal_lw: float
    poa_ratio: float
    witness_allocation: Allocation
    is_equilibrium: bool
    delta: float

    def to_json(self) -> dict:
        return {
            "equilibrium_lw": self.equilibrium_lw,
            "optimal_lw": self.optimal_lw,
            "poa_ratio": "inf" if math.isinf(self.poa_ratio) else self.poa_ratio,
            "witness_allocation": self.witness_allocation.y.tolist(),
            "is_equilibrium": self.is_equilibrium,
            "delta": self.delta,
        }


@dataclass
class ComparisonReport:
    rev_te: float
    rev_pe: float
    ratio_te_over_pe: float
    ratio_pe_over_te: float
    profiles: tuple

    def to_json(self) -> dict:
        theta, pacing = self.profiles
        return {
            "rev_te": self.rev_te,
            "rev_pe": self.rev_pe,
            "ratio_te_over_pe": self.ratio_te_over_pe,
            "ratio_pe_over_te": self.ratio_pe_over_te,
            "theta": theta.tolist(),
            "alpha": pacing.alpha.tolist(),
            "allocation": pacing.allocation.y.tolist(),
        }


def _ratio(a: float, b: float) -> float:
    if b > 0:
        return a / b
    return 1.0 if a == 0 else math.inf


def optimal_liquid_welfare_exact(game: ThrottlingGame) -> tuple[Fraction, list]:
    """Exact LP optimum of liquid welfare over fractional allocations.

    Variables: y_ij for positive bids, then w_i per buyer.  Maximize sum w_i
    with w_i <= sum_j b_ij y_ij, w_i <= B_i (finite budgets), sum_i y_ij <= 1.
    Floats enter as their exact binary rationals.
    """
    pairs = [(i, j) for i in range(game.n) for j in range(game.m) if game.bids[i, j] > 0]
    k, n = len(pairs), game.n
    c = [0] * k + [1] * n
    A, b = [], []
    for i in range(n):
        row = [Fraction(0)] * (k + n)
        for col, (ii, j) in enumerate(pairs):
            if ii == i:
                row[col] = -Fraction(float(game.bids[i, j]))
        row[k + i] = Fraction(1)
        A.append(row)
        b.append(0)
    for i in np.flatnonzero(game.bounded):
        row = [0] * (k + n)
        row[k + int(i)] = 1
        A.append(row)
        b.append(Fraction(float(game.budget_vector[i])))
    for j in range(game.m):
        row = [1 if jj == j else 0 for _, jj in pairs] + [0] * n
        if any(row):
            A.append(row)
            b.append(1)
    sol = maximize(c, A, b)
    y = [[Fraction(0)] * game.m for _ in range(n)]
    for col, (i, j) in enumerate(pairs):
        y[i][j] = sol.x[col]
    return sol.objective, y


def optimal_liquid_welfare(game: ThrottlingGame) -> tuple[float, Allocation]:
    value, y = optimal_liquid_welfare_exact(game)
    return float(value), Allocation(np.array([[float(v) for v in row] for row in y]))


def poa_ratio(game: ThrottlingGame, theta, fmt, delta: float = 0.0,
              tol: float = DEFAULT_TOL) -> WelfareReport:
    """Optimal liquid welfare over the liquid welfare of theta's allocation.

    ``is_equilibrium`` records whether theta verifies at level delta.
    """
    fmt = AuctionFormat.parse(fmt)
    delta = check_delta(delta)
    ok = verify_equilibrium(game, theta, delta, fmt, tol).accepted
    eq_lw = liquid_welfare(game, expected_allocation(game, theta))
    opt, witness = optimal_liquid_welfare(game)
    return WelfareReport(eq_lw, opt, _ratio(opt, eq_lw), witness, ok, delta)


def welfare_doubling_gap(game: ThrottlingGame, theta, y) -> tuple[float, float]:
    """(sum_i min(2 E[value won], B_i), sum_i min(value under y, B_i)).

    For an equilibrium theta the first entry dominates the second for any
    benchmark allocation y; this is the inequality behind the factor 2.
    """
    y = y.y if isinstance(y, Allocation) else np.asarray(y, dtype=float)
    won = (game.bids * expected_allocation(game, theta).y).sum(axis=1)
    budgets = game.budget_vector
    lhs = float(np.minimum(2 * won, budgets).sum())
    rhs = float(np.minimum((game.bids * y).sum(axis=1), budgets).sum())
    return lhs, rhs


def revenue_comparison_fp(game: ThrottlingGame, delta: float) -> ComparisonReport:
    """Revenue of the first-price throttling and pacing equilibria, both at level delta."""
    delta = check_delta(delta, lo_open=True, hi=0.5)
    theta, _ = solve_fp_throttling(game, delta, record=False)
    pacing = solve_fp_pacing(game, delta)
    rev_te = expected_payments_fp(game, theta).revenue
    rev_pe = pacing_revenue(game, pacing, FIRST_PRICE)
    return ComparisonReport(rev_te, rev_pe, _ratio(rev_te, rev_pe), _ratio(rev_pe, rev_te), (theta, pacing))


# -- tightness constructions ----------------------------------------------------


def poa_example_sp(m: int, eps: float) -> ThrottlingGame:
    """m unit-diagonal buyers with unbounded budgets, plus one buyer bidding m
    everywhere with budget m + eps."""
    if m < 1:
        raise GameError("m: must be at least 1")
    if eps <= 0:
        raise GameError("eps: must be positive")
    bids = np.zeros((m + 1, m))
    bids[np.arange(m), np.arange(m)] = 1.0
    bids[m, :] = m
    return ThrottlingGame(bids, (UNBOUNDED,) * m + (m + eps,))


def poa_example_fp(m: int) -> ThrottlingGame:
    """Buyers i < m bid 1 on good i and m on the shared last good (budget 1);
    the last buyer bids m on the shared good only, with unbounded budget."""
    if m < 1:
        raise GameError("m: must be at least 1")
    bids = np.zeros((m + 1, m + 1))
    bids[np.arange(m), np.arange(m)] = 1.0
    bids[:, m] = m
    return ThrottlingGame(bids, (1.0,) * m + (UNBOUNDED,))


def non_participation_products(theta, m: int) -> np.ndarray:
    """g(i) = prod_{k <= i} (1 - theta_k) for i = 1..m."""
    theta = np.asarray(theta, dtype=float)[:m]
    return np.cumprod(1.0 - theta)


def g_recursion(m: int) -> np.ndarray:
    """g(1) = m / (1 + m), g(i) = g(i-1)^2 m / (1 + g(i-1) m)."""
    out = [m / (1 + m)]
    for _ in range(1, m):
        prev = out[-1]
        out.append(prev * prev * m / (1 + prev * m))
    return np.array(out)


def g_upper_bound(m: int) -> np.ndarray:
    """1 - i / (m + sqrt m) for i = 1..m."""
    return 1.0 - np.arange(1, m + 1) / (m + math.sqrt(m))
