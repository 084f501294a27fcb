"""Second-price solvers: the two-bid dynamics, damped fixed-point iteration,
and an exhaustive grid oracle."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_TOL,
    SECOND_PRICE,
    AuctionFormat,
    GameError,
    ThrottlingGame,
    as_profile,
    check_delta,
    spend,
    sp_payments,
    verify_equilibrium,
)
from .fp_solver import DynamicsTrace, initial_throttle


# -- two positive bids per good -----------------------------------------------


def _two_bid_check(game: ThrottlingGame):
    for j, order in enumerate(game.orders):
        if len(order) > 2:
            raise GameError(f"bids[:, {j}]: good has {len(order)} positive bids, at most 2 allowed")


def sp_payment_two_bid(game: ThrottlingGame, theta, i: int, j: int) -> float:
    """theta_i theta_k b_kj if buyer i beats its only rival k on good j, else 0."""
    theta = as_profile(theta, game.n)
    order = game.orders[j]
    if len(order) > 2:
        raise GameError(f"bids[:, {j}]: good has {len(order)} positive bids, at most 2 allowed")
    if len(order) < 2 or order[0] != i:
        return 0.0
    k = order[1]
    return float(theta[i] * theta[k] * game.bids[k, j])


def two_bid_spend(game: ThrottlingGame, theta: np.ndarray) -> np.ndarray:
    out = np.zeros(game.n)
    for j, order in enumerate(game.orders):
        if len(order) == 2:
            i, k = order
            out[i] += theta[i] * theta[k] * game.bids[k, j]
    return out


def solve_sp_two_bid(game: ThrottlingGame, gamma: float, record: bool = True,
                     max_rounds: Optional[int] = None):
    """Second-price dynamics for games with at most two positive bids per good.

    While some buyer has theta_i < 1 - gamma and spend below (1 - gamma)^3 B_i:
    raise by 1/(1 - gamma) every buyer with theta_i < 1 - gamma and spend
    below (1 - gamma)^2 B_i, then cut by (1 - gamma) every buyer now over
    budget.  The result is a 3 gamma-approximate equilibrium.
    """
    gamma = check_delta(gamma, lo_open=True, hi=1 / 3, name="gamma")
    _two_bid_check(game)
    theta, _ = initial_throttle(game)
    budgets = game.budget_vector
    keep = 1.0 - gamma
    moving = theta[game.bids.sum(axis=1) > 0]
    floor = float(moving.min()) if moving.size else 1.0
    # each round lifts some buyer by 1/(1-gamma); generous polynomial cap
    bound = game.n * math.log(1.0 / floor) / gamma + 1 if floor < 1 else 1
    trace = DynamicsTrace(floor=floor, bound=bound)
    limit = max_rounds if max_rounds is not None else int(50 * game.n * (bound + 1))
    while True:
        spent = two_bid_spend(game, theta)
        if not np.any((theta < keep) & (spent < keep**3 * budgets)):
            break
        if trace.iterations >= limit:
            raise RuntimeError("two-bid dynamics exceeded the round limit")
        trace.record(theta, spent, record)
        raise_mask = (theta < keep) & (spent < keep**2 * budgets)
        theta = np.where(raise_mask, theta / keep, theta)
        spent = two_bid_spend(game, theta)
        theta = np.where(spent > budgets, theta * keep, theta)
    trace.terminal = theta
    return theta, trace


# -- fixed-point map ----------------------------------------------------------


def sp_unit_spend(game: ThrottlingGame, theta: np.ndarray) -> np.ndarray:
    """sum_j p(1, theta_-i)_ij for every buyer i (batch axes allowed).

    Second-price payments factor as theta_i times this quantity.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.empty(theta.shape)
    for i in range(game.n):
        lifted = theta.copy()
        lifted[..., i] = 1.0
        out[..., i] = sp_payments(game, lifted)[..., i, :].sum(axis=-1)
    return out


def sp_fixed_point_map(game: ThrottlingGame, theta, delta: float = 0.0) -> np.ndarray:
    """The best-response style map whose fixed points are equilibria.

    delta = 0: f_i = min(B_i / D_i, 1), with f_i = 1 when D_i = 0.
    delta > 0: f_i = min((1 - delta/2) B_i / max(D_i, B_i / 2), 1), the
    Lipschitz variant whose approximate fixed points are delta-approximate
    equilibria.  D_i is buyer i's spend at full own participation.
    """
    delta = check_delta(delta, hi=0.5)
    theta = as_profile(theta, game.n)
    unit = sp_unit_spend(game, theta)
    budgets = game.budget_vector
    with np.errstate(divide="ignore", invalid="ignore"):
        if delta == 0:
            out = np.where(unit > 0, np.minimum(budgets / unit, 1.0), 1.0)
        else:
            out = np.minimum((1 - delta / 2) * budgets / np.maximum(unit, budgets / 2), 1.0)
    return np.where(game.bounded, out, 1.0)


def lipschitz_bound(game: ThrottlingGame) -> float:
    """Lipschitz constant 2 m n Bmax Bmin^-2 bmax of the clamped map.

    Bmin is taken as the smallest finite budget: it bounds the clamp B_i/2
    in the map's denominator from below.  Bmax is the largest finite budget.
    """
    finite = game.budget_vector[game.bounded]
    if finite.size == 0:
        raise GameError("budgets: Lipschitz bound undefined when every budget is unbounded")
    return float(2 * game.m * game.n * finite.max() / finite.min() ** 2 * game.bids.max())


@dataclass(frozen=True)
class FixedPointConfig:
    """Settings for damped fixed-point iteration.

    ``delta`` may be 0 to target exact equilibria with the unclamped map.
    """

    delta: float = 0.01
    max_iterations: int = 20_000
    damping: float = 0.5
    restart_seeds: int = 8
    seed: int = 0
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        check_delta(self.delta, hi=0.5)
        if not 0 < self.damping <= 1:
            raise GameError(f"damping: must lie in (0, 1], got {self.damping!r}")
        if self.max_iterations < 1:
            raise GameError("max_iterations: must be at least 1")
        if self.restart_seeds < 0:
            raise GameError("restart_seeds: must be non-negative")


@dataclass(frozen=True)
class NotConverged:
    """Iteration budget exhausted without a certified equilibrium."""

    attempts: int
    iterations: int
    best_residual: float
    best_profile: np.ndarray

    def __bool__(self) -> bool:
        return False


def solve_sp_fixed_point(game: ThrottlingGame, config: FixedPointConfig = FixedPointConfig()):
    """Damped iteration theta <- (1 - damping) theta + damping f(theta).

    Starts from all-ones, then from seeded random points.  Returns the first
    profile the verifier accepts at level config.delta, or NotConverged.
    """
    rng = np.random.default_rng(config.seed)
    starts = [np.ones(game.n)] + [rng.uniform(0.0, 1.0, game.n) for _ in range(config.restart_seeds)]
    best, best_res, total = starts[0], math.inf, 0
    lam = config.damping
    for theta in starts:
        for _ in range(config.max_iterations):
            total += 1
            image = sp_fixed_point_map(game, theta, config.delta)
            residual = float(np.abs(image - theta).max())
            if residual < best_res:
                best, best_res = theta, residual
            if verify_equilibrium(game, theta, config.delta, SECOND_PRICE, config.tol):
                return theta
            if residual == 0.0:
                break
            theta = np.clip((1 - lam) * theta + lam * image, 0.0, 1.0)
    return NotConverged(len(starts), total, best_res, best)


# -- grid oracle --------------------------------------------------------------


@dataclass(frozen=True)
class GridOracleConfig:
    step: float = 1 / 16
    delta: float = 0.05
    max_points: int = 10_000_000
    tol: float = DEFAULT_TOL
    workers: int = 1
    chunk: int = 65_536

    def __post_init__(self):
        if not 0 < self.step <= 1:
            raise GameError(f"step: must lie in (0, 1], got {self.step!r}")
        k = round(1 / self.step)
        if abs(k * self.step - 1) > 1e-12:
            raise GameError(f"step: 1/step must be an integer, got {self.step!r}")
        check_delta(self.delta)

    @property
    def levels(self) -> int:
        return round(1 / self.step) + 1


def _grid_chunk(game, fmt, axes, delta, tol, start, stop):
    idx = np.arange(start, stop)
    theta = np.empty((stop - start, game.n))
    for pos in range(game.n - 1, -1, -1):
        k = len(axes[pos])
        theta[:, pos] = axes[pos][idx % k]
        idx = idx // k
    spent = spend(game, theta, fmt)
    budgets = game.budget_vector
    ok = np.all(spent <= budgets + tol, axis=1)
    slack = (spent < (1 - delta) * budgets - tol) & (theta < 1 - delta - tol)
    ok &= ~np.any(slack, axis=1)
    return theta[ok]


def brute_force_equilibria(game: ThrottlingGame, config: GridOracleConfig = GridOracleConfig(),
                           fmt=SECOND_PRICE) -> list:
    """Every grid profile accepted by the equilibrium verifier, in
    lexicographic order.  The grid is {0, step, ..., 1}^n.

    Buyers that can never have budget slack violations excused (unbounded
    budget or no positive bid) only have grid values >= 1 - delta - tol
    enumerated; every other value of theirs fails verification anyway.
    """
    fmt = AuctionFormat.parse(fmt)
    values = np.linspace(0.0, 1.0, config.levels)
    total_full = config.levels ** game.n
    if total_full > config.max_points:
        raise GameError(f"step: grid has {total_full} points, above max_points={config.max_points}")
    forced = ~game.bounded | (game.bids.sum(axis=1) <= 0)
    axes = [values[values >= 1 - config.delta - config.tol] if forced[i] else values
            for i in range(game.n)]
    total = math.prod(len(a) for a in axes)
    bounds = [(s, min(s + config.chunk, total)) for s in range(0, total, config.chunk)]
    run = lambda b: _grid_chunk(game, fmt, axes, config.delta, config.tol, *b)  # noqa: E731
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    return [row for part in parts for row in part]
