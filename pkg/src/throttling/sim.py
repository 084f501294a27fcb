"""Monte-Carlo repeated auctions.

Each round draws one good type from the market's distribution and one
participation coin per buyer, runs the auction on raw bids, and charges the
winner.  The generator is numpy's PCG64 seeded with ``SimConfig.seed``; the
draws per batch are the good types (one uniform each, inverted through the
cumulative distribution) followed by an n-column block of coin uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    FIRST_PRICE,
    UNBOUNDED,
    AuctionFormat,
    GameError,
    RawMarket,
    ThrottlingGame,
    as_profile,
    check_delta,
    verify_equilibrium,
)
from .fp_solver import initial_throttle

BATCH = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    rounds: int = 1_000_000
    seed: int = 0
    format: AuctionFormat = FIRST_PRICE

    def __post_init__(self):
        if self.rounds < 1:
            raise GameError("rounds: must be at least 1")
        object.__setattr__(self, "format", AuctionFormat.parse(self.format))


@dataclass
class SimReport:
    empirical_payments: np.ndarray
    empirical_revenue: float
    stderr: np.ndarray
    rounds: int

    @property
    def per_buyer(self) -> np.ndarray:
        return self.empirical_payments.sum(axis=1)

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "empirical_payments": self.empirical_payments.tolist(),
            "empirical_revenue": self.empirical_revenue,
            "stderr": self.stderr.tolist(),
        }


class _Auction:
    """Per-good bidder orders on raw bids, reused across batches."""

    def __init__(self, market: RawMarket):
        raw = ThrottlingGame(market.raw_bids, (UNBOUNDED,) * market.raw_bids.shape[0], market.priority)
        self.n, self.m = raw.n, raw.m
        self.orders = [np.array(o, dtype=np.int64) for o in raw.orders]
        self.raw = market.raw_bids
        self.cdf = np.cumsum(market.good_probs)
        self.cdf[-1] = 1.0

    def run_batch(self, rng, theta, size, second_price):
        """Return (good, winner, payment) arrays for one batch; winner -1 means unsold."""
        goods = np.minimum(np.searchsorted(self.cdf, rng.random(size), side="right"), self.m - 1)
        coins = rng.random((size, self.n)) < theta[None, :]
        winner = np.full(size, -1, dtype=np.int64)
        pay = np.zeros(size)
        for j, order in enumerate(self.orders):
            rows = np.flatnonzero(goods == j)
            if rows.size == 0 or order.size == 0:
                continue
            present = coins[np.ix_(rows, order)]
            count = np.cumsum(present, axis=1)
            has = count[:, -1] >= 1
            first = np.argmax(count >= 1, axis=1)
            winner[rows[has]] = order[first[has]]
            if second_price:
                two = count[:, -1] >= 2
                second = np.argmax(count >= 2, axis=1)
                pay[rows[two]] = self.raw[order[second[two]], j]
            else:
                pay[rows[has]] = self.raw[order[first[has]], j]
        return goods, winner, pay


def _accumulate(auction, rng, theta, rounds, second_price):
    sums = np.zeros((auction.n, auction.m))
    squares = np.zeros((auction.n, auction.m))
    buyer_sq = np.zeros(auction.n)
    done = 0
    while done < rounds:
        size = min(BATCH, rounds - done)
        goods, winner, pay = auction.run_batch(rng, theta, size, second_price)
        won = winner >= 0
        np.add.at(sums, (winner[won], goods[won]), pay[won])
        np.add.at(squares, (winner[won], goods[won]), pay[won] ** 2)
        np.add.at(buyer_sq, winner[won], pay[won] ** 2)
        done += size
    return sums, squares, buyer_sq


def _stderr(sums, squares, rounds):
    mean = sums / rounds
    if rounds < 2:
        return np.zeros_like(mean)
    var = np.maximum(squares / rounds - mean**2, 0.0) * rounds / (rounds - 1)
    return np.sqrt(var / rounds)


def simulate(market: RawMarket, theta, config: SimConfig = SimConfig()) -> SimReport:
    """Average per-round payment of each buyer on each good type."""
    theta = as_profile(theta, market.raw_bids.shape[0])
    auction = _Auction(market)
    rng = np.random.default_rng(config.seed)
    sums, squares, _ = _accumulate(auction, rng, theta, config.rounds, config.format is not FIRST_PRICE)
    payments = sums / config.rounds
    return SimReport(payments, float(payments.sum()), _stderr(sums, squares, config.rounds), config.rounds)


@dataclass
class SimDynamicsReport:
    per_epoch: list = field(default_factory=list)
    terminal: np.ndarray = None
    certificate: object = None

    def to_json(self) -> dict:
        return {
            "epochs": [{"theta": t.tolist(), "spend": s.tolist()} for t, s in self.per_epoch],
            "terminal": self.terminal.tolist(),
            "verdict": self.certificate.verdict.value,
        }


def simulate_dynamics(market: RawMarket, delta: float, epoch_len: int,
                      config: SimConfig = SimConfig(), max_epochs: int = 100_000,
                      margin: float = 3.0) -> SimDynamicsReport:
    """Throttling dynamics driven by sampled spend.

    Each epoch runs ``epoch_len`` sampled rounds at the current profile.  A
    buyer raises theta_i by 1 / (1 - delta) when theta_i < 1 - delta and its
    estimated spend plus ``margin`` standard errors is still below
    (1 - delta) B_i.
    The report carries the analytic certificate of the terminal profile at
    level 2 delta.
    """
    if config.format is not FIRST_PRICE:
        raise GameError("format: sampled dynamics are defined for first-price auctions only")
    delta = check_delta(delta, lo_open=True, hi=0.5)
    if epoch_len < 2:
        raise GameError("epoch_len: must be at least 2")
    game = market.to_game()
    theta, pinned = initial_throttle(game)
    budgets = game.budget_vector
    auction = _Auction(market)
    rng = np.random.default_rng(config.seed)
    report = SimDynamicsReport()
    cap = 1.0 - delta
    for _ in range(max_epochs):
        sums, _, buyer_sq = _accumulate(auction, rng, theta, epoch_len, False)
        totals = sums.sum(axis=1)
        est = totals / epoch_len
        se = _stderr(totals, buyer_sq, epoch_len)
        report.per_epoch.append((theta.copy(), est))
        move = (theta < cap) & (est + margin * se < cap * budgets) & ~pinned
        if not move.any():
            break
        theta = np.where(move, theta / cap, theta)
    report.terminal = theta
    report.certificate = verify_equilibrium(game, theta, min(2 * delta, 0.999), FIRST_PRICE)
    return report
