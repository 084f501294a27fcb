"""Seeded random throttling games."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GameError, ThrottlingGame


@dataclass(frozen=True)
class GeneratorSpec:
    """Random game recipe.

    Bids are drawn per entry from ``distribution`` ("uniform" or "loguniform")
    on [lo, hi]; ``density`` is the chance an entry is positive.  Budgets are
    ``budget_tightness`` times an expected-win-cost proxy: a U(0.5, 1.5)
    multiple of the buyer's total bid divided by n.
    """

    n: int
    m: int
    lo: float = 0.1
    hi: float = 1.0
    distribution: str = "uniform"
    budget_tightness: float = 1.0
    density: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise GameError("n, m: counts must be at least 1")
        if not 0 < self.lo < self.hi:
            raise GameError(f"lo, hi: need 0 < lo < hi, got {self.lo!r}, {self.hi!r}")
        if self.distribution not in ("uniform", "loguniform"):
            raise GameError(f"distribution: expected 'uniform' or 'loguniform', got {self.distribution!r}")
        if self.budget_tightness <= 0:
            raise GameError("budget_tightness: must be positive")
        if not 0 < self.density <= 1:
            raise GameError("density: must lie in (0, 1]")


def generate(spec: GeneratorSpec) -> ThrottlingGame:
    rng = np.random.default_rng(spec.seed)
    shape = (spec.n, spec.m)
    if spec.distribution == "uniform":
        bids = rng.uniform(spec.lo, spec.hi, shape)
    else:
        bids = np.exp(rng.uniform(np.log(spec.lo), np.log(spec.hi), shape))
    if spec.density < 1:
        keep = rng.random(shape) < spec.density
        # every buyer keeps at least one positive bid
        keep[np.arange(spec.n), rng.integers(0, spec.m, spec.n)] = True
        bids = np.where(keep, bids, 0.0)
    scale = rng.uniform(0.5, 1.5, spec.n)
    budgets = spec.budget_tightness * scale * bids.sum(axis=1) / spec.n
    return ThrottlingGame(bids, tuple(float(b) for b in budgets))


def random_small_games(count: int, seed: int, max_n: int = 5, max_m: int = 4,
                       density: float = 0.8, tightness=(0.2, 2.0)) -> list:
    """A reproducible batch of small games with varied shapes and tightness."""
    rng = np.random.default_rng(seed)
    games = []
    for _ in range(count):
        spec = GeneratorSpec(
            n=int(rng.integers(1, max_n + 1)),
            m=int(rng.integers(1, max_m + 1)),
            distribution=str(rng.choice(["uniform", "loguniform"])),
            budget_tightness=float(rng.uniform(*tightness)),
            density=density,
            seed=int(rng.integers(0, 2**32)),
        )
        games.append(generate(spec))
    return games
