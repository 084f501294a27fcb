"""Throttling games: representation, expected payments and equilibrium checks.

Bids are the rescaled bids (good-type probability times raw bid), so every
quantity here is an expectation over participation coins only.  Ties are
resolved by a per-good priority order, ascending buyer index by default.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

DEFAULT_TOL = 1e-9


class _Unbounded:
    """Sentinel for a budget that never binds."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()
Budget = Union[float, _Unbounded]


class GameError(ValueError):
    """Invalid game, profile or argument; messages carry a field path."""


class AuctionFormat(str, enum.Enum):
    FIRST_PRICE = "fp"
    SECOND_PRICE = "sp"

    @classmethod
    def parse(cls, value: Union[str, "AuctionFormat"]) -> "AuctionFormat":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "_")
        aliases = {
            "fp": cls.FIRST_PRICE,
            "first_price": cls.FIRST_PRICE,
            "firstprice": cls.FIRST_PRICE,
            "sp": cls.SECOND_PRICE,
            "second_price": cls.SECOND_PRICE,
            "secondprice": cls.SECOND_PRICE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise GameError(f"format: unknown auction format {value!r}") from None


FIRST_PRICE = AuctionFormat.FIRST_PRICE
SECOND_PRICE = AuctionFormat.SECOND_PRICE


def _normalize_budget(value, path: str) -> Budget:
    if value is UNBOUNDED or isinstance(value, _Unbounded):
        return UNBOUNDED
    if isinstance(value, str):
        if value.strip().lower() == "inf":
            return UNBOUNDED
        raise GameError(f"{path}: expected a number or 'inf', got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise GameError(f"{path}: expected a number or 'inf', got {value!r}") from None
    if np.isnan(x):
        raise GameError(f"{path}: budget is NaN")
    if np.isinf(x) and x > 0:
        return UNBOUNDED
    if x <= 0:
        raise GameError(f"{path}: budget must be positive, got {x!r}")
    return x


@dataclass(eq=False)
class ThrottlingGame:
    """n buyers, m goods, rescaled bids, budgets and tie-break priority.

    ``priority[j]`` lists all buyer indices for good ``j`` from highest to
    lowest priority.  ``None`` means ascending index on every good.
    """

    bids: np.ndarray
    budgets: tuple
    priority: Optional[tuple] = None

    def __post_init__(self):
        try:
            bids = np.array(self.bids, dtype=float)
        except (TypeError, ValueError):
            raise GameError("bids: expected a rectangular numeric matrix") from None
        if bids.ndim != 2:
            raise GameError(f"bids: expected an n x m matrix, got shape {bids.shape}")
        n, m = bids.shape
        if n < 1:
            raise GameError("bids: game needs at least one buyer")
        bad = np.argwhere(~np.isfinite(bids) | (bids < 0))
        if len(bad):
            i, j = bad[0]
            raise GameError(f"bids[{i}][{j}]: bids must be finite and non-negative, got {bids[i, j]!r}")
        bids.setflags(write=False)
        self.bids = bids

        budgets = list(self.budgets)
        if len(budgets) != n:
            raise GameError(f"budgets: expected {n} entries, got {len(budgets)}")
        self.budgets = tuple(_normalize_budget(b, f"budgets[{i}]") for i, b in enumerate(budgets))

        if self.priority is not None:
            prio = [list(map(int, p)) for p in self.priority]
            if len(prio) != m:
                raise GameError(f"priority: expected {m} orders, got {len(prio)}")
            for j, order in enumerate(prio):
                if sorted(order) != list(range(n)):
                    raise GameError(f"priority[{j}]: must be a permutation of 0..{n - 1}")
            self.priority = tuple(tuple(p) for p in prio)

    @property
    def n(self) -> int:
        return self.bids.shape[0]

    @property
    def m(self) -> int:
        return self.bids.shape[1]

    @cached_property
    def budget_vector(self) -> np.ndarray:
        """Budgets as floats, with +inf standing in for UNBOUNDED."""
        return np.array([np.inf if b is UNBOUNDED else b for b in self.budgets])

    @property
    def bounded(self) -> np.ndarray:
        return np.isfinite(self.budget_vector)

    @cached_property
    def rank(self) -> np.ndarray:
        """rank[j, i]: position of buyer i in good j's priority (0 = first)."""
        r = np.tile(np.arange(self.n), (self.m, 1))
        if self.priority is not None:
            for j, order in enumerate(self.priority):
                r[j, list(order)] = np.arange(self.n)
        return r

    @cached_property
    def orders(self) -> tuple:
        """Per good, the buyers with positive bids from winner to last."""
        out = []
        for j in range(self.m):
            bidders = [i for i in range(self.n) if self.bids[i, j] > 0]
            bidders.sort(key=lambda i: (-self.bids[i, j], self.rank[j, i]))
            out.append(tuple(bidders))
        return tuple(out)

    @cached_property
    def above(self) -> np.ndarray:
        """above[i, j, k]: k has a positive bid that beats buyer i on good j."""
        a = np.zeros((self.n, self.m, self.n), dtype=bool)
        for j, order in enumerate(self.orders):
            pos = {k: t for t, k in enumerate(order)}
            for i in range(self.n):
                cutoff = pos.get(i, len(order))
                for k in order[:cutoff]:
                    a[i, j, k] = True
        return a

    def with_budgets(self, budgets) -> "ThrottlingGame":
        return ThrottlingGame(self.bids, budgets, self.priority)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThrottlingGame):
            return NotImplemented
        return (
            self.bids.shape == other.bids.shape
            and bool(np.array_equal(self.bids, other.bids))
            and self.budgets == other.budgets
            and self._effective_priority() == other._effective_priority()
        )

    def _effective_priority(self):
        if self.priority is None:
            return tuple(tuple(range(self.n)) for _ in range(self.m))
        return self.priority

    def __repr__(self) -> str:
        return f"ThrottlingGame(n={self.n}, m={self.m}, budgets={list(self.budgets)})"


@dataclass(frozen=True)
class RawMarket:
    """Good-type distribution and raw (un-rescaled) bids."""

    good_probs: np.ndarray
    raw_bids: np.ndarray
    budgets: tuple = ()
    priority: Optional[tuple] = None

    def __post_init__(self):
        d = np.array(self.good_probs, dtype=float)
        raw = np.array(self.raw_bids, dtype=float)
        if d.ndim != 1:
            raise GameError("good_probs: expected a vector")
        if raw.ndim != 2 or raw.shape[1] != d.size:
            raise GameError(f"raw_bids: expected an n x {d.size} matrix, got shape {raw.shape}")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise GameError("good_probs: entries must be finite and non-negative")
        if abs(d.sum() - 1.0) > 1e-12:
            raise GameError(f"good_probs: must sum to 1, sums to {d.sum()!r}")
        if np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise GameError("raw_bids: entries must be finite and non-negative")
        object.__setattr__(self, "good_probs", d)
        object.__setattr__(self, "raw_bids", raw)
        object.__setattr__(self, "budgets", tuple(self.budgets))

    def to_game(self) -> ThrottlingGame:
        """The rescaled game; an empty budget tuple means every budget is unbounded."""
        budgets = self.budgets or (UNBOUNDED,) * self.raw_bids.shape[0]
        return ThrottlingGame(rescale_bids(self), budgets, self.priority)


def rescale_bids(market: RawMarket) -> np.ndarray:
    """Fold the good-type distribution into the bids: b_ij = d_j * raw_ij."""
    return market.raw_bids * market.good_probs[None, :]


def higher_priority(game: ThrottlingGame, good: int, i: int, k: int) -> bool:
    """True iff buyer i beats buyer k on ``good`` (bid first, then priority)."""
    for name, idx, size in (("good", good, game.m), ("i", i, game.n), ("k", k, game.n)):
        if not 0 <= idx < size:
            raise GameError(f"{name}: index {idx} out of range [0, {size})")
    if i == k:
        raise GameError("i and k must be distinct buyers")
    bi, bk = game.bids[i, good], game.bids[k, good]
    if bi != bk:
        return bool(bi > bk)
    return bool(game.rank[good, i] < game.rank[good, k])


def as_profile(theta, n: int, name: str = "theta") -> np.ndarray:
    """Validate a throttle (or pacing) vector of length n with entries in [0, 1]."""
    t = np.asarray(theta, dtype=float)
    if t.shape != (n,):
        raise GameError(f"{name}: expected length {n}, got shape {t.shape}")
    if not np.all(np.isfinite(t)) or np.any(t < 0) or np.any(t > 1):
        raise GameError(f"{name}: entries must lie in [0, 1]")
    return t


@dataclass
class PaymentReport:
    per_pair: np.ndarray
    per_buyer: np.ndarray
    revenue: float

    @classmethod
    def from_pairs(cls, per_pair: np.ndarray) -> "PaymentReport":
        per_buyer = per_pair.sum(axis=1)
        return cls(per_pair, per_buyer, float(per_buyer.sum()))


@dataclass
class Allocation:
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise GameError("allocation: expected an n x m matrix")
        if np.any(y < -1e-12) or np.any(y > 1 + 1e-12):
            raise GameError("allocation: entries must lie in [0, 1]")
        if np.any(y.sum(axis=0) > 1 + 1e-9):
            raise GameError("allocation: some good is allocated more than once")
        self.y = y


# -- payments ---------------------------------------------------------------


def fp_payments(game: ThrottlingGame, theta: np.ndarray) -> np.ndarray:
    """First-price expected payments; theta may carry leading batch axes."""
    theta = np.asarray(theta, dtype=float)
    blockers = np.where(game.above, 1.0 - theta[..., None, None, :], 1.0).prod(axis=-1)
    return theta[..., :, None] * game.bids * blockers


def sp_payments(game: ThrottlingGame, theta: np.ndarray) -> np.ndarray:
    """Second-price expected payments; theta may carry leading batch axes.

    For the bidder at rank r on a good (ordered o_1, o_2, ...), the payment is
    theta_r * Q_r * S_r where Q_r is the probability nobody ranked above r
    participates and S_r the expected price given r participates and wins,
    built backwards as S_r = b_{r+1} theta_{r+1} + (1 - theta_{r+1}) S_{r+1}.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape[:-1] + (game.n, game.m))
    for j, order in enumerate(game.orders):
        K = len(order)
        if K < 2:
            continue
        s = [None] * K
        acc = np.zeros(theta.shape[:-1])
        for r in range(K - 1, -1, -1):
            s[r] = acc
            t = theta[..., order[r]]
            acc = game.bids[order[r], j] * t + (1.0 - t) * acc
        q = np.ones(theta.shape[:-1])
        for r in range(K - 1):
            i = order[r]
            t = theta[..., i]
            out[..., i, j] = t * q * s[r]
            q = q * (1.0 - t)
    return out


def payments(game: ThrottlingGame, theta: np.ndarray, fmt) -> np.ndarray:
    if AuctionFormat.parse(fmt) is FIRST_PRICE:
        return fp_payments(game, theta)
    return sp_payments(game, theta)


def spend(game: ThrottlingGame, theta: np.ndarray, fmt) -> np.ndarray:
    """Per-buyer expected spend (batch axes allowed)."""
    return payments(game, theta, fmt).sum(axis=-1)


def expected_payments_fp(game: ThrottlingGame, theta) -> PaymentReport:
    theta = as_profile(theta, game.n)
    return PaymentReport.from_pairs(fp_payments(game, theta))


def expected_payments_sp(game: ThrottlingGame, theta) -> PaymentReport:
    theta = as_profile(theta, game.n)
    return PaymentReport.from_pairs(sp_payments(game, theta))


def expected_payments(game: ThrottlingGame, theta, fmt) -> PaymentReport:
    if AuctionFormat.parse(fmt) is FIRST_PRICE:
        return expected_payments_fp(game, theta)
    return expected_payments_sp(game, theta)


def expected_allocation(game: ThrottlingGame, theta) -> Allocation:
    """Win probabilities; identical for both formats."""
    theta = as_profile(theta, game.n)
    blockers = np.where(game.above, 1.0 - theta[None, None, :], 1.0).prod(axis=-1)
    y = np.where(game.bids > 0, theta[:, None] * blockers, 0.0)
    return Allocation(y)


def liquid_welfare(game: ThrottlingGame, alloc) -> float:
    y = alloc.y if isinstance(alloc, Allocation) else np.asarray(alloc, dtype=float)
    if y.shape != game.bids.shape:
        raise GameError(f"allocation: expected shape {game.bids.shape}, got {y.shape}")
    value = (game.bids * y).sum(axis=1)
    return float(np.minimum(value, game.budget_vector).sum())


# -- verification -----------------------------------------------------------


class Verdict(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class ViolationKind(str, enum.Enum):
    BUDGET_VIOLATED = "BudgetViolated"
    UNNECESSARY_THROTTLING = "UnnecessaryThrottling"
    UNNECESSARY_PACING = "UnnecessaryPacing"
    NOT_HIGHEST_BID = "NotHighestBid"
    NOT_FULLY_ALLOCATED = "NotFullyAllocated"


@dataclass(frozen=True)
class Violation:
    buyer: Optional[int]
    kind: ViolationKind
    magnitude: float
    good: Optional[int] = None


@dataclass
class EquilibriumCertificate:
    delta: float
    format: AuctionFormat
    per_buyer_spend: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        return Verdict.REJECT if self.violations else Verdict.ACCEPT

    @property
    def accepted(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.accepted

    def kinds(self) -> set:
        return {v.kind for v in self.violations}


def check_delta(delta: float, lo_open: bool = False, hi: float = 1.0, name: str = "delta") -> float:
    delta = float(delta)
    ok = (delta > 0 if lo_open else delta >= 0) and delta < hi
    if not ok:
        lo = "(0" if lo_open else "[0"
        raise GameError(f"{name}: must lie in {lo}, {hi:g}), got {delta!r}")
    return delta


def budget_violations(budgets: np.ndarray, spent: np.ndarray, tol: float) -> list:
    over = spent - budgets
    return [Violation(int(i), ViolationKind.BUDGET_VIOLATED, float(over[i])) for i in np.flatnonzero(over > tol)]


def slack_violations(budgets, spent, level, delta, tol, kind) -> list:
    """Buyers spending below (1 - delta) B while throttled/paced below 1 - delta."""
    underspend = spent < (1.0 - delta) * budgets - tol
    held_back = level < 1.0 - delta - tol
    bad = np.flatnonzero(underspend & held_back)
    return [Violation(int(i), kind, float(1.0 - delta - level[i])) for i in bad]


def verify_equilibrium(game: ThrottlingGame, theta, delta: float = 0.0, fmt=FIRST_PRICE,
                       tol: float = DEFAULT_TOL) -> EquilibriumCertificate:
    """Check the (delta-approximate) throttling equilibrium conditions.

    Budgets must hold up to ``tol``; a buyer spending below (1 - delta) B_i
    must have theta_i >= 1 - delta.  delta = 0 is the exact definition.
    """
    delta = check_delta(delta)
    fmt = AuctionFormat.parse(fmt)
    theta = as_profile(theta, game.n)
    spent = spend(game, theta, fmt)
    budgets = game.budget_vector
    violations = budget_violations(budgets, spent, tol)
    violations += slack_violations(budgets, spent, theta, delta, tol, ViolationKind.UNNECESSARY_THROTTLING)
    violations.sort(key=lambda v: (v.buyer, v.kind.value))
    return EquilibriumCertificate(delta, fmt, spent, violations)


def is_budget_feasible(game: ThrottlingGame, theta, fmt=FIRST_PRICE, tol: float = DEFAULT_TOL) -> bool:
    theta = as_profile(theta, game.n)
    return bool(np.all(spend(game, theta, fmt) <= game.budget_vector + tol))
