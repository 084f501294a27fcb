"""First-price solvers: throttling dynamics and the pacing equilibrium.

The throttling equilibrium is reached by multiplicative upward dynamics
from a budget-feasible start.  The pacing equilibrium is obtained from its
convex-program characterization and then certified by the same style of
verifier used for throttling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_TOL,
    FIRST_PRICE,
    Allocation,
    AuctionFormat,
    EquilibriumCertificate,
    GameError,
    ThrottlingGame,
    ViolationKind,
    Violation,
    as_profile,
    budget_violations,
    check_delta,
    fp_payments,
    slack_violations,
    verify_equilibrium,
)


@dataclass
class DynamicsTrace:
    """Start-of-round snapshots of a multiplicative dynamics run.

    ``floor`` is the smallest initial component over the buyers that move.
    """

    iterations: int = 0
    per_round: list = field(default_factory=list)
    terminal: Optional[np.ndarray] = None
    floor: float = 1.0
    bound: float = 0.0

    def record(self, theta: np.ndarray, spent: np.ndarray, keep: bool):
        self.iterations += 1
        if keep:
            self.per_round.append((theta.copy(), spent.copy()))

    def to_json(self) -> list:
        return [{"theta": t.tolist(), "spend": s.tolist()} for t, s in self.per_round]


def initial_throttle(game: ThrottlingGame) -> tuple[np.ndarray, np.ndarray]:
    """theta_i = min(B_i / (2 sum_j b_ij), 1); buyers with no positive bid are pinned at 1."""
    totals = game.bids.sum(axis=1)
    pinned = totals <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        start = np.where(pinned, 1.0, np.minimum(game.budget_vector / (2.0 * totals), 1.0))
    return start, pinned


def fp_iteration_bound(game: ThrottlingGame, delta: float) -> tuple[float, float]:
    """(c, n log(1/c) / delta) for the first-price dynamics."""
    start, pinned = initial_throttle(game)
    c = float(start[~pinned].min()) if np.any(~pinned) else 1.0
    return c, game.n * math.log(1.0 / c) / delta


def solve_fp_throttling(game: ThrottlingGame, delta: float, record: bool = True):
    """Run the first-price throttling dynamics until no buyer can move.

    Each round, every buyer with theta_i < 1 - delta whose spend is below
    (1 - delta) B_i scales theta_i up by 1 / (1 - delta).  Returns the
    terminal profile and a DynamicsTrace.
    """
    delta = check_delta(delta, lo_open=True, hi=0.5)
    if game.m == 0:
        raise GameError("game: no goods")
    theta, pinned = initial_throttle(game)
    c, bound = fp_iteration_bound(game, delta)
    trace = DynamicsTrace(floor=c, bound=bound)
    budgets = game.budget_vector
    cap = 1.0 - delta
    limit = math.floor(bound) + 2
    while True:
        spent = fp_payments(game, theta).sum(axis=1)
        move = (theta < cap) & (spent < cap * budgets) & ~pinned
        if not move.any():
            break
        if trace.iterations >= limit:
            raise RuntimeError(f"dynamics exceeded the iteration bound {bound:.1f}")
        trace.record(theta, spent, record)
        theta = np.where(move, theta / cap, theta)
    trace.terminal = theta
    return theta, trace


def fp_unit_spend(game: ThrottlingGame, theta: np.ndarray) -> np.ndarray:
    """Per-buyer first-price spend with own participation set to 1."""
    blockers = np.where(game.above, 1.0 - theta[None, None, :], 1.0).prod(axis=-1)
    return (game.bids * blockers).sum(axis=1)


def polish_fp_equilibrium(game: ThrottlingGame, theta, tol: float = DEFAULT_TOL,
                          max_iterations: int = 200_000) -> np.ndarray:
    """Push a budget-feasible first-price profile up to the exact equilibrium.

    Iterates theta_i <- max(theta_i, min(1, B_i / D_i)) where D_i is buyer i's
    spend at full participation.  From a feasible start the iterates increase
    monotonically and stay feasible, so they converge to the largest feasible
    profile, which is the unique equilibrium.
    """
    theta = as_profile(theta, game.n).copy()
    budgets = game.budget_vector
    for _ in range(max_iterations):
        unit = fp_unit_spend(game, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            target = np.where(unit > 0, np.minimum(budgets / unit, 1.0), 1.0)
        theta = np.maximum(theta, target)
        if verify_equilibrium(game, theta, 0.0, FIRST_PRICE, tol):
            return theta
    raise RuntimeError("polishing did not reach an exact equilibrium")


# -- pacing -------------------------------------------------------------------


@dataclass
class PacingProfile:
    alpha: np.ndarray
    allocation: Allocation

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if not isinstance(self.allocation, Allocation):
            self.allocation = Allocation(self.allocation)
        if np.any(self.alpha < 0) or np.any(self.alpha > 1):
            raise GameError("alpha: entries must lie in [0, 1]")


def paced_prices(game: ThrottlingGame, alpha: np.ndarray, fmt=FIRST_PRICE) -> np.ndarray:
    """Highest (first-price) or second-highest (second-price) paced bid per good."""
    paced = alpha[:, None] * game.bids
    if AuctionFormat.parse(fmt) is FIRST_PRICE:
        return paced.max(axis=0)
    if game.n < 2:
        return np.zeros(game.m)
    return np.sort(paced, axis=0)[-2]


def pacing_revenue(game: ThrottlingGame, pacing: PacingProfile, fmt=FIRST_PRICE) -> float:
    prices = paced_prices(game, pacing.alpha, fmt)
    return float((pacing.allocation.y * prices[None, :]).sum())


def verify_pacing_equilibrium(game: ThrottlingGame, pacing: PacingProfile, delta: float = 0.0,
                              fmt=FIRST_PRICE, tol: float = DEFAULT_TOL) -> EquilibriumCertificate:
    """Check the pacing conditions: highest bids win, goods fully allocated,
    budgets met, and (relaxed by delta) no unnecessary pacing."""
    delta = check_delta(delta)
    fmt = AuctionFormat.parse(fmt)
    alpha = as_profile(pacing.alpha, game.n, "alpha")
    x = pacing.allocation.y
    if x.shape != game.bids.shape:
        raise GameError(f"allocation: expected shape {game.bids.shape}, got {x.shape}")
    paced = alpha[:, None] * game.bids
    top = paced.max(axis=0)
    violations = []
    for i, j in np.argwhere(x > tol):
        gap = top[j] - paced[i, j]
        if gap > tol:
            violations.append(Violation(int(i), ViolationKind.NOT_HIGHEST_BID, float(gap), int(j)))
    for j in np.flatnonzero(top > 0):
        short = abs(x[:, j].sum() - 1.0)
        if short > tol:
            violations.append(Violation(None, ViolationKind.NOT_FULLY_ALLOCATED, float(short), int(j)))
    spent = (x * paced_prices(game, alpha, fmt)[None, :]).sum(axis=1)
    budgets = game.budget_vector
    violations += budget_violations(budgets, spent, tol)
    violations += slack_violations(budgets, spent, alpha, delta, tol, ViolationKind.UNNECESSARY_PACING)
    return EquilibriumCertificate(delta, fmt, spent, violations)


def _pacing_multipliers(game: ThrottlingGame) -> np.ndarray:
    """Solve the first-price pacing convex program.

    minimize sum_j p_j - sum_i B_i log beta_i  s.t.  p_j >= beta_i b_ij, beta_i <= 1.
    Its optimality conditions are exactly the pacing equilibrium conditions,
    with the multipliers on p_j >= beta_i b_ij as the allocation.
    """
    import cvxpy as cp

    bounded = game.bounded & (game.bids.sum(axis=1) > 0)
    beta = np.ones(game.n)
    if not bounded.any():
        return beta
    scale = float(game.bids.max())
    bids = game.bids / scale
    budgets = game.budget_vector[bounded] / scale
    idx = np.flatnonzero(bounded)
    b = cp.Variable(len(idx))
    p = cp.Variable(game.m)
    cons = [b <= 1, p >= 0]
    fixed = np.flatnonzero(~bounded)
    if len(fixed):
        cons.append(p >= bids[fixed].max(axis=0))
    for col, i in enumerate(idx):
        support = np.flatnonzero(bids[i] > 0)
        cons.append(p[support] >= bids[i, support] * b[col])
    objective = cp.Minimize(cp.sum(p) - budgets @ cp.log(b))
    problem = cp.Problem(objective, cons)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11,
                          tol_feas=1e-11, max_iter=500)
    except cp.error.SolverError:
        problem.solve(solver=cp.SCS, eps=1e-10, max_iters=200_000)
    if b.value is None:
        raise RuntimeError(f"pacing program failed: {problem.status}")
    beta[idx] = np.clip(b.value, 0.0, 1.0)
    return beta


def _snap_ties(game: ThrottlingGame, alpha: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Make near-tied paced bids exactly tied, keeping every alpha in [0, 1].

    Buyers linked through near-ties on some good form components; within a
    component the largest multiplier anchors the rest via bid ratios.
    """
    alpha = alpha.copy()
    paced = alpha[:, None] * game.bids
    top = paced.max(axis=0)
    tied = [np.flatnonzero((game.bids[:, j] > 0) & (paced[:, j] >= top[j] * (1 - rel)))
            for j in range(game.m)]
    seen = np.zeros(game.n, dtype=bool)
    for root in np.argsort(-alpha, kind="stable"):
        if seen[root]:
            continue
        seen[root] = True
        members, queue = [root], [root]
        while queue:
            i = queue.pop()
            for j in range(game.m):
                if i not in tied[j]:
                    continue
                for k in tied[j]:
                    if not seen[k]:
                        seen[k] = True
                        alpha[k] = alpha[i] * game.bids[i, j] / game.bids[k, j]
                        members.append(k)
                        queue.append(k)
        peak = alpha[members].max()
        if peak > 1:
            alpha[members] /= peak
    return np.clip(alpha, 0.0, 1.0)


def _priority_award(game: ThrottlingGame, alpha: np.ndarray) -> np.ndarray:
    """Give each good to the priority-highest maximal paced bid."""
    paced = alpha[:, None] * game.bids
    x = np.zeros_like(paced)
    for j in range(game.m):
        top = paced[:, j].max()
        if top <= 0:
            continue
        best = [i for i in range(game.n) if paced[i, j] == top]
        x[min(best, key=lambda i: game.rank[j, i]), j] = 1.0
    return x


def _split_award(game: ThrottlingGame, alpha: np.ndarray, tol: float) -> np.ndarray:
    """Fractional split among tied top bids.

    A small LP: overspend is penalized heavily and, within budgets, paced
    buyers spend as much as possible.  Overspend left by solver error in
    alpha is absorbed by the caller's rescaling.
    """
    from scipy.optimize import linprog

    paced = alpha[:, None] * game.bids
    prices = paced.max(axis=0)
    pairs = [(i, j) for j in range(game.m) if prices[j] > 0
             for i in range(game.n) if paced[i, j] >= prices[j] - tol and game.bids[i, j] > 0]
    x = np.zeros_like(paced)
    if not pairs:
        return x
    buyers = [int(i) for i in np.flatnonzero(game.bounded)]
    k, nb = len(pairs), len(buyers)
    penalty = 1e3 * (1.0 + prices.sum())
    cost = np.concatenate([[-prices[j] if alpha[i] < 1 else 0.0 for i, j in pairs],
                           np.full(nb, penalty)])
    goods = sorted({j for _, j in pairs})
    a_eq = np.zeros((len(goods), k + nb))
    for col, (i, j) in enumerate(pairs):
        a_eq[goods.index(j), col] = 1.0
    a_ub = np.zeros((nb, k + nb))
    for row, i in enumerate(buyers):
        for col, (ii, j) in enumerate(pairs):
            if ii == i:
                a_ub[row, col] = prices[j]
        a_ub[row, k + row] = -1.0
    b_ub = game.budget_vector[buyers]
    res = linprog(cost, A_ub=a_ub if nb else None, b_ub=b_ub if nb else None,
                  A_eq=a_eq, b_eq=np.ones(len(goods)),
                  bounds=[(0, 1)] * k + [(0, None)] * nb, method="highs")
    for col, (i, j) in enumerate(pairs):
        x[i, j] = res.x[col]
    x[x < 1e-13] = 0.0
    return x / np.where(x.sum(axis=0) > 0, x.sum(axis=0), 1.0)


def _refine_untied(game: ThrottlingGame, alpha: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exact multipliers for budget-bound buyers that share no good with a tie:
    alpha_i = B_i / (value of the goods they win)."""
    alpha = alpha.copy()
    won = (x * game.bids).sum(axis=1)
    shared = (x > 0).sum(axis=0) > 1
    for i in np.flatnonzero(game.bounded & (alpha < 1) & (won > 0)):
        if not np.any(shared & (x[i] > 0)):
            alpha[i] = min(1.0, game.budget_vector[i] / won[i])
    return alpha


def solve_fp_pacing(game: ThrottlingGame, delta: float, tol: float = DEFAULT_TOL) -> PacingProfile:
    """First-price pacing equilibrium, certified at level delta.

    The multipliers come from the pacing convex program; near-ties are then
    made exact, and the allocation is a priority award when that is within
    budget and a fractional split among tied bids otherwise.  If rounding
    leaves a budget marginally exceeded, all multipliers shrink by a common
    factor (just enough, or 1 - delta/2 as a fallback), which keeps ties and
    the allocation intact.
    """
    delta = check_delta(delta, lo_open=True, hi=0.5)
    alpha = _snap_ties(game, _pacing_multipliers(game))
    alpha[alpha > 1 - 1e-9] = 1.0
    for x in (_priority_award(game, alpha), _split_award(game, alpha, tol)):
        refined = _refine_untied(game, alpha, x)
        spent = (x * paced_prices(game, refined)[None, :]).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            excess = np.where(spent > 0, game.budget_vector / spent, np.inf).min()
        for candidate in (refined, refined * min(1.0, excess), refined * (1 - delta / 2)):
            pacing = PacingProfile(candidate, Allocation(x))
            if verify_pacing_equilibrium(game, pacing, delta, FIRST_PRICE, tol):
                return pacing
    raise RuntimeError("pacing solution failed certification")
