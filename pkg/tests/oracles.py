"""Independent reference computations used by the tests.

Everything here is deliberately slow and direct: enumeration over all
participation outcomes, bisection on scalar equations, grid search over
allocations.  Nothing imports the package's payment code.
"""

import itertools
import math

import numpy as np


def winner_order(bids, priority, j):
    """Positive bidders on good j, best first; ties go to the earlier buyer in priority[j]."""
    n = bids.shape[0]
    prio = list(priority[j]) if priority is not None else list(range(n))
    pos = {b: k for k, b in enumerate(prio)}
    return sorted((i for i in range(n) if bids[i, j] > 0), key=lambda i: (-bids[i, j], pos[i]))


def brute_force_payments(bids, theta, second_price=False, priority=None):
    """Expected payment matrix by summing over all 2^n participation outcomes."""
    bids = np.asarray(bids, dtype=float)
    n, m = bids.shape
    orders = [winner_order(bids, priority, j) for j in range(m)]
    out = np.zeros((n, m))
    for present in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for i in range(n):
            prob *= theta[i] if present[i] else 1.0 - theta[i]
        if prob == 0.0:
            continue
        for j in range(m):
            here = [i for i in orders[j] if present[i]]
            if not here:
                continue
            w = here[0]
            if second_price:
                price = bids[here[1], j] if len(here) > 1 else 0.0
            else:
                price = bids[w, j]
            out[w, j] += prob * price
    return out


def bisect(f, lo, hi, iters=200):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def two_buyer_fp_root():
    """Root of 2 t1 (2 - t2) = 2 and 3 t2 + (1 - t1) t2 = 1 by bisection on t2."""
    def residual(t2):
        t1 = 1.0 / (2.0 - t2)
        return 3 * t2 + (1 - t1) * t2 - 1
    t2 = bisect(residual, 0.0, 1.0)
    return np.array([1.0 / (2.0 - t2), t2])


def two_buyer_fp_residuals(theta):
    t1, t2 = theta
    return 2 * t1 * (2 - t2) - 2, 3 * t2 + (1 - t1) * t2 - 1


def sqrt3_profile():
    t2 = (math.sqrt(3) - 1) / 2
    return np.array([1 / (1 + t2), t2, 1.0])


def best_lw_on_grid(bids, budgets, steps=60):
    """Max liquid welfare over grid splits of every good (tiny games only)."""
    bids = np.asarray(bids, dtype=float)
    n, m = bids.shape
    budgets = np.asarray(budgets, dtype=float)
    shares = np.array(list(_compositions(steps, n))) / steps
    value = [shares * bids[:, j] for j in range(m)]
    best = -1.0
    for combo in itertools.product(range(len(shares)), repeat=m - 1):
        fixed = sum((value[j][k] for j, k in enumerate(combo)), np.zeros(n))
        lw = np.minimum(fixed + value[m - 1], budgets).sum(axis=1)
        best = max(best, float(lw.max()))
    return best


def _compositions(total, parts):
    """All ways to write at most ``total`` as an ordered sum of ``parts`` non-negative ints."""
    for cut in itertools.product(range(total + 1), repeat=parts):
        if sum(cut) <= total:
            yield cut


def random_two_bid_games(count, seed, max_n=5, max_m=5):
    """Random second-price games with at most two positive bids per good."""
    from throttling import UNBOUNDED, ThrottlingGame

    rng = np.random.default_rng(seed)
    games = []
    while len(games) < count:
        n, m = int(rng.integers(2, max_n + 1)), int(rng.integers(1, max_m + 1))
        bids = np.zeros((n, m))
        for j in range(m):
            who = rng.choice(n, size=int(rng.integers(1, 3)), replace=False)
            bids[who, j] = rng.uniform(0.1, 2.0, size=who.size)
        budgets = tuple(UNBOUNDED if rng.random() < 0.15 else float(rng.uniform(0.05, 1.5)) for _ in range(n))
        games.append(ThrottlingGame(bids, budgets))
    return games


def satisfying_assignments(var_count, clauses):
    """All satisfying assignments by enumeration."""
    out = []
    for bits in itertools.product((False, True), repeat=var_count):
        if all(any((lit > 0) == bits[abs(lit) - 1] for lit in c) for c in clauses):
            out.append(bits)
    return out


def planted_3sat(var_count, clause_count, rng):
    """Random 3-literal clauses (fewer when var_count < 3), each satisfied by a hidden assignment."""
    hidden = rng.random(var_count) < 0.5
    width = min(3, var_count)
    clauses = []
    while len(clauses) < clause_count:
        vs = rng.choice(var_count, size=width, replace=False) + 1
        lits = [int(v) if rng.random() < 0.5 else -int(v) for v in vs]
        if any((lit > 0) == hidden[abs(lit) - 1] for lit in lits):
            clauses.append(tuple(lits))
    return clauses
