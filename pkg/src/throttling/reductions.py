"""Gadget constructions: threshold games and 3-SAT encoded as second-price
throttling games."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import UNBOUNDED, GameError, ThrottlingGame

# -- threshold games ------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdGame:
    """Directed graph where node i reacts to the sum over its in-neighbors."""

    node_count: int
    edges: tuple
    epsilon: float

    def __post_init__(self):
        if self.node_count < 1:
            raise GameError("node_count: need at least one node")
        if not 0 < self.epsilon < 1:
            raise GameError(f"epsilon: must lie in (0, 1), got {self.epsilon!r}")
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        for k, (a, b) in enumerate(edges):
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise GameError(f"edges[{k}]: node index out of range")
        if len(set(edges)) != len(edges):
            raise GameError("edges: duplicate edge")
        object.__setattr__(self, "edges", edges)
        for i in range(self.node_count):
            if len(self.in_neighbors(i)) > 3 or len(self.out_neighbors(i)) > 3:
                raise GameError(f"edges: node {i} has in- or out-degree above 3")

    def in_neighbors(self, i: int) -> list:
        return [a for a, b in self.edges if b == i]

    def out_neighbors(self, i: int) -> list:
        return [b for a, b in self.edges if a == i]


def verify_threshold_equilibrium(tg: ThresholdGame, x, eps: float) -> tuple[bool, list]:
    """Check every node against the threshold rule at level eps.

    Returns (ok, failures) where failures lists (node, in-sum, x_i).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (tg.node_count,):
        raise GameError(f"x: expected length {tg.node_count}, got shape {x.shape}")
    failures = []
    for i in range(tg.node_count):
        total = float(sum(x[j] for j in tg.in_neighbors(i)))
        if total > 0.5 + eps and x[i] > eps:
            failures.append((i, total, float(x[i])))
        elif total < 0.5 - eps and x[i] < 1 - eps:
            failures.append((i, total, float(x[i])))
    return not failures, failures


@dataclass(frozen=True)
class ReductionMapping:
    strategy_buyer: tuple
    threshold_buyer: tuple
    neighbor_good: dict
    reciprocal_good: tuple
    M: float
    delta: float

    def to_json(self) -> dict:
        return {
            "strategy_buyer": list(self.strategy_buyer),
            "threshold_buyer": list(self.threshold_buyer),
            "neighbor_good": [[i, j, g] for (i, j), g in sorted(self.neighbor_good.items())],
            "reciprocal_good": list(self.reciprocal_good),
            "M": self.M,
            "delta": self.delta,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ReductionMapping":
        return cls(
            tuple(int(v) for v in doc["strategy_buyer"]),
            tuple(int(v) for v in doc["threshold_buyer"]),
            {(int(i), int(j)): int(g) for i, j, g in doc["neighbor_good"]},
            tuple(int(v) for v in doc["reciprocal_good"]),
            float(doc["M"]),
            float(doc["delta"]),
        )


def reduction_constants(eps: float) -> tuple[float, float]:
    """(delta, M) with delta = min(eps/(3+eps), eps/2, 1/4) and M = 160/delta."""
    delta = min(eps / (3 + eps), eps / 2, 0.25)
    return delta, 160.0 / delta


def threshold_to_throttling(tg: ThresholdGame) -> tuple[ThrottlingGame, ReductionMapping]:
    """Encode a threshold game as a second-price throttling game.

    Node i gets a threshold buyer T(i) (index 2i, budget 1/2) and a strategy
    buyer S(i) (index 2i+1, budget M|O_i|/2).  Goods: R(i) for each node,
    then G(i, j) for each edge j -> i.  Isolated-output nodes (|O_i| = 0)
    and self-loops are rejected since the construction degenerates there.
    """
    n = tg.node_count
    for a, b in tg.edges:
        if a == b:
            raise GameError(f"edges: self-loop at node {a} is not supported by the construction")
    for i in range(n):
        if not tg.out_neighbors(i):
            raise GameError(f"edges: node {i} has no out-neighbor, so S({i}) would get budget 0")
    delta, M = reduction_constants(tg.epsilon)
    threshold_buyer = tuple(2 * i for i in range(n))
    strategy_buyer = tuple(2 * i + 1 for i in range(n))
    reciprocal_good = tuple(range(n))
    neighbor_good = {}
    for i in range(n):
        for j in tg.in_neighbors(i):
            neighbor_good[(i, j)] = n + len(neighbor_good)
    bids = np.zeros((2 * n, n + len(neighbor_good)))
    budgets = []
    for i in range(n):
        t, s, r = threshold_buyer[i], strategy_buyer[i], reciprocal_good[i]
        out_deg = len(tg.out_neighbors(i))
        bids[t, r] = M * out_deg
        bids[s, r] = M * out_deg + 1
        for j in tg.in_neighbors(i):
            bids[t, neighbor_good[(i, j)]] = 5
            bids[s, neighbor_good[(i, j)]] = 4
        for j in tg.out_neighbors(i):
            bids[s, neighbor_good[(j, i)]] = 6
        budgets += [0.5, M * out_deg / 2]
    mapping = ReductionMapping(strategy_buyer, threshold_buyer, neighbor_good, reciprocal_good, M, delta)
    return ThrottlingGame(bids, tuple(budgets)), mapping


def extract_threshold_strategy(theta, mapping: ReductionMapping) -> np.ndarray:
    """x_i = min(2 (1 - theta_S(i)), 1)."""
    theta = np.asarray(theta, dtype=float)
    s = theta[list(mapping.strategy_buyer)]
    return np.minimum(2 * (1 - s), 1.0)


def gadget_payments(theta, tg: ThresholdGame, mapping: ReductionMapping) -> dict:
    """Closed-form second-price payments of the gadget, keyed by (buyer, good)."""
    th = np.asarray(theta, dtype=float)
    S, T, M = mapping.strategy_buyer, mapping.threshold_buyer, mapping.M
    out = {}
    for i in range(tg.node_count):
        r = mapping.reciprocal_good[i]
        out[(T[i], r)] = 0.0
        out[(S[i], r)] = th[S[i]] * th[T[i]] * M * len(tg.out_neighbors(i))
        for j in tg.in_neighbors(i):
            g = mapping.neighbor_good[(i, j)]
            out[(T[i], g)] = (1 - th[S[j]]) * th[T[i]] * th[S[i]] * 4
            out[(S[i], g)] = 0.0
        for j in tg.out_neighbors(i):
            g = mapping.neighbor_good[(j, i)]
            out[(S[i], g)] = th[S[i]] * (th[T[j]] * 5 + (1 - th[T[j]]) * th[S[j]] * 4)
    return out


# -- 3-SAT ------------------------------------------------------------------------


@dataclass(frozen=True)
class CnfFormula:
    """Clauses are tuples of non-zero ints: +k is x_k, -k is not x_k (1-based)."""

    var_count: int
    clauses: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.var_count < 1:
            raise GameError("var_count: need at least one variable")
        clauses = []
        for c, clause in enumerate(self.clauses):
            lits = tuple(dict.fromkeys(int(v) for v in clause))
            if not lits:
                raise GameError(f"clauses[{c}]: empty clause")
            if len(lits) > 3:
                raise GameError(f"clauses[{c}]: more than 3 literals")
            for v in lits:
                if v == 0 or abs(v) > self.var_count:
                    raise GameError(f"clauses[{c}]: literal {v} out of range")
            clauses.append(lits)
        object.__setattr__(self, "clauses", tuple(clauses))

    def satisfied_by(self, assignment) -> bool:
        return all(any((lit > 0) == bool(assignment[abs(lit) - 1]) for lit in clause)
                   for clause in self.clauses)


def parse_dimacs(text: str) -> CnfFormula:
    """Read a DIMACS CNF file body; clauses may span lines and end at 0."""
    var_count, clauses, current = None, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise GameError(f"line {lineno}: malformed problem line {raw!r}")
            var_count = int(parts[2])
            continue
        try:
            nums = [int(tok) for tok in line.split()]
        except ValueError:
            raise GameError(f"line {lineno}: non-integer token in {raw!r}") from None
        for v in nums:
            if v == 0:
                if current:
                    clauses.append(tuple(current))
                current = []
            else:
                current.append(v)
    if current:
        clauses.append(tuple(current))
    if var_count is None:
        raise GameError("dimacs: missing 'p cnf' line")
    return CnfFormula(var_count, tuple(clauses))


def sat_layout(cnf: CnfFormula) -> dict:
    """Index layout: buyers V1+, V1-, ..., U; goods A_i, B_i, S_i, T_i per variable, then C_j."""
    n = cnf.var_count
    return {
        "plus": [2 * i for i in range(n)],
        "minus": [2 * i + 1 for i in range(n)],
        "unbounded": 2 * n,
        "A": [4 * i for i in range(n)],
        "B": [4 * i + 1 for i in range(n)],
        "S": [4 * i + 2 for i in range(n)],
        "T": [4 * i + 3 for i in range(n)],
        "C": [4 * n + j for j in range(len(cnf.clauses))],
    }


def sat_to_rev(cnf: CnfFormula) -> tuple[ThrottlingGame, float]:
    """Second-price game whose equilibria reach revenue R = n + m + 1.5 n
    exactly when the formula is satisfiable."""
    n, m = cnf.var_count, len(cnf.clauses)
    lay = sat_layout(cnf)
    bids = np.zeros((2 * n + 1, 4 * n + m))
    u = lay["unbounded"]
    for i in range(n):
        p, q = lay["plus"][i], lay["minus"][i]
        bids[p, lay["A"][i]], bids[p, lay["B"][i]] = 2, 1
        bids[q, lay["A"][i]], bids[q, lay["B"][i]] = 1, 2
        bids[p, lay["S"][i]] = 1
        bids[q, lay["T"][i]] = 1
        bids[u, lay["S"][i]] = bids[u, lay["T"][i]] = 2
    for j, clause in enumerate(cnf.clauses):
        c = lay["C"][j]
        bids[u, c] = 2
        for lit in clause:
            bids[lay["plus" if lit > 0 else "minus"][abs(lit) - 1], c] = 1
    budgets = (0.5,) * (2 * n) + (UNBOUNDED,)
    return ThrottlingGame(bids, budgets), n + m + 1.5 * n


def assignment_to_equilibrium(cnf: CnfFormula, assignment) -> np.ndarray:
    """theta(V_i+) = 1, theta(V_i-) = 1/2 for a true variable, swapped for false; theta(U) = 1."""
    assignment = list(assignment)
    if len(assignment) != cnf.var_count:
        raise GameError(f"assignment: expected {cnf.var_count} values, got {len(assignment)}")
    theta = np.ones(2 * cnf.var_count + 1)
    for i, value in enumerate(assignment):
        theta[2 * i + (1 if value else 0)] = 0.5
    return theta
