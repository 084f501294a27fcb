"""Throttling equilibria in repeated first-price and second-price auctions
with budget-constrained buyers."""

from .core import (
    DEFAULT_TOL,
    FIRST_PRICE,
    SECOND_PRICE,
    UNBOUNDED,
    Allocation,
    AuctionFormat,
    EquilibriumCertificate,
    GameError,
    PaymentReport,
    RawMarket,
    ThrottlingGame,
    Verdict,
    Violation,
    ViolationKind,
    expected_allocation,
    expected_payments,
    is_budget_feasible,
    liquid_welfare,
    payments,
    rescale_bids,
    verify_equilibrium,
)
from .fp_solver import (
    DynamicsTrace,
    PacingProfile,
    polish_fp_equilibrium,
    solve_fp_pacing,
    solve_fp_throttling,
    verify_pacing_equilibrium,
)
from .sp_solver import (
    FixedPointConfig,
    GridOracleConfig,
    NotConverged,
    brute_force_equilibria,
    solve_sp_fixed_point,
    solve_sp_two_bid,
    sp_fixed_point_map,
)
from .reductions import (
    CnfFormula,
    ThresholdGame,
    parse_dimacs,
    sat_to_rev,
    threshold_to_throttling,
    verify_threshold_equilibrium,
)
from .analytics import optimal_liquid_welfare, poa_ratio, revenue_comparison_fp
from .generate import GeneratorSpec, generate
from .sim import SimConfig, SimReport, simulate, simulate_dynamics
