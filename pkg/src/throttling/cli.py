"""Command-line interface.  Every subcommand writes JSON to --out or stdout.

Exit codes: 0 success, 1 rejected certificate or no convergence, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .analytics import poa_example_fp, poa_example_sp, poa_ratio, revenue_comparison_fp
from .core import DEFAULT_TOL, UNBOUNDED, AuctionFormat, GameError, ThrottlingGame, verify_equilibrium
from .fp_solver import PacingProfile, solve_fp_pacing, solve_fp_throttling, verify_pacing_equilibrium
from .generate import GeneratorSpec, generate
from .reductions import (
    ReductionMapping,
    extract_threshold_strategy,
    parse_dimacs,
    sat_to_rev,
    threshold_to_throttling,
    verify_threshold_equilibrium,
)
from .sim import SimConfig, simulate, simulate_dynamics
from .sp_solver import (
    FixedPointConfig,
    GridOracleConfig,
    NotConverged,
    brute_force_equilibria,
    solve_sp_fixed_point,
    solve_sp_two_bid,
)


def _certificate_json(cert) -> dict:
    return {
        "verdict": cert.verdict.value,
        "delta": cert.delta,
        "format": cert.format.value,
        "per_buyer_spend": cert.per_buyer_spend.tolist(),
        "violations": [
            {"buyer": v.buyer, "good": v.good, "kind": v.kind.value, "magnitude": v.magnitude}
            for v in cert.violations
        ],
    }


class Context:
    def __init__(self, args):
        self.tol = args.tolerance
        self.threads = args.threads
        self.quiet = args.quiet
        self.out = getattr(args, "out", None)

    def note(self, msg: str):
        if not self.quiet:
            print(msg, file=sys.stderr)

    def emit(self, obj):
        io.write_output(obj, self.out)


def _game(path) -> ThrottlingGame:
    return io.game_from_json(io.load_json(path))


# -- subcommands -------------------------------------------------------------------


def cmd_solve(args, ctx: Context) -> int:
    game = _game(args.game)
    if args.method == "fp":
        theta, trace = solve_fp_throttling(game, args.delta, record=args.trace is not None)
        if args.trace:
            Path(args.trace).write_text(io.dumps(trace.to_json()) + "\n")
        cert = verify_equilibrium(game, theta, args.delta, "fp", ctx.tol)
        ctx.note(f"first-price dynamics: {trace.iterations} rounds (bound {trace.bound:.1f})")
        ctx.emit({"theta": theta.tolist(), "iterations": trace.iterations, "certificate": _certificate_json(cert)})
        return 0 if cert else 1
    if args.method == "fp-pacing":
        pacing = solve_fp_pacing(game, args.delta, ctx.tol)
        cert = verify_pacing_equilibrium(game, pacing, args.delta, "fp", ctx.tol)
        ctx.emit({"alpha": pacing.alpha.tolist(), "allocation": pacing.allocation.y.tolist(),
                  "certificate": _certificate_json(cert)})
        return 0 if cert else 1
    if args.method == "sp-two":
        theta, trace = solve_sp_two_bid(game, args.gamma, record=args.trace is not None)
        if args.trace:
            Path(args.trace).write_text(io.dumps(trace.to_json()) + "\n")
        cert = verify_equilibrium(game, theta, min(3 * args.gamma, 0.999), "sp", ctx.tol)
        ctx.emit({"theta": theta.tolist(), "iterations": trace.iterations, "certificate": _certificate_json(cert)})
        return 0 if cert else 1
    config = FixedPointConfig(delta=args.delta, damping=args.damping, restart_seeds=args.restarts,
                              max_iterations=args.max_iterations, seed=args.seed, tol=ctx.tol)
    result = solve_sp_fixed_point(game, config)
    if isinstance(result, NotConverged):
        ctx.note(f"no certified equilibrium after {result.iterations} iterations")
        ctx.emit({"status": "NotConverged", "best_residual": result.best_residual,
                  "best_profile": result.best_profile.tolist()})
        return 1
    cert = verify_equilibrium(game, result, args.delta, "sp", ctx.tol)
    ctx.emit({"status": "Converged", "theta": result.tolist(), "certificate": _certificate_json(cert)})
    return 0


def cmd_verify(args, ctx: Context) -> int:
    if args.kind == "threshold":
        tg = io.threshold_from_json(io.load_json(args.graph), args.epsilon)
        x = io.vector_from_json(io.load_json(args.x), "x", tg.node_count)
        ok, failures = verify_threshold_equilibrium(tg, x, tg.epsilon)
        ctx.emit({"verdict": "Accept" if ok else "Reject",
                  "failures": [{"node": i, "in_sum": s, "x": v} for i, s, v in failures]})
        return 0 if ok else 1
    if args.game is None:
        raise GameError("--game: required")
    game = _game(args.game)
    if args.kind == "pacing":
        if args.pacing is None:
            raise GameError("--pacing: required")
        doc = io.load_json(args.pacing)
        alpha = io.vector_from_json(doc, "alpha", game.n)
        x = np.array(doc.get("allocation"), dtype=float) if isinstance(doc, dict) else None
        if x is None or x.shape != game.bids.shape:
            raise GameError(f"allocation: expected an {game.n} x {game.m} matrix")
        cert = verify_pacing_equilibrium(game, PacingProfile(alpha, x), args.delta, args.format, ctx.tol)
    else:
        if args.theta is None:
            raise GameError("--theta: required")
        theta = io.vector_from_json(io.load_json(args.theta), "theta", game.n)
        cert = verify_equilibrium(game, theta, args.delta, args.format, ctx.tol)
    for v in cert.violations:
        where = f"buyer {v.buyer}" if v.good is None else f"buyer {v.buyer} good {v.good}"
        ctx.note(f"{v.kind.value}: {where}, magnitude {v.magnitude:.3g}")
    ctx.emit(_certificate_json(cert))
    return 0 if cert else 1


def cmd_oracle(args, ctx: Context) -> int:
    game = _game(args.game)
    config = GridOracleConfig(step=args.step, delta=args.delta, max_points=args.max_points,
                              tol=ctx.tol, workers=ctx.threads)
    hits = brute_force_equilibria(game, config, args.format)
    ctx.note(f"{len(hits)} grid equilibria")
    ctx.emit({"count": len(hits), "equilibria": [h.tolist() for h in hits]})
    return 0


def cmd_reduce(args, ctx: Context) -> int:
    if args.kind == "threshold":
        tg = io.threshold_from_json(io.load_json(args.graph), args.epsilon)
        game, mapping = threshold_to_throttling(tg)
        if args.mapping:
            Path(args.mapping).write_text(io.dumps(mapping.to_json()) + "\n")
        ctx.emit(io.game_to_json(game))
        return 0
    try:
        text = Path(args.cnf).read_text()
    except OSError as exc:
        raise GameError(f"{args.cnf}: {exc.strerror}") from None
    game, target = sat_to_rev(parse_dimacs(text))
    ctx.note(f"target revenue R = {target}")
    doc = io.game_to_json(game)
    doc["target_revenue"] = target
    ctx.emit(doc)
    return 0


def cmd_extract(args, ctx: Context) -> int:
    mapping = ReductionMapping.from_json(io.load_json(args.mapping))
    theta = io.vector_from_json(io.load_json(args.theta), "theta")
    ctx.emit({"x": extract_threshold_strategy(theta, mapping).tolist()})
    return 0


def cmd_compare(args, ctx: Context) -> int:
    report = revenue_comparison_fp(_game(args.game), args.delta)
    ctx.emit(report.to_json())
    return 0


def cmd_poa(args, ctx: Context) -> int:
    game = _game(args.game)
    theta = io.vector_from_json(io.load_json(args.theta), "theta", game.n)
    report = poa_ratio(game, theta, args.format, args.delta, ctx.tol)
    if not report.is_equilibrium:
        ctx.note("warning: profile is not an equilibrium at the given delta")
    ctx.emit(report.to_json())
    return 0 if report.is_equilibrium else 1


def cmd_simulate(args, ctx: Context) -> int:
    market = io.market_from_json(io.load_json(args.market))
    config = SimConfig(rounds=args.rounds, seed=args.seed, format=args.format)
    if args.dynamics:
        report = simulate_dynamics(market, args.delta, args.epoch_len, config)
        ctx.emit(report.to_json())
        return 0 if report.certificate else 1
    theta = io.vector_from_json(io.load_json(args.theta), "theta", market.raw_bids.shape[0])
    ctx.emit(simulate(market, theta, config).to_json())
    return 0


def cmd_generate(args, ctx: Context) -> int:
    spec = GeneratorSpec(n=args.n, m=args.m, lo=args.lo, hi=args.hi, distribution=args.distribution,
                         budget_tightness=args.tightness, density=args.density, seed=args.seed)
    ctx.emit(io.game_to_json(generate(spec)))
    return 0


def _named_example(name: str, m: int, eps: float) -> ThrottlingGame:
    if name == "poa-sp":
        return poa_example_sp(m, eps)
    if name == "poa-fp":
        return poa_example_fp(m)
    if name == "multiplicity":
        return ThrottlingGame([[2, 1], [1, 2]], (0.5, 0.5))
    if name == "irrational-fp":
        return ThrottlingGame([[2, 2], [1, 3]], (2, 1))
    if name == "irrational-sp":
        return ThrottlingGame([[2, 2, 0, 1], [0, 1, 4, 4], [1, 0, 2, 0]], (1, 1, UNBOUNDED))
    if name == "revenue-gap":
        return ThrottlingGame([[1 / eps], [1 - eps]], (1, UNBOUNDED))
    return ThrottlingGame([[1 + eps, 1], [1, 0]], (1 - eps, UNBOUNDED))


EXAMPLES = ("poa-sp", "poa-fp", "multiplicity", "irrational-fp", "irrational-sp", "revenue-gap", "pacing-gap")


def cmd_examples(args, ctx: Context) -> int:
    ctx.emit(io.game_to_json(_named_example(args.name, args.m, args.eps)))
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=argparse.SUPPRESS,
                        help=f"numeric tolerance for verification (default {DEFAULT_TOL})")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for the grid oracle")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="no notes on stderr")

    parser = argparse.ArgumentParser(prog="throttling", parents=[common],
                                     description="Throttling equilibria for budget-constrained auction markets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("solve", cmd_solve, "compute an equilibrium")
    p.add_argument("method", choices=["fp", "fp-pacing", "sp-two", "sp-fixed"])
    p.add_argument("--game", required=True)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iterations", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace")
    p.add_argument("--out")

    p = add("verify", cmd_verify, "check an equilibrium certificate")
    p.add_argument("kind", nargs="?", default="equilibrium", choices=["equilibrium", "pacing", "threshold"])
    p.add_argument("--game")
    p.add_argument("--theta")
    p.add_argument("--pacing", help="JSON with alpha and allocation")
    p.add_argument("--graph")
    p.add_argument("--x")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--format", default="fp", type=AuctionFormat.parse)
    p.add_argument("--out")

    p = add("oracle", cmd_oracle, "enumerate grid equilibria")
    p.add_argument("--game", required=True)
    p.add_argument("--step", type=float, default=1 / 16)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--format", default="sp", type=AuctionFormat.parse)
    p.add_argument("--max-points", type=int, default=10_000_000)
    p.add_argument("--out")

    p = add("reduce", cmd_reduce, "build a gadget game")
    p.add_argument("kind", choices=["threshold", "sat"])
    p.add_argument("--graph")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--cnf")
    p.add_argument("--mapping")
    p.add_argument("--out")

    p = add("extract", cmd_extract, "threshold strategy from a gadget profile")
    p.add_argument("--mapping", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--out")

    p = add("compare", cmd_compare, "first-price throttling vs pacing revenue")
    p.add_argument("what", choices=["revenue"])
    p.add_argument("--game", required=True)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--out")

    p = add("poa", cmd_poa, "liquid welfare ratio of a profile")
    p.add_argument("--game", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--format", default="fp", type=AuctionFormat.parse)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--out")

    p = add("simulate", cmd_simulate, "Monte-Carlo repeated auctions")
    p.add_argument("--market", required=True)
    p.add_argument("--theta")
    p.add_argument("--rounds", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", default="fp", type=AuctionFormat.parse)
    p.add_argument("--dynamics", action="store_true", help="run sampled first-price dynamics instead")
    p.add_argument("--delta", type=float, default=0.02)
    p.add_argument("--epoch-len", type=int, default=100_000)
    p.add_argument("--out")

    p = add("generate", cmd_generate, "random game")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--lo", type=float, default=0.1)
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--distribution", choices=["uniform", "loguniform"], default="uniform")
    p.add_argument("--tightness", type=float, default=1.0)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("examples", cmd_examples, "write a named example game")
    p.add_argument("name", choices=EXAMPLES)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    for name, default in (("tolerance", DEFAULT_TOL), ("threads", 1), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    ctx = Context(args)
    try:
        return args.func(args, ctx)
    except (GameError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
