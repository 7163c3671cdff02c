"""Command line front end.

Subcommands: `run` (campaign -> csv/json, optional figures), `oracle`
(hierarchical vs exhaustive objective ratios on small instances),
`selftest` (fast invariant suite), `report` (figures from a saved JSON).

Exit codes: 0 success, 1 configuration/usage error, 2 failed checks,
3 execution failure.
"""

import argparse
import sys
import time

import numpy as np

from ..beamsel import brute_force_central, central_objective, select_hierarchical
from ..channel import ArrayGeometry, ClusterConfig, covariance_from_clusters, draw_clusters, place_users
from ..codebook import dft_codebook
from ..errors import InfeasibleAssignmentError, NumericalDomainError, SearchSpaceError
from .campaign import run_campaign
from .config import ScenarioConfig, load_config
from .report import render_figures
from .results import emit_results, load_results
from .selftest import run_selftest

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gobsim",
        description="Grid-of-beams beam selection simulator for FDD multi-user massive MIMO",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo campaign")
    run_p.add_argument("--config", help="key=value config file (defaults built in)")
    run_p.add_argument("--seed", type=int, help="override the campaign seed")
    run_p.add_argument("--out", default="results.csv", help="output file path")
    run_p.add_argument("--format", choices=("csv", "json"),
                       help="output format (default: inferred from --out extension)")
    run_p.add_argument("--policies", help="comma-separated subset of P1,P2,P3,P4")
    run_p.add_argument("--iterations", type=int, help="override the drop count")
    run_p.add_argument("--paper-scale", action="store_true",
                       help="10000 drops instead of the desk-scale default")
    run_p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run_p.add_argument("--figures", metavar="DIR",
                       help="also render figures into DIR alongside the table")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress lines")

    oracle_p = sub.add_parser("oracle", help="hierarchical vs exhaustive comparison suite")
    oracle_p.add_argument("--small", action="store_true",
                          help="8 instances instead of the default 40")
    oracle_p.add_argument("--instances", type=int, default=40)
    oracle_p.add_argument("--seed", type=int, default=7)

    sub.add_parser("selftest", help="run the fast invariant suite")

    report_p = sub.add_parser("report", help="render figures from a saved JSON result")
    report_p.add_argument("--results", required=True, help="JSON file written by run")
    report_p.add_argument("--out-dir", default="figures")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.policies:
        overrides["policies"] = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    if args.paper_scale:
        overrides["iterations"] = 10000
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if overrides:
        cfg = cfg.replace(**overrides)

    t0 = time.time()
    if not args.quiet:
        print(f"running {cfg.iterations} drops, K={cfg.k_users}, "
              f"policies {','.join(cfg.policies)}, workers={args.workers}")
    result = run_campaign(cfg, workers=args.workers, progress=not args.quiet)
    fmt = args.format or ("json" if args.out.endswith(".json") else "csv")
    emit_results(result, fmt, args.out)
    if not args.quiet:
        print(f"done in {time.time() - t0:.1f} s -> {args.out}")
        _print_summary(result)
    if args.figures:
        for path in render_figures(result, args.figures):
            print(f"figure: {path}")
    return 0


def _print_summary(result) -> None:
    print(f"{'policy':>7} {'snr':>6} {'t_coh':>7} {'q':>3} "
          f"{'throughput':>12} {'m_bs':>6} {'omega':>7} {'gcmd':>6}")
    for c in result.cells:
        gcmd = f"{c.mean_gcmd:.3f}" if c.mean_gcmd is not None else "-"
        print(f"{c.policy:>7} {c.snr_db:>6.1f} {c.t_coh_ms:>7.1f} {c.q_bits:>3d} "
              f"{c.mean_throughput:>8.3f}+-{3 * c.stderr_throughput:<4.2f}"
              f"{c.mean_m_bs:>6.1f} {c.mean_omega:>7.4f} {gcmd:>6}")


def _cmd_oracle(args) -> int:
    n_instances = 8 if args.small else args.instances
    rng = np.random.default_rng(args.seed)
    ratios = {p: [] for p in ("P2", "P3", "P4")}
    violations = 0
    for _ in range(n_instances):
        b_bs = int(rng.integers(4, 7))
        b_ue = int(rng.integers(2, 4))
        bs_cb = dft_codebook(8, b_bs)
        ue_cb = dft_codebook(3, b_ue, side="ue")
        geom = place_users("random", 2, 200.0, 30.0, rng)
        ccfg = ClusterConfig(n_clusters=3, paths_per_cluster=8)
        stats = [
            covariance_from_clusters(draw_clusters(geom, k, ccfg, rng),
                                     ArrayGeometry(8), ArrayGeometry(3))
            for k in range(2)
        ]
        kappa = float(10 ** (rng.choice([0.0, 11.0]) / 10))
        tau, t_total = 3, int(rng.integers(60, 600))
        for policy in ratios:
            hier = select_hierarchical(policy, [0, 1], stats, bs_cb, ue_cb,
                                       1, 2, kappa, tau, t_total)
            brute = brute_force_central(policy, stats, bs_cb, ue_cb,
                                        1, 2, kappa, tau, t_total)
            hv = central_objective(policy, hier.ue_beams, stats, bs_cb, ue_cb,
                                   2, kappa, tau, t_total)
            bv = central_objective(policy, brute.ue_beams, stats, bs_cb, ue_cb,
                                   2, kappa, tau, t_total)
            if hv > bv + 1e-9:
                violations += 1
            ratios[policy].append(hv / bv if bv > 0 else 1.0)
    failed = violations > 0
    for policy, r in ratios.items():
        mean_r, min_r = float(np.mean(r)), float(np.min(r))
        ok = mean_r >= 0.85
        failed = failed or not ok
        print(f"{'PASS' if ok else 'FAIL'}  {policy}: mean ratio {mean_r:.4f}, "
              f"min {min_r:.4f} over {n_instances} instances")
    if violations:
        print(f"FAIL  {violations} instances where hierarchical exceeded exhaustive")
    return 2 if failed else 0


def _cmd_report(args) -> int:
    if not args.results.endswith(".json"):
        raise ValueError("report needs the JSON emit (config travels with it)")
    result = load_results(args.results)
    for path in render_figures(result, args.out_dir):
        print(f"figure: {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "selftest":
            return 2 if run_selftest() else 0
        if args.command == "report":
            return _cmd_report(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InfeasibleAssignmentError, NumericalDomainError, SearchSpaceError, RuntimeError) as exc:
        print(f"execution failed: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
