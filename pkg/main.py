import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from core.config import SWEEP_PARAMETERS, SimulationConfig, parse_config, resolve_n_jobs
from core.errors import ConfigSchemaError, ModeMisuseError, SimulationError
from core.physics import Role, Scheme, linewidth_wavenumber

# ==========================================
# CLI CONFIGURATION
# ==========================================
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
DEFAULT_PREFIX = "topdc"
DEFAULT_SEED_POINTS = 11
DEFAULT_SCAN_PAIR_POINTS = 101

logger = logging.getLogger("topdc-sim")


def _configure_logging(verbose: bool) -> None:
    level_name = "DEBUG" if verbose else os.getenv("TOPDC_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.INFO), format=LOG_FORMAT)


def _emit(text: str = "") -> None:
    print(text, file=sys.stdout)


def _require_non_degenerate(config: SimulationConfig, command: str) -> None:
    if config.scheme is not Scheme.NON_DEGENERATE:
        raise ModeMisuseError(f"{command} needs a non_degenerate config, got {config.scheme.value}")


# ==========================================
# COMMANDS
# ==========================================
def cmd_rates(args, config: SimulationConfig) -> int:
    """Spontaneous/stimulated rates, P_vac and the factor breakdowns."""
    from output.reports import reconciliation_report, rates_table
    from output.writers import format_table, write_table

    summary, breakdown = rates_table(config)
    _emit(format_table(summary))
    _emit()
    _emit(format_table(breakdown))

    if args.out:
        write_table(Path(f"{args.out}_rates.csv"), summary)
        write_table(Path(f"{args.out}_factors.csv"), breakdown)

    if args.reconcile:
        report, assumptions = reconciliation_report(config)
        _emit()
        _emit(format_table(report))
        _emit()
        _emit("assumptions:")
        for note in assumptions:
            _emit(f"  - {note}")
        if args.out:
            write_table(Path(f"{args.out}_reconcile.csv"), report)
    return 0


def cmd_jsi(args, config: SimulationConfig) -> int:
    """Seeded biphoton JSI, axes and Schmidt decomposition."""
    from core.jsa_analysis import run_jsi
    from output.writers import write_jsi

    _require_non_degenerate(config, "jsi")
    amp, matrix, result = run_jsi(config)
    write_jsi(Path(args.out or DEFAULT_PREFIX), matrix, result, amp.k_seed)

    _emit(f"schmidt_number: {result.schmidt_number:.12f}")
    _emit(f"converged: {'true' if result.converged else 'false'}")
    _emit(f"refinement_delta: {result.refinement_delta:.6e}")
    _emit(f"norm_residual: {matrix.norm_residual:.6e}")
    if not result.converged:
        logger.warning("⚠️ Schmidt decomposition did not converge; output written with converged=false")
    return 0


def cmd_triphoton(args, config: SimulationConfig) -> int:
    from core.wavefunction import grid_memory_bytes, triphoton_amplitude
    from output.writers import write_triphoton

    _require_non_degenerate(config, "triphoton")
    pair_grid = config.pair_grid(config.grid.triphoton_points)
    seed_grid = config.seed_grid()
    needed = grid_memory_bytes(pair_grid, seed_grid)
    if needed > config.memory_budget_bytes:
        raise ConfigSchemaError(
            "grid.triphoton_points",
            f"triphoton grid needs {needed / 2**20:.1f} MB, over memory_budget_mb = {config.grid.memory_budget_mb}",
        )

    tri = triphoton_amplitude(
        config.ring, config.envelope(), pair_grid, seed_grid,
        upsilon_offset=config.upsilon_offset,
        coverage_threshold=config.grid.coverage_threshold,
        n_jobs=resolve_n_jobs(),
    )
    write_triphoton(Path(args.out or DEFAULT_PREFIX), tri, config.ring)
    _emit(f"grid: {pair_grid.n_points} x {pair_grid.n_points} x {seed_grid.n_points}")
    _emit(f"memory_mb: {needed / 2**20:.3f}")
    return 0


def cmd_set_scan(args, config: SimulationConfig) -> int:
    """SET slices over a seed scan, with residuals against the direct triphoton."""
    from core.jsa_analysis import set_scan
    from output.writers import format_table, residual_table, write_set_scan

    _require_non_degenerate(config, "set-scan")
    s_mode = config.ring.mode(Role.S)
    seed_grid = config.seed_grid(args.seed_points, args.seed_half_width)
    result = set_scan(
        config.ring,
        config.envelope(),
        seed_grid,
        config.pair_grid(args.pair_points),
        upsilon_offset=config.upsilon_offset,
        coverage_threshold=config.grid.coverage_threshold,
        band_half_width=config.grid.half_width * linewidth_wavenumber(s_mode),
        memory_budget_bytes=config.memory_budget_bytes,
        n_jobs=resolve_n_jobs(),
    )
    write_set_scan(Path(args.out or DEFAULT_PREFIX), result)
    _emit(format_table(residual_table(result)))
    if result.marginal_distance is not None:
        _emit(f"marginal_l1_distance: {result.marginal_distance:.6e}")
    return 0


def cmd_sweep(args, config: SimulationConfig) -> int:
    from core.jsa_analysis import sweep
    from output.writers import format_table, write_table

    _require_non_degenerate(config, "sweep")
    table = sweep(args.parameter, args.values, config, n_jobs=resolve_n_jobs())
    _emit(format_table(table))
    if args.out:
        write_table(Path(f"{args.out}_sweep.csv"), table)
    return 0


def cmd_check(args) -> int:
    from core.check_suite import run_checks
    from output.writers import format_table

    report = run_checks(inject_fault=args.inject_fault)
    _emit(f"seed: {report.seed}")
    _emit(format_table(report.counts()))
    report.raise_for_failure()
    _emit("all checks passed")
    return 0


COMMANDS = {
    "rates": cmd_rates,
    "jsi": cmd_jsi,
    "triphoton": cmd_triphoton,
    "set-scan": cmd_set_scan,
    "sweep": cmd_sweep,
}


# ==========================================
# ARGUMENT PARSING
# ==========================================
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario TOML file")
    common.add_argument("--out", default=None, help="output file prefix")
    common.add_argument("--print-config", action="store_true", help="echo the resolved config and exit")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="topdc-sim", description="TOPDC microring simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    rates = sub.add_parser("rates", parents=[common], help="generation rates")
    rates.add_argument("--reconcile", action="store_true", help="compare with the quoted estimates")

    sub.add_parser("jsi", parents=[common], help="biphoton JSI and Schmidt number")
    sub.add_parser("triphoton", parents=[common], help="triphoton marginals")

    scan = sub.add_parser("set-scan", parents=[common], help="stimulated-emission tomography scan")
    scan.add_argument("--seed-points", type=int, default=DEFAULT_SEED_POINTS)
    scan.add_argument("--seed-half-width", type=float, default=None, help="in seed linewidths")
    scan.add_argument("--pair-points", type=int, default=DEFAULT_SCAN_PAIR_POINTS)

    sweep = sub.add_parser("sweep", parents=[common], help="one-parameter sweep")
    sweep.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--values", required=True, type=float, nargs="+")

    check = sub.add_parser("check", help="self-check suites")
    check.add_argument("--verbose", action="store_true", help="debug logging")
    check.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


# ==========================================
# MAIN EXECUTION
# ==========================================
def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        if args.command == "check":
            return cmd_check(args)

        config = parse_config(args.config)
        if args.print_config:
            _emit(config.to_toml().rstrip("\n"))
            return 0
        return COMMANDS[args.command](args, config)
    except SimulationError as e:
        logger.error(f"❌ {type(e).__name__}: {e.detail}")
        return e.exit_code
    except Exception as e:
        logger.error(f"❌ Unexpected failure: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
