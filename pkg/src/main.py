import sys, os
import argparse
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from src.config import BASE_DIR, build_run_config
from src.diagnostics import default_test_functions, verify_weak_identity
from src.errors import ConfigurationError, DomainError, InvalidMollifierError, LabError
from src.fit import MODEL_TRANSFORMS, default_model, fit_scaling
from src.initial_data import sample_datum, verify_decay
from src.lifespan_oracle import empirical_inequality_check
from src.nonlinearity import (
    decomposition_residual,
    fourier_coefficients,
    margin_mu,
    named_symbol,
    parseval_error,
)
from src.readers import read_config, read_table
from src.report import report
from src.solver import observed_order, run
from src.sweep import LifespanTable, regime_from_artifact, sweep
from src.testfunc import (
    CutoffFamily,
    default_samples,
    derivative_budget,
    log_integral_bound,
    pairing_bound_rows,
    pairing_threshold,
)
from src.utils.logutils import (
    get_logger,
    set_level,
    color,
    bold,
    indent,
    CYAN,
    GREEN,
    YELLOW,
    MAGENTA,
    RED,
    ICONS,
)
from src.version import __version__ as version
from src.writers import build_output_filename, write_csv, write_json, write_trajectory

logger = get_logger("main")


DEFAULT_CONFIG = BASE_DIR / os.getenv("LAB_CONFIG", "data/configs/blowup_ladder.toml")
PAIRING_RATIO_SPREAD = 4.0
BUDGET_R_GRID = (1.0, 10.0, 100.0, 1000.0)


def _budget(config, d: int | None = None):
    d = config.grid.d if d is None else d
    seed = 0 if config.seed is None else config.seed
    return derivative_budget(
        CutoffFamily(d), BUDGET_R_GRID, default_samples(seed=seed), R0=config.datum.R0
    )


# ----------------- COMMANDS -----------------


def run_decompose(config, args) -> int:
    logger.info(color(" [1/2] Decompose", YELLOW))
    d = config.grid.d
    symbol = named_symbol(args.symbol) if args.symbol else config.nonlinearity.symbol
    table = fourier_coefficients(symbol, args.order, d=d)

    logger.info(color(" [2/2] Verify", YELLOW))
    parseval = parseval_error(symbol, table)
    residual = decomposition_residual(symbol, table)
    mu = margin_mu(table)

    out = config.output_dir
    write_csv(
        [{"n": n, "re": re, "im": im} for n, re, im in table.as_rows()],
        build_output_filename(out, config.scenario, "coefficients", "csv"),
    )
    write_json(
        {
            "d": d,
            "order": table.order,
            "mu": mu,
            "l1_norm": table.l1_norm(),
            "l1_tail": table.l1_tail(table.order // 2),
            "parseval_error": parseval,
            "sup_residual": residual,
        },
        build_output_filename(out, config.scenario, "decomposition", "json"),
    )
    logger.info(
        indent(
            color(
                f"{ICONS['ok']} μ={mu:.6g}, Parseval error={parseval:.3g}, "
                f"sup residual={residual:.3g}",
                GREEN,
            )
        )
    )
    return 0


def run_pairing_bound(config, args) -> int:
    family = CutoffFamily(config.grid.d)
    alphas = config.oracle.alphas if args.all_alphas else (config.datum.alpha,)
    violations = 0

    for i, alpha in enumerate(alphas, 1):
        logger.info(color(f" [{i}/{len(alphas)}] Pairing bound α={alpha:g}", YELLOW))
        datum = replace(config.datum, alpha=alpha, family="log_weighted", epsilon=1.0)
        R1 = pairing_threshold(alpha, datum.R0)
        R_values = np.geomspace(R1 * 1.01, args.R_max, args.points)
        rows = pairing_bound_rows(datum, family, R_values)
        ratios = [r["ratio"] for r in rows]
        spread = max(ratios) / min(ratios)
        bounded = all(r["integral"] >= r["bound"] for r in rows)
        ok = spread <= PAIRING_RATIO_SPREAD and bounded
        violations += not ok

        write_csv(
            rows,
            build_output_filename(
                config.output_dir, config.scenario, f"pairing_alpha{alpha:g}", "csv"
            ),
            columns=["R", "case", "integral", "bound", "ratio"],
        )
        tint = GREEN if ok else RED
        message = f"{ICONS['result']} R1={R1:.4g}, ratio spread={spread:.3f}"
        logger.info(indent(color(message, tint)))
    return 1 if violations else 0


def run_certify_cutoffs(config, args) -> int:
    logger.info(color(" [1/2] Log-integral bound", YELLOW))
    sigma = np.linspace(0.0, 1.2, 100)
    results = {"seed": config.seed}
    path = build_output_filename(config.output_dir, config.scenario, "cutoffs", "json")
    try:
        results["log_integral_ratio"] = log_integral_bound(CutoffFamily(config.grid.d), sigma)

        logger.info(color(" [2/2] Derivative budget", YELLOW))
        for d in (1, 2):
            budget = _budget(config, d)
            results[f"d{d}"] = {"C1": budget.C1, "C2": budget.C2, "A": budget.A}
    except InvalidMollifierError as exc:
        logger.error(color(f"{ICONS['err']} Cutoff certification failed: {exc}", RED))
        results["error"] = str(exc)
        write_json(results, path)
        return 1

    write_json(results, path)
    return 0


def _order_study(config, u0) -> float:
    dts = [config.solver.dt_init * 2.0**-i for i in range(4)]
    sparse = {"keep_snapshots": True, "snapshot_every": 10**9, "R_list": ()}
    finals = []
    for dt in dts:
        traj = run(u0, replace(config.solver, dt_init=dt, **sparse), config.nonlinearity)
        finals.append(traj.snapshots[-1])
    ref_cfg = replace(config.solver, dt_init=dts[-1] / 4, **sparse)
    ref_final = run(u0, ref_cfg, config.nonlinearity).snapshots[-1]
    errors = [math.sqrt(u0.grid.integrate(np.abs(f - ref_final) ** 2)) for f in finals]
    order = observed_order(errors, dts)
    logger.info(indent(color(f"{ICONS['result']} Observed Strang order {order:.3f}", MAGENTA)))
    return order


def run_simulate(config, args) -> int:
    logger.info(color(" [1/3] Sample datum", YELLOW))
    u0 = sample_datum(config.datum, config.grid)
    decay = verify_decay(u0, config.datum, config.grid)
    logger.info(indent(color(f"{ICONS['sample']} Decay margin {decay.margin:.3g}", CYAN)))

    logger.info(color(" [2/3] Integrate", YELLOW))
    traj = run(u0, config.solver, config.nonlinearity)
    write_trajectory(traj, config.output_dir, config.scenario)

    logger.info(color(" [3/3] Checks", YELLOW))
    summary = {
        "verdict": traj.verdict.label,
        "kind": traj.verdict.kind,
        "time": traj.verdict.time,
        "decay_margin": decay.margin,
        "boundary_drift": traj.boundary_drift,
        "steps": traj.steps,
        "rejected": traj.rejected,
    }
    ok = decay.passed

    if args.check_inequality and config.R_list:
        report_ = empirical_inequality_check(
            traj,
            CutoffFamily(config.grid.d),
            config.R_list,
            config.nonlinearity.table(),
            config.datum,
            _budget(config),
        )
        summary["inequality_rows"] = report_.rows
        summary["inequality_passed"] = report_.passed
        ok = ok and report_.passed

    if args.order_study:
        summary["observed_order"] = _order_study(config, u0)

    write_json(summary, build_output_filename(config.output_dir, config.scenario, "run", "json"))
    return 0 if ok else 1


def run_sweep(config, args) -> int:
    tables = []
    if args.engine == "pde":
        logger.info(color(" [1/1] Sweep (pde)", YELLOW))
        tables.append(sweep(config, "pde"))
    else:
        for i, alpha in enumerate(config.oracle.alphas, 1):
            stage = f" [{i}/{len(config.oracle.alphas)}] Sweep (ode, α={alpha:g})"
            logger.info(color(stage, YELLOW))
            tables.append(sweep(config, "ode", alpha=alpha))
    return 1 if any(t.failed() for t in tables) else 0


def _load_table(config, path: str) -> LifespanTable:
    path = Path(path)
    if regime_from_artifact(path.stem).get("engine") == "ode":
        fallback = {"d": config.oracle.d, "family": "log_weighted", "alpha": config.datum.alpha}
    else:
        datum = config.datum
        fallback = {"d": config.grid.d, "family": datum.family, "alpha": datum.alpha, "k": datum.k}
    table = LifespanTable.from_rows(read_table(path), config.scenario, path.stem, fallback)
    meta = table.metadata
    message = f"{ICONS['scan']} {path.name}: {table.engine}, d={meta['d']}, α={meta['alpha']}"
    logger.info(indent(color(message, CYAN), 2))
    return table


def run_fit(config, args) -> int:
    table = _load_table(config, args.table)
    model = args.model or default_model(table.metadata)
    result = fit_scaling(table, model)
    write_json(
        result.as_dict(),
        build_output_filename(config.output_dir, config.scenario, f"fit_{model}", "json"),
    )
    return 0


def run_verify_weak(config, args) -> int:
    logger.info(color(" [1/2] Integrate", YELLOW))
    u0 = sample_datum(config.datum, config.grid)
    solver_cfg = replace(config.solver, keep_snapshots=True, snapshot_every=1)
    traj = run(u0, solver_cfg, config.nonlinearity)

    logger.info(color(" [2/2] Weak identity", YELLOW))
    bumps = default_test_functions(config.grid, traj.times[-1])
    results = verify_weak_identity(traj, bumps, config.nonlinearity)
    write_json(
        {"tolerance": args.tol, "results": results},
        build_output_filename(config.output_dir, config.scenario, "weak_identity", "json"),
    )
    return 0 if all(r["residual"] <= args.tol for r in results) else 1


def run_report(config, args) -> int:
    tables = []
    if args.tables:
        tables = [_load_table(config, path) for path in args.tables]
    else:
        logger.info(color(" [1/2] ODE sweeps", YELLOW))
        for alpha in config.oracle.alphas:
            tables.append(sweep(config, "ode", alpha=alpha, persist=False))

    logger.info(color(" [2/2] Report", YELLOW))
    result = report(tables, config.output_dir, config.scenario)
    return result.exit_code


COMMANDS = {
    "decompose": run_decompose,
    "pairing-bound": run_pairing_bound,
    "certify-cutoffs": run_certify_cutoffs,
    "simulate": run_simulate,
    "sweep": run_sweep,
    "fit": run_fit,
    "verify-weak": run_verify_weak,
    "report": run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nls-lifespan-lab",
        description="Small-data blow-up and lifespan scaling lab for critical homogeneous NLS.",
    )
    parser.add_argument(
        "--config", type=Path, default=DEFAULT_CONFIG, help="TOML or JSON run config"
    )
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed for cutoff sampling")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="symbol → coefficient table")
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--symbol", default=None, help="named symbol instead of the config nonlinearity")

    p = sub.add_parser("pairing-bound", help="pairing integral vs its regime lower bound")
    p.add_argument("--all-alphas", action="store_true", help="use the oracle α list")
    p.add_argument("--R-max", dest="R_max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=25)

    sub.add_parser("certify-cutoffs", help="log-integral bound and derivative budget")

    p = sub.add_parser("simulate", help="single solver run")
    p.add_argument("--check-inequality", action="store_true")
    p.add_argument("--order-study", action="store_true")

    p = sub.add_parser("sweep", help="ε-sweep with the PDE solver or the ODE oracle")
    p.add_argument("--engine", choices=["pde", "ode"], default="ode")

    p = sub.add_parser("fit", help="fit a lifespan table")
    p.add_argument("--table", required=True)
    p.add_argument("--model", choices=sorted(MODEL_TRANSFORMS), default=None)

    p = sub.add_parser("verify-weak", help="weak-identity residuals")
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("report", help="tables, fits, plots and summary")
    p.add_argument("--tables", nargs="*", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)

    banner = f"{ICONS['lab']} nls-lifespan-lab {args.command} (v{version})"
    logger.info(color(bold(banner), MAGENTA))

    try:
        config = build_run_config(read_config(args.config), output_dir=args.out, seed=args.seed)
        code = COMMANDS[args.command](config, args)

    except (ConfigurationError, DomainError) as e:
        logger.error(color(f"{ICONS['err']} Configuration error: {e}", RED))
        return 2
    except LabError as e:
        logger.error(color(f"{ICONS['err']} {args.command} failed: {e}", RED))
        return 1
    except Exception:
        # Log full traceback to logs, but still crash
        logger.exception(color(f"{ICONS['err']} Unexpected error", RED))
        raise

    logger.info(color(f"\n{ICONS['result']}  OUTPUT: {config.output_dir}", MAGENTA))
    return code


if __name__ == "__main__":
    sys.exit(main())
