"""
ε-sweeps of the PDE solver and of the ODE oracle.

Each ε is an independent row; rows run in a thread pool and a row that raises is
recorded as failed without stopping the others.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

from src.config import RunConfig
from src.errors import ConfigurationError, LabError
from src.initial_data import sample_datum
from src.lifespan_oracle import (
    OdeModel,
    RegimeParams,
    bound_formula,
    log_log_weighted_bound,
    ode_blowup_radius,
)
from src.solver import run
from src.utils.logutils import get_logger, color, bold, indent, CYAN, GREEN, RED, YELLOW, ICONS
from src.writers import build_output_filename, write_csv

logger = get_logger(__name__)

Engine = Literal["pde", "ode"]
REFINEMENT_TOL = 0.10
ARTIFACT_PATTERN = re.compile(r"(?P<engine>ode|pde)(?:_alpha(?P<alpha>[^_]+))?_table$")

TABLE_COLUMNS = [
    "epsilon",
    "d",
    "alpha",
    "lifespan",
    "log_lifespan",
    "verdict",
    "refined",
    "refined_lifespan",
    "refinement_change",
    "stable",
    "bound_formula",
    "log_bound",
    "ratio",
    "status",
    "message",
]


@dataclass
class LifespanTable:
    engine: str
    scenario: str
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def artifact(self) -> str:
        if self.engine == "ode":
            return f"ode_alpha{self.metadata.get('alpha', 0):g}_table"
        return f"{self.engine}_table"

    @classmethod
    def from_rows(cls, rows: list[dict], scenario: str, name: str, fallback: dict) -> LifespanTable:
        """
        A table read back from disk. d and α come from the rows' own columns, then from
        the artifact name (e.g. `..._ode_alpha1_table`), then from `fallback`.
        """
        parsed = regime_from_artifact(name)
        engine = parsed.pop("engine", "file")
        metadata = {**fallback, **parsed}
        for key in ("d", "alpha"):
            values = {r[key] for r in rows if isinstance(r.get(key), float)}
            if len(values) > 1:
                raise ConfigurationError(f"table {name} mixes {key} values {sorted(values)}")
            if values:
                metadata[key] = values.pop()
        if metadata.get("d") is not None:
            metadata["d"] = int(metadata["d"])
        return cls(engine=engine, scenario=scenario, rows=rows, metadata=metadata)

    def successful(self) -> list[dict]:
        """Rows with a finite log-lifespan; ODE radii may overflow while their logs do not."""
        return [
            r
            for r in self.rows
            if r.get("status") == "ok"
            and isinstance(r.get("log_lifespan"), float)
            and math.isfinite(r["log_lifespan"])
        ]

    def failed(self) -> list[dict]:
        return [r for r in self.rows if r.get("status") == "failed"]


def regime_from_artifact(name: str) -> dict:
    """engine, plus α for ODE tables, parsed from a table file stem; {} if it does not match."""
    match = ARTIFACT_PATTERN.search(name)
    if match is None:
        return {}
    parsed = {"engine": match["engine"]}
    if match["alpha"] is not None:
        try:
            parsed["alpha"] = float(match["alpha"])
        except ValueError:
            raise ConfigurationError(f"cannot read α from table name {name!r}") from None
    return parsed


def _failed_row(epsilon: float, exc: Exception) -> dict:
    logger.info(indent(color(f"{ICONS['err']} ε={epsilon:.4g} failed: {exc}", RED), 2))
    return {"epsilon": epsilon, "status": "failed", "message": str(exc)}


def _pde_lifespan(config: RunConfig, epsilon: float, grid, solver_config):
    datum = config.datum.with_epsilon(epsilon)
    u0 = sample_datum(datum, grid)
    return run(u0, replace(solver_config, keep_snapshots=False, R_list=()), config.nonlinearity)


def _pde_row(config: RunConfig, epsilon: float) -> dict:
    try:
        traj = _pde_lifespan(config, epsilon, config.grid, config.solver)
    except (LabError, ValueError, ArithmeticError) as exc:
        return _failed_row(epsilon, exc)

    verdict = traj.verdict
    row = {
        "epsilon": epsilon,
        "verdict": verdict.label,
        "refined": False,
        "status": "ok",
    }
    if verdict.is_blowup:
        row["lifespan"] = verdict.time
        row["log_lifespan"] = math.log(verdict.time) if verdict.time > 0 else -math.inf
    else:
        row["lifespan"] = math.inf

    if config.sweep.refine and verdict.is_blowup:
        try:
            fine = _pde_lifespan(config, epsilon, config.grid.refined(), config.solver.refined())
        except (LabError, ValueError, ArithmeticError) as exc:
            return {**row, "refined": True, "stable": False, "message": f"refinement: {exc}"}
        change = (
            abs(fine.verdict.time - verdict.time) / verdict.time
            if fine.verdict.is_blowup
            else math.inf
        )
        row.update(
            refined=True,
            refined_lifespan=fine.verdict.time if fine.verdict.is_blowup else math.inf,
            refinement_change=change,
            stable=change < REFINEMENT_TOL,
        )

    logger.info(
        indent(
            color(
                f"{ICONS['result']} ε={epsilon:.4g}: {verdict.label} at t={verdict.time:.5g}",
                CYAN,
            ),
            2,
        )
    )
    return row


def _ode_row(config: RunConfig, alpha: float, epsilon: float) -> dict:
    oracle = config.oracle
    try:
        model = OdeModel.for_regime(
            oracle.d, alpha, mu=oracle.mu, C_forcing=oracle.C_forcing, C_ode=oracle.C_ode
        )
        result = ode_blowup_radius(model, epsilon, threshold=oracle.threshold)
        log_bound = (
            log_log_weighted_bound(RegimeParams(d=oracle.d, epsilon=epsilon, alpha=alpha))
            if alpha != 1 or epsilon < 1
            else math.nan
        )
    except (LabError, ValueError, ArithmeticError) as exc:
        return _failed_row(epsilon, exc)

    row = {
        "epsilon": epsilon,
        "verdict": "blowup" if result.detected else "no_blowup_detected",
        "bound_formula": bound_formula(oracle.d, alpha),
        "log_bound": log_bound,
        "status": "ok",
    }
    if result.detected:
        row["lifespan"] = result.R_star
        row["log_lifespan"] = result.log_R_star
        row["ratio"] = result.log_R_star / log_bound if log_bound else math.nan
    else:
        row["lifespan"] = math.inf
        row["message"] = f"scanned log R in [{result.scanned[0]:g}, {result.scanned[1]:g}]"
    return row


def sweep(
    config: RunConfig,
    engine: Engine,
    alpha: float | None = None,
    workers: int | None = None,
    persist: bool = True,
) -> LifespanTable:
    """Run every ε of the ladder with the chosen engine; persist the table as CSV."""
    if engine not in ("pde", "ode"):
        raise ConfigurationError(f"unknown engine {engine!r}")

    epsilons = config.sweep.epsilons
    workers = workers or config.sweep.workers

    if engine == "pde":
        if config.grid.d not in (1, 2):
            raise ConfigurationError("pde engine supports d in {1, 2}")
        metadata = {
            "d": config.grid.d,
            "family": config.datum.family,
            "alpha": config.datum.alpha,
            "k": config.datum.k,
            "M": config.grid.M,
            "L": config.grid.L,
            "nonlinearity": str(config.nonlinearity_spec),
        }

        def work(eps):
            return _pde_row(config, eps)

    else:
        alpha = config.datum.alpha if alpha is None else alpha
        metadata = {
            "d": config.oracle.d,
            "alpha": alpha,
            "mu": config.oracle.mu,
            "bound_formula": bound_formula(config.oracle.d, alpha),
        }

        def work(eps):
            return _ode_row(config, alpha, eps)

    logger.info(
        indent(
            color(
                f"{ICONS['lab']} Sweeping {bold(str(len(epsilons)))} ε values "
                f"({engine}, workers={workers})",
                CYAN,
            )
        )
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(work, epsilons))
    regime = {"d": metadata["d"], "alpha": metadata["alpha"]}
    rows = [{**row, **regime} for row in rows]

    table = LifespanTable(engine=engine, scenario=config.scenario, rows=rows, metadata=metadata)
    failed = len(table.failed())
    tint = GREEN if not failed else YELLOW
    logger.info(
        indent(color(f"{ICONS['ok']} {len(table.successful())} rows ok, {failed} failed", tint))
    )

    if persist:
        path = build_output_filename(config.output_dir, config.scenario, table.artifact, "csv")
        write_csv(table.rows, path, columns=TABLE_COLUMNS)
    return table
