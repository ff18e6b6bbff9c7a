import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from src.errors import ConfigurationError
from src.initial_data import DatumSpec, Grid
from src.lifespan_oracle import DEFAULT_C_ODE
from src.nonlinearity import HomogeneousNonlinearity, nonlinearity_from_spec
from src.solver import SolverConfig
from src.utils.logutils import get_logger, color, bold, indent, CYAN, ICONS

logger = get_logger(__name__)

BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", BASE_DIR / "data/processed"))

DEFAULT_PDE_LADDER = {"start": 0.5, "stop": 0.05, "points": 8}


FIELD_MAP = {
    # --- grid ---
    "d": ["d", "dim", "dimension"],
    "M": ["M", "points", "n_points"],
    "L": ["L", "half_width", "box"],
    "truncation_tol": ["truncation_tol", "edge_tol"],
    # --- datum ---
    "family": ["family", "kind"],
    "alpha": ["alpha", "log_weight"],
    "k": ["k", "decay_rate"],
    "R0": ["R0", "r0", "inner_radius"],
    "epsilon": ["epsilon", "eps", "amplitude"],
    "inner_fill": ["inner_fill", "fill"],
    "smoothing_width": ["smoothing_width", "smoothing", "collar"],
    # --- solver ---
    "T_end": ["T_end", "t_end", "horizon"],
    "dt_init": ["dt_init", "dt"],
    "dt_min": ["dt_min"],
    "dt_max": ["dt_max", "max_step"],
    "blowup_factor": ["blowup_factor"],
    "blowup_sup_threshold": ["blowup_sup_threshold", "sup_threshold"],
    "growth_check": ["growth_check", "growth"],
    "nonlinear_substeps": ["nonlinear_substeps", "substeps"],
    "snapshot_every": ["snapshot_every", "cadence"],
    "keep_snapshots": ["keep_snapshots", "snapshots"],
    "boundary_tol": ["boundary_tol"],
    # --- sweep / oracle ---
    "epsilons": ["epsilons", "eps_list", "ladder"],
    "workers": ["workers", "max_workers"],
    "refine": ["refine", "refinement"],
    "alphas": ["alphas", "alpha_list", "alpha"],
    "mu": ["mu", "margin"],
    "C_forcing": ["C_forcing", "forcing"],
    "C_ode": ["C_ode"],
    "threshold": ["threshold", "escape_threshold"],
    # --- top level ---
    "scenario": ["scenario", "name"],
    "R_list": ["R_list", "R_grid", "radii"],
    "output_dir": ["output_dir", "out"],
}


def get_first(record: dict, keys: list[str], default=None):
    """Return the first non-empty value among the given keys."""
    for key in keys:
        value = record.get(key)
        if value not in ("", None):
            return value
    return default


def pick(record: dict, name: str, default=None):
    return get_first(record, FIELD_MAP[name], default)


@dataclass(frozen=True)
class SweepSpec:
    epsilons: tuple[float, ...]
    workers: int = 1
    refine: bool = False


@dataclass(frozen=True)
class OracleSpec:
    alphas: tuple[float, ...] = (0.0, 1.0, 2.0)
    d: int = 1
    mu: float = 1.0
    C_forcing: float = 1.0
    C_ode: float = DEFAULT_C_ODE
    threshold: float = 1e12


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: Grid
    datum: DatumSpec
    nonlinearity: HomogeneousNonlinearity
    nonlinearity_spec: object
    solver: SolverConfig
    R_list: tuple[float, ...]
    sweep: SweepSpec
    oracle: OracleSpec
    output_dir: Path
    seed: int | None = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def with_output_dir(self, output_dir: Path) -> "RunConfig":
        return replace(self, output_dir=Path(output_dir))


def parse_ladder(value) -> tuple[float, ...]:
    """
    A list of ε values, or {start, stop, points} log-spaced from start down to stop.
    The result must be strictly decreasing.
    """
    if isinstance(value, dict):
        start = float(get_first(value, ["start", "max"]))
        stop = float(get_first(value, ["stop", "min"]))
        points = int(get_first(value, ["points", "n"], 8))
        if start <= stop or stop <= 0 or points < 2:
            raise ConfigurationError(f"ladder needs start > stop > 0 and points >= 2: {value}")
        epsilons = tuple(float(e) for e in np.geomspace(start, stop, points))
    else:
        epsilons = tuple(float(e) for e in value)

    if not epsilons or any(e <= 0 for e in epsilons):
        raise ConfigurationError("ε ladder must be non-empty and positive")
    if any(a <= b for a, b in zip(epsilons, epsilons[1:])):
        raise ConfigurationError(f"ε ladder must be strictly decreasing: {epsilons}")
    return epsilons


def _build_grid(section: dict) -> Grid:
    return Grid(
        d=int(pick(section, "d", 1)),
        M=int(pick(section, "M", 1024)),
        L=float(pick(section, "L", 64.0)),
        truncation_tol=float(pick(section, "truncation_tol", 1e-2)),
    )


def _build_datum(section: dict, grid: Grid) -> DatumSpec:
    width = pick(section, "smoothing_width", 0.0)
    if isinstance(width, str):
        if width.strip().lower() != "auto":
            raise ConfigurationError(f"smoothing_width must be a number or 'auto', got {width!r}")
        width = 2.0 * grid.h
    k = pick(section, "k")
    datum = DatumSpec(
        family=str(pick(section, "family", "log_weighted")),
        epsilon=float(pick(section, "epsilon", 0.5)),
        R0=float(pick(section, "R0", 2.0)),
        alpha=float(pick(section, "alpha", 0.0)),
        k=None if k is None else float(k),
        inner_fill=float(pick(section, "inner_fill", 0.0)),
        smoothing_width=float(width),
    )
    datum.validate(grid.d)
    if grid.L <= 2.0 * datum.R0:
        raise ConfigurationError(f"box half-width L={grid.L} must exceed 2 R0 = {2 * datum.R0}")
    return datum


def _build_solver(section: dict, R_list: tuple[float, ...]) -> SolverConfig:
    threshold = pick(section, "blowup_sup_threshold")
    dt_max = pick(section, "dt_max")
    return SolverConfig(
        T_end=float(pick(section, "T_end", 1.0)),
        dt_init=float(pick(section, "dt_init", 1e-3)),
        dt_min=float(pick(section, "dt_min", 1e-8)),
        dt_max=None if dt_max is None else float(dt_max),
        blowup_factor=float(pick(section, "blowup_factor", 1e6)),
        blowup_sup_threshold=None if threshold is None else float(threshold),
        growth_check=float(pick(section, "growth_check", 2.0)),
        nonlinear_substeps=int(pick(section, "nonlinear_substeps", 4)),
        snapshot_every=int(pick(section, "snapshot_every", 10)),
        keep_snapshots=bool(pick(section, "keep_snapshots", True)),
        R_list=R_list,
        boundary_tol=float(pick(section, "boundary_tol", 1e-6)),
    )


def _build_oracle(section: dict, d: int) -> OracleSpec:
    alphas = pick(section, "alphas", (0.0, 1.0, 2.0))
    if isinstance(alphas, (int, float)):
        alphas = (alphas,)
    return OracleSpec(
        alphas=tuple(float(a) for a in alphas),
        d=int(pick(section, "d", d)),
        mu=float(pick(section, "mu", 1.0)),
        C_forcing=float(pick(section, "C_forcing", 1.0)),
        C_ode=float(pick(section, "C_ode", DEFAULT_C_ODE)),
        threshold=float(pick(section, "threshold", 1e12)),
    )


def build_run_config(
    raw: dict, output_dir: Path | None = None, seed: int | None = None
) -> RunConfig:
    """Assemble and validate a RunConfig from a parsed TOML/JSON document."""
    if not isinstance(raw, dict):
        raise ConfigurationError("run config must be a table/object at the top level")

    scenario = str(pick(raw, "scenario", "scenario"))
    logger.info(indent(color(f"{ICONS['scan']} Building config for {bold(scenario)}", CYAN)))

    grid = _build_grid(raw.get("grid", {}))
    datum = _build_datum(raw.get("datum", {}), grid)
    nl_spec = raw.get("nonlinearity", "constant")
    nonlinearity = nonlinearity_from_spec(nl_spec, grid.d)
    R_list = tuple(float(R) for R in pick(raw, "R_list", ()))
    solver = _build_solver(raw.get("solver", {}), R_list)

    sweep_section = raw.get("sweep", {})
    sweep = SweepSpec(
        epsilons=parse_ladder(pick(sweep_section, "epsilons", DEFAULT_PDE_LADDER)),
        workers=max(1, int(pick(sweep_section, "workers", 1))),
        refine=bool(pick(sweep_section, "refine", False)),
    )
    oracle = _build_oracle(raw.get("oracle", {}), grid.d)

    out = output_dir or pick(raw, "output_dir") or OUTPUT_DIR
    return RunConfig(
        scenario=scenario,
        grid=grid,
        datum=datum,
        nonlinearity=nonlinearity,
        nonlinearity_spec=nl_spec,
        solver=solver,
        R_list=R_list,
        sweep=sweep,
        oracle=oracle,
        output_dir=Path(out),
        seed=seed,
        raw=raw,
    )
