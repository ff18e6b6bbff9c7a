"""
Report assembly: CSV tables, JSON fits, SVG lifespan plots and a markdown summary.

Plots use log log T against log(1/ε), so each exponential regime is a straight line
whose slope is its exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from src.errors import InsufficientDataError
from src.fit import FitResult, default_model, fit_scaling
from src.lifespan_oracle import log_weighted_exponent
from src.sweep import TABLE_COLUMNS, LifespanTable
from src.utils.logutils import get_logger, color, bold, indent, GREEN, RED, YELLOW, ICONS
from src.writers import build_output_filename, write_csv, write_json, write_svg

logger = get_logger(__name__)

NOTES = [
    "Numerical lifespan t* is the first time the sup-norm crosses the blow-up threshold; "
    "its relation to the maximal existence time is heuristic.",
    "Initial data have Re f = 0 and -Im f equal to the family profile outside R0.",
    "ODE radii solve the extremal equation dY/ds = C (eps b(s) + kappa Y)^p0 in s = log R.",
]


@dataclass
class ReportResult:
    paths: list[Path] = field(default_factory=list)
    exit_code: int = 0
    summary: str = ""


def _plot_rows(table: LifespanTable):
    pts = [
        (math.log(1.0 / r["epsilon"]), math.log(r["log_lifespan"]), r["epsilon"])
        for r in table.successful()
        if r.get("log_lifespan") is not None and r["log_lifespan"] > 0
    ]
    return [np.array(v) for v in zip(*pts)] if pts else (np.array([]),) * 3


def _bound_exponent(table: LifespanTable) -> float | None:
    meta = table.metadata
    if meta.get("family", "log_weighted") != "log_weighted" or meta.get("alpha") is None:
        return None
    return float(log_weighted_exponent(int(meta["d"]), meta["alpha"]))


def _abscissa(eps: np.ndarray, model: str) -> np.ndarray:
    if model == "log_corrected":
        return np.log(1.0 / (eps * np.log(1.0 / eps)))
    return np.log(1.0 / eps)


def plot_lifespans(tables: list[LifespanTable], fits: dict[str, FitResult], title: str):
    fig, ax = plt.subplots(figsize=(7, 5))
    for table in tables:
        x, y, eps = _plot_rows(table)
        if not x.size:
            continue
        label = table.artifact.replace("_table", "")
        points = ax.plot(x, y, "o", label=label)[0]

        fit = fits.get(table.artifact)
        if fit is not None and fit.model != "power":
            grid_eps = np.geomspace(eps.min(), eps.max(), 50)
            fx = _abscissa(grid_eps, fit.model)
            ax.plot(
                np.log(1.0 / grid_eps),
                fit.intercept + fit.exponent * fx,
                "-",
                color=points.get_color(),
                label=f"{label} fit: slope {fit.exponent:.4f}",
            )

        exponent = _bound_exponent(table)
        if exponent is not None and fit is not None:
            model_x = _abscissa(eps, fit.model)
            log_C = float(np.mean(y - exponent * model_x))
            grid_eps = np.geomspace(eps.min(), eps.max(), 50)
            ax.plot(
                np.log(1.0 / grid_eps),
                log_C + exponent * _abscissa(grid_eps, fit.model),
                "--",
                color=points.get_color(),
                alpha=0.6,
                label=f"{label} bound: exponent {exponent:.4f}, C={math.exp(log_C):.3g}",
            )

    ax.set_xlabel("log(1/eps)")
    ax.set_ylabel("log log T")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return fig


def _summary(scenario, tables, fits, checks) -> str:
    lines = [f"# {scenario}", ""]
    if not any(t.successful() for t in tables):
        lines += ["no rows", ""]
        return "\n".join(lines)

    lines += [
        "| table | engine | rows ok | failed | fit model | exponent | R² |",
        "|---|---|---|---|---|---|---|",
    ]
    for t in tables:
        fit = fits.get(t.artifact)
        fit_cells = (
            f"{fit.model} | {fit.exponent:.6f} | {fit.r_squared:.6f}" if fit else "- | - | -"
        )
        counts = f"{len(t.successful())} | {len(t.failed())}"
        lines.append(f"| {t.artifact} | {t.engine} | {counts} | {fit_cells} |")
    lines.append("")

    if checks:
        lines += ["## Checks", ""]
        for name, ok in checks.items():
            lines.append(f"- {name}: {'pass' if ok else 'FAIL'}")
        lines.append("")

    lines += ["## Notes", ""] + [f"- {n}" for n in NOTES] + [""]
    return "\n".join(lines)


def report(
    tables: list[LifespanTable],
    output_dir: Path,
    scenario: str,
    fits: dict[str, FitResult] | None = None,
    checks: dict[str, bool] | None = None,
) -> ReportResult:
    """Write all artifacts; exit code 1 when there are no rows, failed rows or failed checks."""
    result = ReportResult()
    checks = dict(checks or {})

    if fits is None:
        fits = {}
        for table in tables:
            try:
                fits[table.artifact] = fit_scaling(table, default_model(table.metadata))
            except InsufficientDataError as exc:
                logger.info(indent(color(f"{ICONS['skip']} {table.artifact}: {exc}", YELLOW)))

    for table in tables:
        path = build_output_filename(output_dir, scenario, table.artifact, "csv")
        result.paths.append(write_csv(table.rows, path, columns=TABLE_COLUMNS))

    if fits:
        path = build_output_filename(output_dir, scenario, "fits", "json")
        result.paths.append(write_json({k: f.as_dict() for k, f in fits.items()}, path))

    has_rows = any(t.successful() for t in tables)
    if has_rows:
        fig = plot_lifespans(tables, fits, title=scenario)
        svg_path = build_output_filename(output_dir, scenario, "lifespan", "svg")
        result.paths.append(write_svg(fig, svg_path))

    result.summary = _summary(scenario, tables, fits, checks)
    summary_path = build_output_filename(output_dir, scenario, "summary", "md")
    summary_path.write_text(result.summary, encoding="utf-8")
    result.paths.append(summary_path)

    failed_rows = sum(len(t.failed()) for t in tables)
    if not has_rows or failed_rows or not all(checks.values()):
        result.exit_code = 1
        logger.info(indent(color(f"{ICONS['warn']} Report flags violations (exit 1)", RED)))
    else:
        written = bold(str(len(result.paths)))
        logger.info(indent(color(f"{ICONS['ok']} Report written: {written} files", GREEN)))
    return result
