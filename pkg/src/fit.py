"""
Least-squares fits of lifespan tables in linearized coordinates.

    power_log      log log T  vs  log ε                 (exp(C ε^{-a}) regimes)
    log_corrected  log log T  vs  log(ε log 1/ε)        (the α = 1 regime)
    power          log T      vs  log ε                 (C ε^{-a}, k < d)

The slope is the empirical exponent with sign, e.g. -2/3 for exp(ε^{-2/3}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.errors import ConfigurationError, InsufficientDataError
from src.utils.logutils import get_logger, color, indent, MAGENTA, ICONS

logger = get_logger(__name__)

FitModel = Literal["power_log", "log_corrected", "power"]
MIN_ROWS = 5

MODEL_TRANSFORMS = {
    "power_log": "y = log(log T), x = log(eps)",
    "log_corrected": "y = log(log T), x = log(eps * log(1/eps))",
    "power": "y = log(T), x = log(eps)",
}


@dataclass(frozen=True)
class FitResult:
    model: str
    slope: float
    intercept: float
    r_squared: float
    n_rows: int
    residuals: list[dict] = field(default_factory=list)
    regime: dict = field(default_factory=dict)

    @property
    def exponent(self) -> float:
        """Exponent of 1/ε (positive for a lifespan that grows as ε shrinks)."""
        return -self.slope

    @property
    def C_estimate(self) -> float:
        return math.exp(self.intercept)

    @property
    def transform(self) -> str:
        return MODEL_TRANSFORMS[self.model]

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "transform": self.transform,
            "slope": self.slope,
            "exponent": self.exponent,
            "intercept": self.intercept,
            "C_estimate": self.C_estimate,
            "r_squared": self.r_squared,
            "n_rows": self.n_rows,
            "regime": self.regime,
            "residuals": self.residuals,
        }


def _coordinates(rows: list[dict], model: FitModel) -> tuple[np.ndarray, np.ndarray, list[float]]:
    xs, ys, eps_used = [], [], []
    for r in rows:
        eps, log_T = r.get("epsilon"), r.get("log_lifespan")
        if eps is None or log_T is None or not math.isfinite(log_T) or eps <= 0:
            continue
        if model == "power":
            x, y = math.log(eps), log_T
        else:
            if log_T <= 0:
                continue
            if model == "log_corrected":
                if eps >= 1:
                    continue
                x = math.log(eps * math.log(1.0 / eps))
            else:
                x = math.log(eps)
            y = math.log(log_T)
        xs.append(x)
        ys.append(y)
        eps_used.append(eps)
    return np.asarray(xs), np.asarray(ys), eps_used


def fit_scaling(table, model: FitModel) -> FitResult:
    """Linear least squares on the model's transformed coordinates; needs >= 5 usable rows."""
    if model not in MODEL_TRANSFORMS:
        raise ConfigurationError(f"unknown fit model {model!r}")

    rows = table.successful() if hasattr(table, "successful") else list(table)
    x, y, eps_used = _coordinates(rows, model)
    if x.size < MIN_ROWS:
        raise InsufficientDataError(f"fit needs >= {MIN_ROWS} usable rows, got {x.size}")

    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    predicted = A @ np.array([slope, intercept])
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else float(ss_res == 0.0)
    r_squared = min(max(r_squared, 0.0), 1.0)

    residuals = [
        {"epsilon": e, "x": float(xi), "y": float(yi), "residual": float(yi - pi)}
        for e, xi, yi, pi in zip(eps_used, x, y, predicted)
    ]
    result = FitResult(
        model=model,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        n_rows=int(x.size),
        residuals=residuals,
        regime=dict(getattr(table, "metadata", {})),
    )
    logger.info(
        indent(
            color(
                f"{ICONS['fit']} {model}: slope={result.slope:.6g} "
                f"(exponent {result.exponent:.6g}), R²={result.r_squared:.6f}",
                MAGENTA,
            )
        )
    )
    return result


def default_model(metadata: dict) -> FitModel:
    """Linearization matching the regime recorded in a table's metadata."""
    k, d = metadata.get("k"), metadata.get("d")
    if metadata.get("family") == "power" and k is not None and d is not None and k < d:
        return "power"
    if metadata.get("alpha") == 1:
        return "log_corrected"
    return "power_log"
