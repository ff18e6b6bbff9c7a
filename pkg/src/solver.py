"""
Strang-split spectral solver for i u_t + Δu = F(u) on a periodic box.

One step is: half linear (exact in Fourier space), full nonlinear (pointwise
u' = -i F(u)), half linear. The controller halves dt whenever the sup-norm grows
by more than `growth_check` in one step and issues a verdict:

- reached_T_end: integrated to the horizon
- blowup:        sup-norm crossed the threshold, or dt fell below dt_min while growing
- dt_underflow:  dt fell below dt_min without growth (integration failure)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.fft
from scipy.integrate import trapezoid

from src.errors import ConfigurationError, NonFiniteFieldError
from src.initial_data import Field, Grid
from src.nonlinearity import HomogeneousNonlinearity, evaluate
from src.testfunc import CutoffFamily
from src.utils.logutils import get_logger, color, indent, CYAN, GREEN, RED, YELLOW, ICONS

logger = get_logger(__name__)

FREEZE_BELOW = 1e-300
END_TOL = 1e-12
OUTER_LAYER = 0.1

VerdictKind = Literal["reached_T_end", "blowup", "dt_underflow"]


@dataclass(frozen=True)
class SolverConfig:
    T_end: float = 1.0
    dt_init: float = 1e-3
    dt_min: float = 1e-8
    dt_max: float | None = None
    blowup_factor: float = 1e6
    blowup_sup_threshold: float | None = None
    growth_check: float = 2.0
    nonlinear_substeps: int = 4
    snapshot_every: int = 10
    keep_snapshots: bool = True
    R_list: tuple[float, ...] = ()
    boundary_tol: float = 1e-6

    def __post_init__(self):
        if self.T_end <= 0 or self.dt_init <= 0 or self.dt_min <= 0:
            raise ConfigurationError("T_end, dt_init and dt_min must be positive")
        if self.dt_min > self.dt_init:
            raise ConfigurationError(f"dt_min={self.dt_min} exceeds dt_init={self.dt_init}")
        if self.dt_max is not None and self.dt_max < self.dt_init:
            raise ConfigurationError(f"dt_max={self.dt_max} is below dt_init={self.dt_init}")
        if self.growth_check <= 1:
            raise ConfigurationError(f"growth_check must exceed 1, got {self.growth_check}")
        if self.blowup_factor <= 1:
            raise ConfigurationError(f"blowup_factor must exceed 1, got {self.blowup_factor}")
        if self.blowup_sup_threshold is not None and self.blowup_sup_threshold <= 0:
            raise ConfigurationError("blowup_sup_threshold must be positive")
        if self.nonlinear_substeps < 1 or self.snapshot_every < 1:
            raise ConfigurationError("nonlinear_substeps and snapshot_every must be >= 1")
        if any(R <= 0 for R in self.R_list):
            raise ConfigurationError("R_list entries must be positive")

    @property
    def step_ceiling(self) -> float:
        """Largest step the controller grows back to; dt_init unless dt_max is set."""
        return self.dt_init if self.dt_max is None else self.dt_max

    def threshold(self, initial_sup: float) -> float:
        if self.blowup_sup_threshold is not None:
            return self.blowup_sup_threshold
        return self.blowup_factor * max(initial_sup, np.finfo(float).tiny)

    def refined(self) -> SolverConfig:
        """Halved steps and dt_min / 10; the grid is refined separately."""
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values["dt_init"] = self.dt_init / 2.0
        values["dt_min"] = self.dt_min / 10.0
        if self.dt_max is not None:
            values["dt_max"] = self.dt_max / 2.0
        return SolverConfig(**values)


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    time: float
    boundary_contaminated: bool = False

    @property
    def label(self) -> str:
        return "boundary_contaminated" if self.boundary_contaminated else self.kind

    @property
    def is_blowup(self) -> bool:
        return self.kind == "blowup"


@dataclass
class Trajectory:
    grid: Grid
    u0: Field
    p0: float
    times: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    sup: list[float] = field(default_factory=list)
    im_integral: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    densities: dict[float, list[float]] = field(default_factory=dict)
    snapshots: list[np.ndarray] = field(default_factory=list)
    boundary_drift: float = 0.0
    steps: int = 0
    rejected: int = 0
    verdict: Verdict | None = None

    @property
    def t_final(self) -> float:
        return self.times[-1]

    def I0(self, R: float) -> float:
        """∫_0^t ∫ |u|^{p0} ψ_R dx dt by the trapezoid rule on the recorded cadence."""
        if R not in self.densities:
            raise KeyError(f"R={R} is not in the trajectory's R_list")
        return float(trapezoid(self.densities[R], self.times))

    def snapshot_index(self, t: float) -> int:
        if not self.snapshots:
            raise ConfigurationError("trajectory was run without snapshots (keep_snapshots=False)")
        return int(np.argmin(np.abs(np.asarray(self.times) - t)))

    def rows(self) -> list[dict]:
        return [
            {"t": t, "mass": m, "sup": s, "im_integral": i, "dt": h}
            for t, m, s, i, h in zip(self.times, self.mass, self.sup, self.im_integral, self.dt)
        ]


# ----------------- OPERATIONS -----------------


@lru_cache(maxsize=32)
def _propagator(grid: Grid, dt: float) -> np.ndarray:
    return np.exp(-1j * grid.wavenumber_squared * dt)


def _linear(values: np.ndarray, dt: float, grid: Grid) -> np.ndarray:
    if dt == 0:
        return values.copy()
    spectrum = scipy.fft.fftn(values, workers=-1)
    return scipy.fft.ifftn(spectrum * _propagator(grid, dt), workers=-1)


def linear_step(field: Field, dt: float, grid: Grid | None = None) -> Field:
    """Multiply û by e^{-i|ξ|² dt} on the discrete frequencies of the box."""
    grid = field.grid if grid is None else grid
    if grid != field.grid:
        raise ConfigurationError("grid does not match the field's grid")
    return field.with_values(_linear(field.values, dt, grid))


def _nonlinear(values: np.ndarray, dt: float, F: HomogeneousNonlinearity, substeps: int):
    if F.is_zero() or dt == 0:
        return values.copy()

    g1 = F.gauge_coefficient()
    if g1 is not None:
        out = values * np.exp(-1j * g1 * np.abs(values) ** (2.0 / F.d) * dt)
    else:
        frozen = np.abs(values) < FREEZE_BELOW
        u = np.where(frozen, 0j, values)

        def rhs(w):
            return np.where(frozen, 0j, -1j * evaluate(F, w))

        h = dt / substeps
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(substeps):
                k1 = rhs(u)
                k2 = rhs(u + 0.5 * h * k1)
                k3 = rhs(u + 0.5 * h * k2)
                k4 = rhs(u + h * k3)
                u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out = u

    if not np.all(np.isfinite(out)):
        raise NonFiniteFieldError(f"nonlinear substep produced non-finite values (dt={dt:.3g})")
    return out


def nonlinear_step(
    field: Field, dt: float, F: HomogeneousNonlinearity, substeps: int = 4
) -> Field:
    """Advance u' = -i F(u) pointwise: RK4 substeps, or the exact rotation for a real g1 term."""
    return field.with_values(_nonlinear(field.values, dt, F, substeps))


def strang_step(values: np.ndarray, dt: float, grid: Grid, F, substeps: int) -> np.ndarray:
    half = _linear(values, 0.5 * dt, grid)
    return _linear(_nonlinear(half, dt, F, substeps), 0.5 * dt, grid)


class _Recorder:
    """Appends diagnostics (and optionally snapshots) to a trajectory."""

    def __init__(self, traj: Trajectory, config: SolverConfig):
        self.traj = traj
        self.config = config
        self.family = CutoffFamily(traj.grid.d)
        self.layer = traj.grid.outer_layer(OUTER_LAYER)
        self.mass0 = traj.u0.mass()
        self.layer_mass0 = self._layer_mass(traj.u0.values)
        for R in config.R_list:
            traj.densities[float(R)] = []

    def _layer_mass(self, values: np.ndarray) -> float:
        return float(self.traj.grid.integrate(np.abs(values[self.layer]) ** 2))

    def __call__(self, values: np.ndarray, t: float, dt: float) -> None:
        traj, grid = self.traj, self.traj.grid
        modulus = np.abs(values)
        traj.times.append(t)
        traj.mass.append(float(grid.integrate(modulus**2)))
        traj.sup.append(float(np.max(modulus)))
        traj.im_integral.append(float(grid.integrate(values.imag)))
        traj.dt.append(dt)

        power = modulus**traj.p0
        for R in traj.densities:
            weight = self.family.psi(R, t, grid.radius_squared)
            traj.densities[R].append(float(grid.integrate(power * weight)))

        if self.config.keep_snapshots:
            traj.snapshots.append(values.copy())

        if self.mass0 > 0:
            drift = abs(self._layer_mass(values) - self.layer_mass0) / self.mass0
            traj.boundary_drift = max(traj.boundary_drift, drift)


def run(u0: Field, config: SolverConfig, F: HomogeneousNonlinearity) -> Trajectory:
    """Integrate from t = 0 until T_end or a blow-up / underflow verdict."""
    grid = u0.grid
    if F.d != grid.d:
        raise ConfigurationError(f"nonlinearity is for d={F.d}, grid has d={grid.d}")

    traj = Trajectory(grid=grid, u0=u0, p0=F.p0)
    record = _Recorder(traj, config)

    u = u0.values.astype(complex, copy=True)
    sup = float(np.max(np.abs(u)))
    threshold = config.threshold(sup)
    t, dt = 0.0, config.dt_init
    growing = False
    kind: VerdictKind = "reached_T_end"
    last_recorded = 0
    next_report = 0.1

    record(u, t, dt)
    logger.info(
        indent(
            color(
                f"{ICONS['wave']} Run to T={config.T_end:g} on M={grid.M}^{grid.d}, "
                f"sup0={sup:.3g}, threshold={threshold:.3g}",
                CYAN,
            )
        )
    )

    while config.T_end - t > END_TOL * config.T_end:
        step = min(dt, config.T_end - t)
        try:
            candidate = strang_step(u, step, grid, F, config.nonlinear_substeps)
            new_sup = float(np.max(np.abs(candidate)))
            ratio = new_sup / sup if sup > 0 else 1.0
            accepted = ratio <= config.growth_check
        except NonFiniteFieldError:
            accepted, ratio = False, math.inf

        if not accepted:
            traj.rejected += 1
            dt = 0.5 * step
            logger.debug(f"rejected step at t={t:.6g} (growth {ratio:.3g}); dt -> {dt:.3g}")
            if dt < config.dt_min:
                kind = "blowup" if growing else "dt_underflow"
                break
            continue

        growing = new_sup > sup
        u, sup, t = candidate, new_sup, t + step
        traj.steps += 1

        if sup >= threshold:
            kind = "blowup"
            break

        if traj.steps % config.snapshot_every == 0:
            record(u, t, step)
            last_recorded = traj.steps

        if ratio <= 1.0 + 0.25 * (config.growth_check - 1.0):
            dt = min(2.0 * dt, config.step_ceiling)

        if t >= next_report * config.T_end:
            logger.debug(f"t={t:.4g} sup={sup:.4g} dt={step:.3g}")
            next_report += 0.1

    if traj.steps != last_recorded and t > traj.times[-1]:
        record(u, t, step)

    contaminated = traj.boundary_drift > config.boundary_tol
    traj.verdict = Verdict(kind=kind, time=t, boundary_contaminated=contaminated)

    if kind == "blowup":
        logger.info(indent(color(f"{ICONS['blowup']} Blow-up at t*={t:.6g} (sup={sup:.3g})", RED)))
    elif kind == "dt_underflow":
        logger.info(indent(color(f"{ICONS['warn']} dt underflow at t={t:.6g}", YELLOW)))
    else:
        logger.info(indent(color(f"{ICONS['ok']} Reached T_end={t:.6g}", GREEN)))
    if contaminated:
        logger.info(
            indent(
                color(
                    f"{ICONS['warn']} Boundary layer mass drift {traj.boundary_drift:.3g} "
                    f"exceeds {config.boundary_tol:g}",
                    YELLOW,
                )
            )
        )
    return traj


def observed_order(errors, dts) -> float:
    """Least-squares slope of log(error) against log(dt)."""
    errors = np.asarray(errors, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if errors.size < 2 or errors.size != dts.size:
        raise ValueError("need at least two (error, dt) pairs of equal length")
    A = np.column_stack([np.log(dts), np.ones_like(dts)])
    slope, _ = np.linalg.lstsq(A, np.log(errors), rcond=None)[0]
    return float(slope)
