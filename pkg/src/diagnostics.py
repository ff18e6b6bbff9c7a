"""
Post-run diagnostics on stored trajectories.

- `verify_weak_identity`: residual of the weak formulation
      ∬ u (-i ∂_t ψ + Δψ) - i ∫ u0 ψ(0) - ∬ F(u) ψ = 0
  for bump test functions ψ(t, x) = η(|x - c|²/a) η(t/b).
- `modified_profile_distance`: relative L² distance between a snapshot and the free
  profile with logarithmic phase correction built from û₊.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.integrate import simpson
from scipy.interpolate import RegularGridInterpolator

from src.errors import ConfigurationError, DomainError
from src.initial_data import Field, Grid, angular_wavenumbers
from src.nonlinearity import HomogeneousNonlinearity, evaluate
from src.testfunc import CutoffFamily
from src.utils.logutils import get_logger, color, indent, CYAN, ICONS

logger = get_logger(__name__)


@dataclass(frozen=True)
class BumpTestFunction:
    """ψ(t, x) = η(|x - c|²/a) η(t/b), supported in |x - c| < √a, 0 <= t < b."""

    center: tuple[float, ...]
    a: float
    b: float
    family: CutoffFamily

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigurationError("bump widths a and b must be positive")
        if len(self.center) != self.family.d:
            raise ConfigurationError(
                f"center {self.center} does not have d={self.family.d} entries"
            )

    def check_support(self, grid: Grid, t_final: float) -> None:
        reach = math.sqrt(self.a)
        if any(abs(c) + reach >= grid.L for c in self.center):
            raise ConfigurationError(f"test function support leaves the box (center={self.center})")
        if self.b > t_final:
            raise ConfigurationError(
                f"test function time support [0, {self.b:g}) exceeds the trajectory end {t_final:g}"
            )

    def space_part(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """
        η(|x - c|²/a) on the grid and its Laplacian. The Laplacian uses the solver's
        spectral symbol -|k|², so the discrete identity is exact for the linear flow.
        """
        shifted2 = sum((x - c) ** 2 for x, c in zip(grid.coords, self.center))
        value = self.family.eta(shifted2 / self.a)
        lap = scipy.fft.ifftn(-grid.wavenumber_squared * scipy.fft.fftn(value)).real
        return value, lap

    def time_part(self, t: float) -> tuple[float, float]:
        f = self.family
        return float(f.eta(t / self.b)), float(f.eta_prime(t / self.b)) / self.b

    def evaluate(self, grid: Grid, t: float):
        """(ψ, ∂_t ψ, Δψ) on the grid at time t."""
        space, lap = self.space_part(grid)
        time, dtime = self.time_part(t)
        return space * time, space * dtime, lap * time


def default_test_functions(grid: Grid, t_final: float, count: int = 3) -> list[BumpTestFunction]:
    """Bumps of growing radius centered at the origin, living on [0, t_final)."""
    family = CutoffFamily(grid.d)
    bumps = []
    for i in range(1, count + 1):
        radius = 0.6 * grid.L * i / count
        bumps.append(
            BumpTestFunction(
                center=(0.0,) * grid.d,
                a=radius**2,
                b=t_final * (0.5 + 0.5 * i / count),
                family=family,
            )
        )
    return bumps


def _time_integral(values, times: np.ndarray) -> complex:
    values = np.asarray(values, dtype=complex)
    return complex(simpson(values.real, x=times), simpson(values.imag, x=times))


def weak_residual(trajectory, psi: BumpTestFunction, F: HomogeneousNonlinearity) -> dict:
    grid = trajectory.grid
    psi.check_support(grid, trajectory.times[-1])
    times = np.asarray(trajectory.times)

    space, lap = psi.space_part(grid)
    linear, nonlinear = [], []
    for t, u in zip(times, trajectory.snapshots):
        time, dtime = psi.time_part(t)
        linear.append(grid.integrate(u * (-1j * dtime * space + time * lap)))
        nonlinear.append(grid.integrate(evaluate(F, u) * space) * time)

    psi0 = space * psi.time_part(0.0)[0]
    linear_term = _time_integral(linear, times)
    initial_term = complex(-1j * grid.integrate(trajectory.u0.values * psi0))
    nonlinear_term = _time_integral(nonlinear, times)

    scale = max(abs(linear_term), abs(initial_term), abs(nonlinear_term))
    residual = abs(linear_term + initial_term - nonlinear_term)
    return {
        "center": list(psi.center),
        "a": psi.a,
        "b": psi.b,
        "linear": abs(linear_term),
        "initial": abs(initial_term),
        "nonlinear": abs(nonlinear_term),
        "residual": residual / scale if scale > 0 else 0.0,
    }


def verify_weak_identity(
    trajectory, test_functions: list[BumpTestFunction], F: HomogeneousNonlinearity
) -> list[dict]:
    """Normalized residual per test function; time integrals by Simpson on the snapshot times."""
    if not trajectory.snapshots or len(trajectory.snapshots) != len(trajectory.times):
        raise ConfigurationError("weak identity needs a snapshot at every recorded time")
    results = [weak_residual(trajectory, psi, F) for psi in test_functions]
    worst = max((r["residual"] for r in results), default=0.0)
    message = f"{ICONS['oracle']} Weak identity: worst normalized residual {worst:.3g}"
    logger.info(indent(color(message, CYAN)))
    return results


# ----------------- PROFILE -----------------


def unitary_transform(field: Field) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """û(ξ) = (2π)^{-d/2} ∫ e^{-ix·ξ} u(x) dx on the box frequencies, ascending ξ order."""
    grid = field.grid
    xi = angular_wavenumbers(grid.M, grid.h)
    spectrum = scipy.fft.fftn(field.values, workers=-1) * grid.cell_volume
    spectrum /= (2.0 * math.pi) ** (grid.d / 2.0)
    # nodes start at -L, not 0
    phase = np.exp(1j * grid.L * xi)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.M
        spectrum = spectrum * phase.reshape(shape)
    return (scipy.fft.fftshift(xi),) * grid.d, scipy.fft.fftshift(spectrum)


def modified_profile(u_plus: Field, g1: float, t: float, grid: Grid) -> np.ndarray:
    """(2it)^{-d/2} e^{i|x|²/4t} û₊(x/2t) exp(-i g1 |û₊(x/2t)|^{2/d} log t) on the grid."""
    axes, spectrum = unitary_transform(u_plus)
    real = RegularGridInterpolator(axes, spectrum.real, bounds_error=False, fill_value=0.0)
    imag = RegularGridInterpolator(axes, spectrum.imag, bounds_error=False, fill_value=0.0)
    points = np.stack([c / (2.0 * t) for c in grid.coords], axis=-1)
    u_hat = real(points) + 1j * imag(points)
    d = grid.d
    return (
        (2j * t) ** (-d / 2.0)
        * np.exp(1j * grid.radius_squared / (4.0 * t))
        * u_hat
        * np.exp(-1j * g1 * np.abs(u_hat) ** (2.0 / d) * math.log(t))
    )


def modified_profile_distance(trajectory, u_plus: Field, g1: float, t: float) -> float:
    """Relative L² distance from the snapshot nearest t to the modified profile."""
    if t < 1:
        raise DomainError(f"modified profile is compared for t >= 1, got t={t}")
    idx = trajectory.snapshot_index(t)
    snap_t = trajectory.times[idx]
    grid = trajectory.grid
    profile = modified_profile(u_plus, g1, snap_t, grid)
    norm = math.sqrt(grid.integrate(np.abs(profile) ** 2))
    if norm == 0:
        raise DomainError("modified profile vanishes on the grid")
    diff = math.sqrt(grid.integrate(np.abs(trajectory.snapshots[idx] - profile) ** 2))
    logger.debug(f"profile distance at t={snap_t:g}: {diff / norm:.4g}")
    return diff / norm
