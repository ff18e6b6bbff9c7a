"""
Grid realizations of slowly decaying radial data.

Two families are supported, both with Re f = 0 and -Im f = h(|x|):

- log_weighted: h(r) = r^{-d} (log r)^{-α} for r > R0
- power:        h(r) = r^{-k} for r > R0, 0 < k <= d

Inside |x| <= R0 the profile equals `inner_fill` (0 by default). A non-zero
`smoothing_width` blends the inner value into the tail over the collar
(R0 - w, R0] with the cutoff family's smooth step; the blend only raises values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft

from src.errors import ConfigurationError, DomainError
from src.testfunc import CutoffFamily
from src.utils.logutils import get_logger, color, indent, CYAN, ICONS

logger = get_logger(__name__)

DatumFamily = Literal["log_weighted", "power"]
DECAY_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    d: int
    M: int
    L: float
    truncation_tol: float = 1e-2

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigurationError(f"grids are supported for d in {{1, 2}}, got d={self.d}")
        if self.M < 4 or self.M & (self.M - 1):
            raise ConfigurationError(f"M must be a power of two >= 4, got M={self.M}")
        if self.L <= 0:
            raise ConfigurationError(f"box half-width must be positive, got L={self.L}")
        if self.truncation_tol <= 0:
            raise ConfigurationError("truncation_tol must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.M)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    @cached_property
    def radius_squared(self) -> np.ndarray:
        return sum(c**2 for c in self.coords)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(self.radius_squared)

    @cached_property
    def wavenumber_squared(self) -> np.ndarray:
        xi = angular_wavenumbers(self.M, self.h)
        mesh = np.meshgrid(*([xi] * self.d), indexing="ij")
        return sum(k**2 for k in mesh)

    def integrate(self, values: np.ndarray) -> complex | float:
        return np.sum(values) * self.cell_volume

    def outer_layer(self, fraction: float = 0.1) -> np.ndarray:
        """Mask of nodes within `fraction * L` of the box boundary (sup-norm distance)."""
        inner = (1.0 - fraction) * self.L
        mask = np.zeros(self.shape, dtype=bool)
        for c in self.coords:
            mask |= np.abs(c) >= inner
        return mask

    def refined(self) -> Grid:
        return Grid(d=self.d, M=2 * self.M, L=self.L, truncation_tol=self.truncation_tol)


def angular_wavenumbers(M: int, h: float) -> np.ndarray:
    """Angular wavenumbers of the periodic box in FFT order."""
    return 2.0 * math.pi * scipy.fft.fftfreq(M, d=h)


@dataclass(frozen=True, eq=False)
class Field:
    values: np.ndarray
    grid: Grid
    epsilon: float | None = None
    family: str | None = None

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def mass(self) -> float:
        return float(self.grid.integrate(np.abs(self.values) ** 2))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def im_integral(self) -> float:
        return float(self.grid.integrate(self.values.imag))

    def with_values(self, values: np.ndarray) -> Field:
        return Field(values=values, grid=self.grid, epsilon=self.epsilon, family=self.family)


@dataclass(frozen=True)
class DatumSpec:
    family: DatumFamily = "log_weighted"
    epsilon: float = 1.0
    R0: float = 2.0
    alpha: float = 0.0
    k: float | None = None
    inner_fill: float = 0.0
    smoothing_width: float = 0.0

    def validate(self, d: int) -> None:
        if self.epsilon <= 0:
            raise DomainError(f"amplitude ε must be positive, got {self.epsilon}")
        if self.inner_fill < 0:
            raise DomainError(f"inner_fill must be >= 0, got {self.inner_fill}")
        if self.smoothing_width < 0:
            raise DomainError(f"smoothing_width must be >= 0, got {self.smoothing_width}")
        if self.family == "log_weighted":
            if self.R0 <= 1:
                raise DomainError(f"log_weighted datum needs R0 > 1, got R0={self.R0}")
        elif self.family == "power":
            if self.k is None or not 0 < self.k <= d:
                raise DomainError(f"power datum needs 0 < k <= d={d}, got k={self.k}")
            if self.R0 <= 0:
                raise DomainError(f"power datum needs R0 > 0, got R0={self.R0}")
        else:
            raise ConfigurationError(f"unknown datum family {self.family!r}")

    def with_epsilon(self, epsilon: float) -> DatumSpec:
        return DatumSpec(
            family=self.family,
            epsilon=epsilon,
            R0=self.R0,
            alpha=self.alpha,
            k=self.k,
            inner_fill=self.inner_fill,
            smoothing_width=self.smoothing_width,
        )

    def tail(self, r, d: int):
        """Family profile h(r); only meaningful for r > R0."""
        r = np.asarray(r, dtype=float)
        if self.family == "power":
            return r ** (-self.k)
        return r ** (-d) * np.log(r) ** (-self.alpha)

    def lower_bound(self, r, d: int):
        """Required lower bound of -Im f / ε: h(r) outside R0, 0 inside."""
        r = np.asarray(r, dtype=float)
        outside = r > self.R0
        safe = np.where(outside, r, 2.0 * self.R0 + 1.0)
        return np.where(outside, self.tail(safe, d), 0.0)

    def unit_profile(self, r, d: int):
        """-Im f / ε at radius r, collar blend included."""
        r = np.asarray(r, dtype=float)
        out = np.where(r > self.R0, self.lower_bound(r, d), self.inner_fill)
        w = self.smoothing_width
        if w > 0:
            edge = float(self.tail(self.R0, d))
            start = self.R0 - w
            collar = (r > start) & (r <= self.R0)
            blend = self.inner_fill + (edge - self.inner_fill) * CutoffFamily(d).rise(
                (r - start) / w
            )
            out = np.where(collar, np.maximum(self.inner_fill, blend), out)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DecayCheck:
    margin: float
    worst_index: tuple[int, ...]
    real_part_max: float

    @property
    def passed(self) -> bool:
        return self.margin >= -DECAY_TOL and self.real_part_max <= DECAY_TOL


# ----------------- OPERATIONS -----------------


def sample_datum(spec: DatumSpec, grid: Grid) -> Field:
    """u0 = -i ε h(|x|) on the grid nodes."""
    spec.validate(grid.d)
    if grid.L <= 2.0 * spec.R0:
        raise ConfigurationError(f"box half-width L={grid.L} must exceed 2 R0 = {2 * spec.R0}")

    edge = spec.epsilon * float(spec.tail(grid.L, grid.d))
    if edge > grid.truncation_tol:
        raise ConfigurationError(
            f"datum modulus {edge:.3g} at |x| = L exceeds truncation_tol={grid.truncation_tol}"
        )

    values = -1j * spec.epsilon * spec.unit_profile(grid.radius, grid.d)
    field = Field(
        values=values.astype(complex), grid=grid, epsilon=spec.epsilon, family=spec.family
    )
    logger.debug(
        indent(
            color(
                f"{ICONS['sample']} Sampled {spec.family} datum ε={spec.epsilon:g} "
                f"on M={grid.M}, L={grid.L:g} (mass={field.mass():.4g})",
                CYAN,
            )
        )
    )
    return field


def verify_decay(field: Field, spec: DatumSpec, grid: Grid) -> DecayCheck:
    """min over nodes of (-Im u0 - ε h); a negative margin is a verdict, not an error."""
    required = spec.epsilon * spec.lower_bound(grid.radius, grid.d)
    gap = -field.values.imag - required
    w = spec.smoothing_width
    if w > 0:
        # the collar is excluded; its values sit above the inner fill by construction
        gap = np.where((grid.radius > spec.R0 - w) & (grid.radius <= spec.R0), np.inf, gap)
    worst = np.unravel_index(int(np.argmin(gap)), gap.shape)
    return DecayCheck(
        margin=float(gap[worst]),
        worst_index=tuple(int(i) for i in worst),
        real_part_max=float(np.max(np.abs(field.values.real))),
    )
