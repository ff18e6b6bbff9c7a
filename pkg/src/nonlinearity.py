"""
Homogeneous nonlinearities of the critical order 1 + 2/d.

A nonlinearity F with F(λz) = λ^{1+2/d} F(z) is determined by its values on the
unit circle, g(θ) = F(e^{iθ}). This module moves between the two descriptions:

- `fourier_coefficients()`: periodic symbol g -> coefficient table {g_n}.
- `synthesize_symbol()`: coefficient table -> periodic symbol (truncated series).
- `evaluate()` / `evaluate_term()`: pointwise F(u) and the terms F_n(u) = |u|^{p0-n} u^n.
- `margin_mu()`: Re(g_0) - sum_{n != 0} |g_n|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Literal

import numpy as np
import scipy.fft

from src.errors import ConfigurationError, DomainError, SymbolEvaluationError
from src.utils.logutils import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
SUP_GRID_POINTS = 4096
DEFAULT_ORDER = 64

SmoothnessHint = Literal["analytic", "lipschitz", "bounded"]


def critical_power(d: int) -> float:
    """p0 = 1 + 2/d."""
    if d < 1:
        raise DomainError(f"dimension must be a positive integer, got d={d}")
    return 1.0 + 2.0 / d


def _as_output(values: np.ndarray, scalar: bool):
    if scalar:
        return complex(values.reshape(-1)[0])
    return values


# ----------------- DOMAIN TYPES -----------------


@dataclass(frozen=True, eq=False)
class PeriodicSymbol:
    """
    2π-periodic g(θ). The evaluator is always called with θ reduced mod 2π and
    may return a scalar (constant symbol) or an array shaped like θ.
    """

    evaluator: Callable[[np.ndarray], np.ndarray | complex]
    smoothness_hint: SmoothnessHint = "bounded"

    def __call__(self, theta):
        theta_arr = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        values = np.asarray(self.evaluator(theta_arr), dtype=complex)
        values = np.broadcast_to(values, theta_arr.shape).astype(complex)
        if np.ndim(theta) == 0:
            return complex(values)
        return values

    def sup_norm(self, points: int = SUP_GRID_POINTS) -> float:
        theta = TWO_PI * np.arange(points) / points
        return float(np.max(np.abs(self(theta))))


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """
    Truncated Fourier coefficients {g_n : |n| <= order} of a symbol, for dimension d.
    Missing orders are zero.
    """

    d: int
    coefficients: dict[int, complex] = field(default_factory=dict)
    order: int | None = None

    def __post_init__(self):
        cleaned = {int(n): complex(g) for n, g in self.coefficients.items()}
        order = self.order
        if order is None:
            order = max((abs(n) for n in cleaned), default=0)
        if any(abs(n) > order for n in cleaned):
            raise ConfigurationError(f"coefficient index exceeds truncation order N={order}")
        object.__setattr__(self, "coefficients", cleaned)
        object.__setattr__(self, "order", int(order))

    def __getitem__(self, n: int) -> complex:
        return self.coefficients.get(int(n), 0j)

    @property
    def p0(self) -> float:
        return critical_power(self.d)

    @property
    def g0(self) -> complex:
        return self[0]

    def nonzero(self, tol: float = 0.0) -> dict[int, complex]:
        return {n: g for n, g in sorted(self.coefficients.items()) if abs(g) > tol}

    def l1_norm(self) -> float:
        return float(sum(abs(g) for g in self.coefficients.values()))

    def l1_tail(self, cut: int) -> float:
        """ℓ¹ mass carried by the orders cut < |n| <= N."""
        return float(sum(abs(g) for n, g in self.coefficients.items() if abs(n) > cut))

    def gauge_coefficient(self, tol: float = 1e-14) -> float | None:
        """
        Return g_1 when the table is a single real gauge-invariant term, else None.
        """
        scale = max(self.l1_norm(), 1.0)
        active = self.nonzero(tol * scale)
        if set(active) != {1}:
            return None
        g1 = active[1]
        if abs(g1.imag) > tol * scale:
            return None
        return float(g1.real)

    def as_rows(self) -> list[list[float]]:
        """[[n, re, im], ...] for every stored order, ascending in n."""
        return [[n, g.real, g.imag] for n, g in sorted(self.coefficients.items())]

    @classmethod
    def from_rows(cls, rows: Iterable, d: int, order: int | None = None) -> CoefficientTable:
        coefficients: dict[int, complex] = {}
        for row in rows:
            if len(row) not in (2, 3):
                raise ConfigurationError(f"coefficient rows must be [n, re, im], got {row}")
            n = int(row[0])
            im = float(row[2]) if len(row) == 3 else 0.0
            coefficients[n] = coefficients.get(n, 0j) + complex(float(row[1]), im)
        return cls(d=d, coefficients=coefficients, order=order)


@dataclass(frozen=True, eq=False)
class HomogeneousNonlinearity:
    """F(u) = |u|^{1+2/d} g(arg u), F(0) = 0, given by a symbol or a coefficient table."""

    source: PeriodicSymbol | CoefficientTable
    d: int

    def __post_init__(self):
        critical_power(self.d)
        if isinstance(self.source, CoefficientTable) and self.source.d != self.d:
            raise ConfigurationError(
                f"coefficient table built for d={self.source.d}, nonlinearity for d={self.d}"
            )

    @property
    def p0(self) -> float:
        return critical_power(self.d)

    @property
    def symbol(self) -> PeriodicSymbol:
        if isinstance(self.source, PeriodicSymbol):
            return self.source
        return synthesize_symbol(self.source)

    def table(self, order: int = DEFAULT_ORDER) -> CoefficientTable:
        if isinstance(self.source, CoefficientTable):
            return self.source
        return fourier_coefficients(self.source, order, d=self.d)

    def is_zero(self) -> bool:
        return isinstance(self.source, CoefficientTable) and not self.source.nonzero()

    def gauge_coefficient(self) -> float | None:
        if isinstance(self.source, CoefficientTable):
            return self.source.gauge_coefficient()
        return None

    def __call__(self, u):
        return evaluate(self, u)

    @classmethod
    def from_coefficients(cls, coefficients: dict[int, complex], d: int) -> HomogeneousNonlinearity:
        return cls(source=CoefficientTable(d=d, coefficients=coefficients), d=d)

    @classmethod
    def zero(cls, d: int) -> HomogeneousNonlinearity:
        return cls.from_coefficients({}, d)


# ----------------- OPERATIONS -----------------


def fourier_coefficients(
    symbol: PeriodicSymbol,
    N: int = DEFAULT_ORDER,
    M: int | None = None,
    d: int = 1,
) -> CoefficientTable:
    """
    M-point trapezoidal quadrature of g_n = (1/2π) ∫ g(θ) e^{-inθ} dθ for |n| <= N,
    evaluated with one FFT. Exact for trigonometric polynomials of degree < M/2.
    """
    if N < 0:
        raise DomainError(f"truncation order must be >= 0, got N={N}")
    if M is None:
        M = 1 << math.ceil(math.log2(4 * N + 4))
    if M < 4 * N + 4 or M & (M - 1):
        raise DomainError(f"quadrature needs M >= 4N+4 and a power of two, got M={M}, N={N}")

    theta = TWO_PI * np.arange(M) / M
    values = symbol(theta)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        where = float(theta[bad[0]])
        raise SymbolEvaluationError(f"symbol is not finite at θ={where:.6g}", theta=where)

    spectrum = scipy.fft.fft(values) / M
    coefficients = {n: complex(spectrum[n % M]) for n in range(-N, N + 1)}
    logger.debug(f"fourier_coefficients: N={N}, M={M}, l1={sum(map(abs, coefficients.values()))}")
    return CoefficientTable(d=d, coefficients=coefficients, order=N)


def _trigonometric_sum(coefficients: dict[int, complex], theta: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(theta), dtype=complex)
    for n, g in coefficients.items():
        if n == 0:
            out += g
        else:
            out += g * np.exp(1j * n * theta)
    return out


def synthesize_symbol(table: CoefficientTable) -> PeriodicSymbol:
    """g(θ) = Σ_{|n|<=N} g_n e^{inθ}."""
    active = table.nonzero()
    return PeriodicSymbol(evaluator=partial(_trigonometric_sum, active), smoothness_hint="analytic")


def evaluate(F: HomogeneousNonlinearity, z):
    """F(z) = |z|^{p0} g(arg z) for z != 0 and 0 at z = 0, elementwise."""
    scalar = np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    modulus = np.abs(z_arr)
    p0 = F.p0

    if isinstance(F.source, CoefficientTable):
        out = np.zeros(z_arr.shape, dtype=complex)
        for n, g in F.source.nonzero().items():
            out += g * evaluate_term(n, z_arr, F.d)
        return _as_output(out, scalar)

    phase = F.source(np.angle(z_arr))
    out = np.where(modulus > 0, modulus**p0 * phase, 0j)
    return _as_output(out, scalar)


def evaluate_term(n: int, u, d: int):
    """F_n(u) = |u|^{p0-n} u^n, written as |u|^{p0} e^{in arg u}; F_n(0) = 0 for every n."""
    scalar = np.ndim(u) == 0
    u_arr = np.atleast_1d(np.asarray(u, dtype=complex))
    modulus = np.abs(u_arr)
    p0 = critical_power(d)

    if n == 0:
        out = (modulus**p0).astype(complex)
    elif n == 1:
        out = modulus ** (p0 - 1.0) * u_arr
    else:
        out = modulus**p0 * np.exp(1j * n * np.angle(u_arr))
    out = np.where(modulus > 0, out, 0j)
    return _as_output(out, scalar)


def margin_mu(table: CoefficientTable) -> float:
    """μ = Re(g_0) - Σ_{n≠0} |g_n|."""
    off_center = sum(abs(g) for n, g in table.coefficients.items() if n != 0)
    mu = float(table.g0.real - off_center)
    if mu <= 0:
        logger.debug(f"margin μ={mu:.3g} <= 0: the blow-up hypothesis does not hold")
    return mu


def check_homogeneity(
    F: HomogeneousNonlinearity, samples: Iterable[tuple[float, complex]]
) -> float:
    """max |F(λz) - λ^{p0} F(z)| over (λ, z) samples."""
    worst = 0.0
    for lam, z in samples:
        if lam <= 0:
            raise DomainError(f"homogeneity is only defined for λ > 0, got λ={lam}")
        residual = abs(evaluate(F, lam * z) - lam**F.p0 * evaluate(F, z))
        worst = max(worst, residual)
    return worst


def decomposition_residual(
    symbol: PeriodicSymbol, table: CoefficientTable, points: int = SUP_GRID_POINTS
) -> float:
    """sup over a θ grid of |g(θ) - Σ g_n e^{inθ}|: the truncation error of the table."""
    theta = TWO_PI * np.arange(points) / points
    return float(np.max(np.abs(symbol(theta) - synthesize_symbol(table)(theta))))


def parseval_error(
    symbol: PeriodicSymbol, table: CoefficientTable, points: int = SUP_GRID_POINTS
) -> float:
    """|mean of |g|² over a θ grid - Σ |g_n|²|; small when the table holds all the energy."""
    theta = TWO_PI * np.arange(points) / points
    mean_square = float(np.mean(np.abs(symbol(theta)) ** 2))
    return abs(mean_square - sum(abs(g) ** 2 for g in table.coefficients.values()))


# ----------------- CONFIG PRESETS -----------------


def nonlinearity_from_spec(spec, d: int) -> HomogeneousNonlinearity:
    """
    Build F from a config value:
      - preset string: "zero", "constant", "gauge", "mixed:g0,g1"
      - dict with "preset" or "coefficients" = [[n, re, im], ...] (optional "order")
    """
    if isinstance(spec, dict):
        if "coefficients" in spec:
            table = CoefficientTable.from_rows(spec["coefficients"], d=d, order=spec.get("order"))
            return HomogeneousNonlinearity(source=table, d=d)
        spec = spec.get("preset", "constant")

    if not isinstance(spec, str):
        raise ConfigurationError(f"unsupported nonlinearity spec: {spec!r}")

    name = spec.strip().lower()
    if name == "zero":
        return HomogeneousNonlinearity.zero(d)
    if name == "constant":
        return HomogeneousNonlinearity.from_coefficients({0: 1.0}, d)
    if name == "gauge":
        return HomogeneousNonlinearity.from_coefficients({1: 1.0}, d)
    if name.startswith("mixed:"):
        try:
            g0, g1 = (float(v) for v in name.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise ConfigurationError(f"mixed preset expects 'mixed:g0,g1', got {spec!r}") from exc
        return HomogeneousNonlinearity.from_coefficients({0: g0, 1: g1}, d)

    raise ConfigurationError(f"unknown nonlinearity preset {spec!r}")


NAMED_SYMBOLS = {
    "one": lambda theta: 1.0,
    "phase": lambda theta: np.exp(1j * theta),
    "abs_cos": lambda theta: np.abs(np.cos(theta)),
    "half_wave": lambda theta: np.maximum(np.cos(theta), 0.0),
}


def named_symbol(name: str) -> PeriodicSymbol:
    """Symbols that are not trigonometric polynomials, for exploring truncation error."""
    try:
        evaluator = NAMED_SYMBOLS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown symbol {name!r}; choose from {sorted(NAMED_SYMBOLS)}"
        ) from None
    hint = "analytic" if name in ("one", "phase") else "bounded"
    return PeriodicSymbol(evaluator=evaluator, smoothness_hint=hint)
