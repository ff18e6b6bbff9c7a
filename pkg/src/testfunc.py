"""
Cut-off family used by the test-function argument.

η is the smooth step: 1 on [0, 1/2], decreasing on (1/2, 1), 0 on [1, ∞), built from
φ(r) = exp(-r^{-m}). η* vanishes on [0, 1/2) and equals η elsewhere. The parabolic
cutoffs are ψ_R(t, x) = η((|x|² + t)/R)^{2p0'} and ψ*_R likewise with η*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect
from scipy.special import gamma

from src.errors import DomainError, InvalidMollifierError, PreconditionError
from src.utils.logutils import get_logger, color, indent, GREEN, ICONS

if TYPE_CHECKING:
    from src.initial_data import DatumSpec

logger = get_logger(__name__)

LOG2 = math.log(2.0)
QUAD_TOL = 1e-10
SAFETY_MARGIN = 0.10
FD_TOL = 1e-6
LOG_BOUND_TOL = 1e-8


def sphere_measure(d: int) -> float:
    """|S^{d-1}|; equals 2 for d = 1 (both half-lines)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)


def unit_ball_volume(d: int) -> float:
    return sphere_measure(d) / d


def _phi_with_derivatives(r: np.ndarray, m: float):
    """φ(r) = exp(-r^{-m}) for r > 0 (0 otherwise), with φ' and φ''."""
    r = np.asarray(r, dtype=float)
    # exp(-r^{-m}) underflows to 0 below this radius
    active = r > (1.0 / 700.0) ** (1.0 / m)
    rr = np.where(active, r, 1.0)
    phi = np.where(active, np.exp(-(rr**-m)), 0.0)
    lead = m * rr ** (-m - 1.0)
    phi1 = np.where(active, lead * phi, 0.0)
    phi2 = np.where(active, (lead**2 - m * (m + 1.0) * rr ** (-m - 2.0)) * phi, 0.0)
    return phi, phi1, phi2


@dataclass(frozen=True)
class CutoffFamily:
    d: int
    steepness: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got d={self.d}")
        if self.steepness <= 0:
            raise DomainError(f"steepness must be positive, got {self.steepness}")

    @property
    def p0(self) -> float:
        return 1.0 + 2.0 / self.d

    @property
    def p0prime(self) -> float:
        return (self.d + 2.0) / 2.0

    @property
    def exponent(self) -> float:
        """2 p0' = d + 2."""
        return 2.0 * self.p0prime

    # -- η and its derivatives ------------------------------------------------

    def _transition(self, s):
        s = np.asarray(s, dtype=float)
        x = 2.0 * s - 1.0
        inside = (x > 0.0) & (x < 1.0)
        xi = np.where(inside, x, 0.5)
        a, a1, a2 = _phi_with_derivatives(1.0 - xi, self.steepness)
        b, b1, b2 = _phi_with_derivatives(xi, self.steepness)
        # derivatives of a(x) = φ(1 - x) pick up the chain-rule sign
        a1 = -a1
        return s, inside, a, a1, a2, b, b1, b2

    def eta(self, s):
        s, inside, a, _, _, b, _, _ = self._transition(s)
        value = np.where(s <= 0.5, 1.0, 0.0)
        return np.where(inside, a / (a + b), value)

    def eta_prime(self, s):
        _, inside, a, a1, _, b, b1, _ = self._transition(s)
        total = a + b
        h1 = (a1 * b - a * b1) / total**2
        return np.where(inside, 2.0 * h1, 0.0)

    def eta_second(self, s):
        _, inside, a, a1, a2, b, b1, b2 = self._transition(s)
        total = a + b
        h2 = (a2 * b - a * b2) / total**2 - 2.0 * (a1 * b - a * b1) * (a1 + b1) / total**3
        return np.where(inside, 4.0 * h2, 0.0)

    def eta_star(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0.5, self.eta(s), 0.0)

    def rise(self, xi):
        """Smooth step from 0 at xi <= 0 to 1 at xi >= 1 (mirror image of η on (1/2, 1))."""
        return 1.0 - self.eta(0.5 + 0.5 * np.asarray(xi, dtype=float))

    # -- cutoffs ----------------------------------------------------------------

    def psi(self, R: float, t, r2):
        return self.eta((np.asarray(r2) + t) / R) ** self.exponent

    def psi_star(self, R: float, t, r2):
        return self.eta_star((np.asarray(r2) + t) / R) ** self.exponent

    def psi_derivatives(self, R: float, t, r2):
        """
        (∂_t ψ_R, lap_0, lap_r) where Δψ_R = lap_0 + lap_r and lap_r carries the |x|² factor.
        """
        r2 = np.asarray(r2, dtype=float)
        s = (r2 + t) / R
        q = self.exponent
        e, e1, e2 = self.eta(s), self.eta_prime(s), self.eta_second(s)
        eq1 = e ** (q - 1.0)
        eq2 = e ** (q - 2.0)
        dt = q * eq1 * e1 / R
        lap_0 = 2.0 * self.d * q * eq1 * e1 / R
        lap_r = q * ((q - 1.0) * eq2 * e1**2 + eq1 * e2) * 4.0 * r2 / R**2
        return dt, lap_0, lap_r


@dataclass(frozen=True)
class DerivativeBudget:
    C1: float
    C2: float
    R0: float
    A: float

    @property
    def chain_constant(self) -> float:
        """Constant bounding C1/R + C2|x|²/R² by (·)/R on the support |x|² <= R."""
        return max(self.A, self.C1 + self.C2)


# ----------------- OPERATIONS -----------------


def eval_psi(family: CutoffFamily, R: float, t: float, x) -> np.ndarray | float:
    """ψ_R(t, x) = η((|x|² + t)/R)^{2p0'}; in d >= 2 the last axis of x holds coordinates."""
    if R <= 0:
        raise DomainError(f"R must be positive, got R={R}")
    x = np.asarray(x, dtype=float)
    r2 = x**2 if family.d == 1 or x.ndim == 0 else np.sum(x**2, axis=-1)
    value = family.psi(R, t, r2)
    return float(value) if np.ndim(value) == 0 else value


def verify_derivatives(family: CutoffFamily, points: int = 41, h: float = 1e-5) -> float:
    """
    Compare analytic η', η'' with central differences on (1/2, 1); raise when they disagree.
    """
    s = np.linspace(0.55, 0.95, points)
    fd1 = (family.eta(s + h) - family.eta(s - h)) / (2 * h)
    fd2 = (family.eta_prime(s + h) - family.eta_prime(s - h)) / (2 * h)
    err1 = np.max(np.abs(fd1 - family.eta_prime(s))) / max(1.0, np.max(np.abs(fd1)))
    err2 = np.max(np.abs(fd2 - family.eta_second(s))) / max(1.0, np.max(np.abs(fd2)))
    worst = float(max(err1, err2))
    if worst > FD_TOL:
        raise InvalidMollifierError(f"analytic derivatives disagree with differences: {worst:.3g}")
    return worst


def default_samples(n: int = 10_000, seed: int = 0) -> np.ndarray:
    """Unit-scaled samples (τ, ρ) = (t/R, |x|²/R) covering the support and a margin beyond it."""
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 1.25, size=(n, 2))


def derivative_budget(
    family: CutoffFamily,
    R_grid: Iterable[float],
    sample_points: np.ndarray | None = None,
    R0: float = 1.0,
) -> DerivativeBudget:
    """
    Smallest C1, C2 (plus 10%) with |∂_tψ_R| + |Δψ_R| <= (C1/R + C2|x|²/R²) (ψ*_R)^{1/p0}
    on every sample, certified pointwise afterwards.

    sample_points holds unit-scaled (t/R, |x|²/R) pairs.
    """
    verify_derivatives(family)
    samples = default_samples() if sample_points is None else np.asarray(sample_points, float)
    R_values = [float(R) for R in R_grid]

    c1, c2 = 0.0, 0.0
    for R in R_values:
        t, r2 = samples[:, 0] * R, samples[:, 1] * R
        dt, lap_0, lap_r = family.psi_derivatives(R, t, r2)
        weight = family.psi_star(R, t, r2) ** (1.0 / family.p0)
        total = np.abs(dt) + np.abs(lap_0) + np.abs(lap_r)

        off_support = weight == 0.0
        if np.any(total[off_support] > 1e-12):
            raise InvalidMollifierError(
                f"derivatives of ψ_R do not vanish where ψ*_R = 0 (R={R:g})"
            )

        on = ~off_support
        if np.any(on):
            c1 = max(c1, float(np.max((np.abs(dt[on]) + np.abs(lap_0[on])) * R / weight[on])))
            radial = on & (r2 > 0)
            if np.any(radial):
                scaled = np.abs(lap_r[radial]) * R**2 / (r2[radial] * weight[radial])
                c2 = max(c2, float(np.max(scaled)))

    c1 *= 1.0 + SAFETY_MARGIN
    c2 *= 1.0 + SAFETY_MARGIN

    for R in R_values:
        t, r2 = samples[:, 0] * R, samples[:, 1] * R
        dt, lap_0, lap_r = family.psi_derivatives(R, t, r2)
        lhs = np.abs(dt) + np.abs(lap_0 + lap_r)
        rhs = (c1 / R + c2 * r2 / R**2) * family.psi_star(R, t, r2) ** (1.0 / family.p0)
        if np.any(lhs > rhs + 1e-15):
            raise InvalidMollifierError(f"derivative budget fails pointwise at R={R:g}")

    budget = DerivativeBudget(C1=c1, C2=c2, R0=R0, A=c1 + c2 / R0)
    message = f"{ICONS['ok']} Derivative budget C1={c1:.4g}, C2={c2:.4g}, A={budget.A:.4g}"
    logger.info(indent(color(message, GREEN)))
    return budget


def log_integral_bound(family: CutoffFamily, sigma_grid: Iterable[float]) -> float:
    """
    max over σ of ∫_σ^∞ η*(s)^{2p0'} ds/s / (η(σ)^{2p0'} log 2); must not exceed 1.
    """
    q = family.exponent

    def integrand(s: float) -> float:
        return float(family.eta(s)) ** q / s

    worst = 0.0
    for sigma in sigma_grid:
        if sigma < 0:
            raise DomainError(f"σ must be >= 0, got {sigma}")
        lower = max(float(sigma), 0.5)
        if lower >= 1.0:
            continue
        left, _ = quad(integrand, lower, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        right = float(family.eta(sigma)) ** q * LOG2
        if right == 0.0:
            if left > 0.0:
                raise InvalidMollifierError(f"log-integral bound fails at σ={sigma:g}")
            continue
        worst = max(worst, left / right)

    if worst > 1.0 + LOG_BOUND_TOL:
        raise InvalidMollifierError(f"log-integral ratio {worst:.12g} exceeds 1")
    return worst


def _check_inner_radius(alpha: float, R0: float) -> None:
    if alpha >= 1 and R0 <= 1:
        raise DomainError(f"log-weighted bound with α={alpha} needs R0 > 1, got R0={R0}")
    if R0 < 1:
        raise DomainError(f"log-weighted bound needs R0 >= 1, got R0={R0}")


def pairing_integral(datum: DatumSpec, family: CutoffFamily, R: float) -> float:
    """
    -∫ Im f(x) ψ_R(0, x) dx for the unit-amplitude radial datum, reduced to a radial
    quadrature times |S^{d-1}|.
    """
    if R <= 2.0 * datum.R0**2:
        raise DomainError(f"pairing needs R > 2 R0² = {2.0 * datum.R0 ** 2:g}, got R={R:g}")

    d = family.d
    q = family.exponent

    def integrand(r: float) -> float:
        return float(datum.unit_profile(r, d)) * float(family.eta(r * r / R)) ** q * r ** (d - 1)

    breaks = {0.0, datum.R0, math.sqrt(R / 2.0), math.sqrt(R)}
    if datum.smoothing_width > 0:
        breaks.add(max(datum.R0 - datum.smoothing_width, 0.0))
    edges = sorted(breaks)

    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece, _ = quad(integrand, lo, hi, epsabs=QUAD_TOL, epsrel=1e-10, limit=200)
        total += piece
    return sphere_measure(d) * total


def radial_log_integral(alpha: float, R0: float, R: float) -> float:
    """Closed form of ∫_{R0}^{√(R/2)} r^{-1} (log r)^{-α} dr."""
    _check_inner_radius(alpha, R0)
    if R <= 2.0 * R0**2:
        raise DomainError(f"needs R > 2 R0² = {2.0 * R0 ** 2:g}, got R={R:g}")
    upper = 0.5 * (math.log(R) - LOG2)
    lower = math.log(R0)
    if alpha == 1:
        return math.log(upper) - math.log(lower)
    return (upper ** (1.0 - alpha) - lower ** (1.0 - alpha)) / (1.0 - alpha)


@dataclass(frozen=True)
class PairingBound:
    case: str
    integral: float
    sphere: float
    C: float
    regime_value: float
    bound: float
    R1: float


def _regime_case(alpha: float) -> str:
    if alpha > 1:
        return "bounded"
    if alpha == 1:
        return "log_log"
    return "log_power"


def _regime_value(alpha: float, R: float) -> float:
    if alpha > 1:
        return 1.0
    if alpha == 1:
        return math.log(math.log(R))
    return math.log(R) ** (1.0 - alpha)


def _sufficiency_margin(alpha: float, R0: float, s: float) -> float:
    """min over the sufficiency inequalities at s = log R (>= 0 when all hold)."""
    margins = [s - math.log(2.0 * R0**2), 0.5 * s - LOG2]
    if alpha > 1:
        margins.append(0.5 * s - LOG2 - 2.0 * math.log(R0))
    elif alpha == 1:
        log_s = math.log(s) if s > 0 else -math.inf
        margins.append(0.5 * log_s - 2.0 * LOG2 - math.log(math.log(R0)))
    else:
        margins.append(0.5 * (s - LOG2) - 2.0 * math.log(R0))
    return min(margins)


def pairing_threshold(alpha: float, R0: float) -> float:
    """Smallest R1 above which every sufficiency inequality of the lower bound holds."""
    _check_inner_radius(alpha, R0)
    lo = max(math.log(2.0 * R0**2), 1e-12)
    if _sufficiency_margin(alpha, R0, lo) >= 0:
        return math.exp(lo)
    hi = lo + 1.0
    while _sufficiency_margin(alpha, R0, hi) < 0:
        hi = lo + 2.0 * (hi - lo)
    root = bisect(lambda s: _sufficiency_margin(alpha, R0, s), lo, hi, xtol=1e-12)
    return math.exp(root)


def _lower_bound_constant(alpha: float, R0: float, sphere: float) -> float:
    if alpha > 1:
        return sphere * (1.0 - 2.0 ** (1.0 - alpha)) * math.log(R0) ** (1.0 - alpha) / (alpha - 1.0)
    if alpha == 1:
        return 0.5 * sphere
    return sphere * (1.0 - 2.0 ** (alpha - 1.0)) * 4.0 ** (alpha - 1.0) / (1.0 - alpha)


def pairing_lower_bound(alpha: float, R0: float, R: float, d: int) -> PairingBound:
    """
    Case label, closed-form radial integral, sphere constant and the regime lower bound
    C, C log log R or C (log R)^{1-α}, valid for R > R1.
    """
    R1 = pairing_threshold(alpha, R0)
    if R <= R1:
        raise PreconditionError(f"lower bound needs R > R1 = {R1:.6g}, got R={R:g}", R1=R1)

    sphere = sphere_measure(d)
    integral = radial_log_integral(alpha, R0, R)
    C = _lower_bound_constant(alpha, R0, sphere)
    regime_value = _regime_value(alpha, R)
    return PairingBound(
        case=_regime_case(alpha),
        integral=integral,
        sphere=sphere,
        C=C,
        regime_value=regime_value,
        bound=C * regime_value,
        R1=R1,
    )


def pairing_bound_rows(
    datum: DatumSpec, family: CutoffFamily, R_values: Iterable[float]
) -> list[dict]:
    """Rows (R, case, integral, bound, ratio) with ratio = pairing / regime value."""
    rows: list[dict] = []
    for R in R_values:
        lower = pairing_lower_bound(datum.alpha, datum.R0, R, family.d)
        integral = pairing_integral(datum, family, R)
        rows.append(
            {
                "R": float(R),
                "case": lower.case,
                "integral": integral,
                "bound": lower.bound,
                "ratio": integral / lower.regime_value,
            }
        )
    return rows
