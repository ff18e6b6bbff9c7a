"""
Lifespan bounds and the extremal ODE behind them.

Closed-form upper bounds (with an unspecified constant C):

- power decay |x|^{-k}:            C ε^{-2/(d-k)} for k < d, exp(C/ε) for k = d
- log-weighted |x|^{-d}(log|x|)^{-α}: exp(C ε^{-2/d}) for α > 1,
                                    exp(C (ε log 1/ε)^{-2/d}) for α = 1,
                                    exp(C ε^{-2/(d+2(1-α))}) for α < 1

The ODE model takes the differential inequality of the test-function argument with
equality, in s = log R:

    dY/ds = C_ode (ε b(s) + κ Y)^{p0},  Y(s1) = 0

and its escape radius R* reproduces the same three ε-scalings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp, trapezoid

from src.errors import ConfigurationError, DomainError
from src.nonlinearity import CoefficientTable, evaluate_term, margin_mu
from src.testfunc import (
    CutoffFamily,
    DerivativeBudget,
    LOG2,
    pairing_integral,
    unit_ball_volume,
)
from src.utils.logutils import get_logger, color, indent, GREEN, RED, YELLOW, ICONS

logger = get_logger(__name__)

# κ·C_ode = 0.1 at μ = 1
DEFAULT_C_ODE = 0.1 * math.log(2.0)

ESCAPE_THRESHOLD = 1e12
CERTIFY_FACTOR = 10.0
CERTIFY_TOL = 1e-9
S_MAX = 1e30
QUADRATURE_TOL = 0.05
CHAIN_TOL = 0.05


# ----------------- EXPONENTS -----------------


def _exact(value: float) -> Fraction:
    return Fraction(str(value))


def log_weighted_exponent(d: int, alpha: float) -> Fraction:
    """Power of 1/ε (or of 1/(ε log 1/ε) when α = 1) inside the exponential bound."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got d={d}")
    alpha = _exact(alpha)
    if alpha >= 1:
        return Fraction(2, d)
    return Fraction(2) / (d + 2 * (1 - alpha))


def power_decay_exponent(d: int, k: float) -> Fraction:
    """Power of 1/ε in T (k < d) or in log T (k = d)."""
    k = _exact(k)
    if k > d:
        raise DomainError(f"power decay needs k <= d={d}, got k={k}")
    if k == d:
        return Fraction(1)
    return Fraction(2) / (d - k)


def blowup_rate_gain(d: int) -> Fraction:
    """Exponent gained in log T by the log-weighted α = 0 bound over the k = d bound."""
    return power_decay_exponent(d, d) - log_weighted_exponent(d, 0)


def bound_formula(d: int, alpha: float | None = None, k: float | None = None) -> str:
    if k is not None:
        if _exact(k) == d:
            return "exp(C/eps)"
        return f"C*eps^(-{power_decay_exponent(d, k)})"
    exponent = log_weighted_exponent(d, alpha)
    if alpha == 1:
        return f"exp(C*(eps*log(1/eps))^(-{exponent}))"
    return f"exp(C*eps^(-{exponent}))"


# ----------------- BOUNDS -----------------


@dataclass(frozen=True)
class RegimeParams:
    d: int
    epsilon: float
    C: float = 1.0
    alpha: float | None = None
    k: float | None = None
    mu: float = 1.0
    epsilon0: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got d={self.d}")
        if self.epsilon <= 0:
            raise DomainError(f"ε must be positive, got {self.epsilon}")
        if self.C <= 0:
            raise DomainError(f"C must be positive, got {self.C}")
        if self.mu <= 0:
            raise DomainError(f"μ must be positive, got {self.mu}")
        if self.epsilon0 is not None and self.epsilon >= self.epsilon0:
            raise DomainError(f"ε={self.epsilon} is outside (0, ε0={self.epsilon0})")


def log_power_decay_bound(params: RegimeParams) -> float:
    """log of the power-decay lifespan bound."""
    if params.k is None:
        raise ConfigurationError("power-decay bound needs k")
    d, k, eps, C = params.d, params.k, params.epsilon, params.C
    exponent = float(power_decay_exponent(d, k))
    if _exact(k) == d:
        return C / eps
    return math.log(C) + exponent * math.log(1.0 / eps)


def power_decay_bound(params: RegimeParams) -> float:
    return _safe_exp(log_power_decay_bound(params))


def log_log_weighted_bound(params: RegimeParams) -> float:
    """log of the log-weighted lifespan bound (the bound itself is exp of this)."""
    if params.alpha is None:
        raise ConfigurationError("log-weighted bound needs α")
    d, alpha, eps, C = params.d, params.alpha, params.epsilon, params.C
    exponent = float(log_weighted_exponent(d, alpha))
    if alpha == 1:
        if eps >= 1:
            raise DomainError(f"the α = 1 bound needs ε < 1, got ε={eps}")
        return C * (eps * math.log(1.0 / eps)) ** (-exponent)
    return C * eps ** (-exponent)


def log_weighted_bound(params: RegimeParams) -> float:
    return _safe_exp(log_log_weighted_bound(params))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


# ----------------- ODE MODEL -----------------


@dataclass(frozen=True)
class OdeModel:
    p0: float
    alpha: float
    C_forcing: float = 1.0
    kappa: float = 1.0 / LOG2
    C_ode: float = 1.0
    R1: float = 1.0

    def __post_init__(self):
        if self.p0 <= 1:
            raise DomainError(f"p0 must exceed 1, got {self.p0}")
        if self.C_forcing < 0 or self.kappa < 0 or self.C_ode <= 0 or self.R1 <= 0:
            raise DomainError("forcing and κ must be >= 0, C_ode and R1 positive")
        if self.alpha == 1 and self.R1 < math.e:
            raise DomainError(f"the α = 1 forcing log log R needs R1 >= e, got R1={self.R1}")
        if self.alpha < 1 and self.R1 < 1:
            raise DomainError(f"the α < 1 forcing (log R)^(1-α) needs R1 >= 1, got R1={self.R1}")

    @classmethod
    def for_regime(
        cls,
        d: int,
        alpha: float,
        mu: float = 1.0,
        C_forcing: float = 1.0,
        C_ode: float = DEFAULT_C_ODE,
        R1: float | None = None,
    ) -> OdeModel:
        if mu <= 0:
            raise DomainError(f"μ must be positive, got {mu}")
        if R1 is None:
            R1 = math.e if alpha == 1 else 1.0
        return cls(
            p0=1.0 + 2.0 / d,
            alpha=alpha,
            C_forcing=C_forcing,
            kappa=mu / LOG2,
            C_ode=C_ode,
            R1=R1,
        )

    @property
    def s1(self) -> float:
        return math.log(self.R1)

    def forcing(self, s: float) -> float:
        """b as a function of s = log R: constant, C log s, or C s^{1-α}."""
        if self.alpha > 1:
            return self.C_forcing
        if self.alpha == 1:
            return self.C_forcing * math.log(max(s, 1.0))
        return self.C_forcing * max(s, 0.0) ** (1.0 - self.alpha)

    def forcing_slope(self, s: float) -> float:
        if self.alpha > 1:
            return 0.0
        if self.alpha == 1:
            return self.C_forcing / s if s > 1.0 else 0.0
        return self.C_forcing * (1.0 - self.alpha) * s ** (-self.alpha) if s > 0 else 0.0

    def rhs(self, s: float, Y: np.ndarray, epsilon: float) -> list[float]:
        base = max(epsilon * self.forcing(s) + self.kappa * Y[0], 0.0)
        return [self.C_ode * base**self.p0]

    def reciprocal_rhs(self, s: float, W: np.ndarray, epsilon: float) -> list[float]:
        """The same equation for W = (ε b + κ Y)^{1-p0}, which reaches 0 linearly at blow-up."""
        w = max(W[0], 0.0)
        source = epsilon * self.forcing_slope(s) * w ** (self.p0 / (self.p0 - 1.0))
        return [(1.0 - self.p0) * (source + self.kappa * self.C_ode)]

    def closed_form_log_radius(self, epsilon: float) -> float:
        """log R* for constant forcing: s1 + (c1 ε)^{1-p0} / (C_ode κ (p0-1))."""
        if self.alpha <= 1:
            raise DomainError("closed form only exists for constant forcing (α > 1)")
        if self.kappa == 0:
            return math.inf
        c1 = self.C_forcing * epsilon
        return self.s1 + c1 ** (1.0 - self.p0) / (self.C_ode * self.kappa * (self.p0 - 1.0))


@dataclass(frozen=True)
class OdeResult:
    epsilon: float
    detected: bool
    log_R_star: float
    certified_shift: float
    scanned: tuple[float, float]

    @property
    def R_star(self) -> float:
        return _safe_exp(self.log_R_star) if self.detected else math.inf


def _event(fn, direction: int):
    fn.terminal = True
    fn.direction = direction
    return fn


def _escape_log_radius(model: OdeModel, epsilon: float, threshold: float, s_max: float):
    """
    Integrate Y until ε b + κ Y reaches 1, then W = (ε b + κ Y)^{1-p0} until Y = threshold.
    Near blow-up Y cannot be resolved in s, while W stays close to linear.
    """
    s_stop = model.s1 + s_max
    options = dict(method="DOP853", rtol=1e-11, args=(epsilon,))
    s_switch = model.s1
    z_switch = epsilon * model.forcing(model.s1)

    if model.kappa == 0 or z_switch < 1.0:
        escaped = _event(lambda s, Y, eps: Y[0] - threshold, 1)
        events = [escaped]
        if model.kappa > 0:
            events.append(
                _event(lambda s, Y, eps: eps * model.forcing(s) + model.kappa * Y[0] - 1.0, 1)
            )
        sol = solve_ivp(model.rhs, (model.s1, s_stop), [0.0], atol=1e-30, events=events, **options)
        if sol.status != 1:
            return None, float(sol.t[-1])
        if sol.t_events[0].size:
            return float(sol.t_events[0][0]), float(sol.t[-1])
        s_switch, z_switch = float(sol.t_events[1][0]), 1.0

    exponent = 1.0 - model.p0
    escaped_w = _event(
        lambda s, W, eps: W[0] - (eps * model.forcing(s) + model.kappa * threshold) ** exponent, -1
    )
    sol = solve_ivp(
        model.reciprocal_rhs,
        (s_switch, s_stop),
        [z_switch**exponent],
        atol=1e-16,
        events=escaped_w,
        **options,
    )
    if sol.status == 1 and sol.t_events[0].size:
        return float(sol.t_events[0][0]), float(sol.t[-1])
    return None, float(sol.t[-1])


def ode_blowup_radius(
    model: OdeModel,
    epsilon: float,
    threshold: float = ESCAPE_THRESHOLD,
    s_max: float = S_MAX,
) -> OdeResult:
    """
    Integrate the extremal ODE until Y reaches `threshold`, then certify that raising the
    threshold tenfold moves log R* by less than 1e-9 (relative to max(1, log R*)).
    """
    if epsilon <= 0:
        raise DomainError(f"ε must be positive, got {epsilon}")

    s_star, s_end = _escape_log_radius(model, epsilon, threshold, s_max)
    if s_star is None:
        logger.debug(f"no escape for ε={epsilon:g} on s in [{model.s1:g}, {s_end:g}]")
        return OdeResult(epsilon, False, math.inf, math.inf, (model.s1, s_end))

    s_check, s_end_check = _escape_log_radius(model, epsilon, CERTIFY_FACTOR * threshold, s_max)
    shift = math.inf if s_check is None else abs(s_check - s_star)
    certified = shift <= CERTIFY_TOL * max(1.0, abs(s_star))
    if not certified:
        logger.debug(f"escape for ε={epsilon:g} not certified (shift {shift:.3g})")
        return OdeResult(epsilon, False, math.inf, shift, (model.s1, max(s_end, s_end_check)))
    return OdeResult(epsilon, True, s_star, shift, (model.s1, s_star))


# ----------------- α = 1 INVERSION -----------------


@dataclass(frozen=True)
class Alpha1Threshold:
    eps_star: np.ndarray
    S_star: np.ndarray
    delta_star: float
    chain_closed: bool

    @property
    def log_bound(self) -> np.ndarray:
        """log of the implied radius bound exp(2 S*)."""
        return 2.0 * self.S_star


def alpha1_threshold(epsilon, p0: float, C: float, c_star: float) -> Alpha1Threshold:
    """
    ε* = ε^{p0-1}, S* = c* ε*^{-1} (log ε*^{-1})^{1-p0}, δ* the infimum of the bracket
    (1 + (log c* - (p0-1) log log ε*^{-1}) / log ε*^{-1})^{p0-1} over the given ε.
    """
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise DomainError("α = 1 inversion needs ε in (0, 1)")
    if p0 <= 1 or C <= 0 or c_star <= 0:
        raise DomainError("needs p0 > 1, C > 0 and c* > 0")

    eps_star = eps ** (p0 - 1.0)
    log_inv = np.log(1.0 / eps_star)
    if np.any(log_inv <= 0):
        raise DomainError("log ε*^{-1} must be positive")
    S_star = c_star / eps_star * log_inv ** (1.0 - p0)

    bracket = 1.0 + (math.log(c_star) - (p0 - 1.0) * np.log(log_inv)) / log_inv
    if np.any(bracket <= 0):
        raise DomainError("bracket is not positive on this ε range; increase c* or shrink ε")
    delta_star = float(np.min(bracket ** (p0 - 1.0)))

    # ε^{p0-1} S*(log S*)^{p0-1} equals c* times the bracket, so it is >= c* δ*
    achieved = eps_star * S_star * np.log(S_star) ** (p0 - 1.0)
    if np.any(achieved < c_star * delta_star * (1.0 - 1e-12)):
        raise DomainError("inversion identity failed numerically")
    return Alpha1Threshold(
        eps_star=eps_star,
        S_star=S_star,
        delta_star=delta_star,
        chain_closed=c_star * delta_star > 1.0 / C,
    )


def check_alpha1_inversion(epsilon: float, p0: float, C: float, c_star: float, S_grid) -> bool:
    """Every S > 1 with ε^{p0-1} S (log S)^{p0-1} <= 1/C must satisfy S <= S*."""
    threshold = alpha1_threshold(epsilon, p0, C, c_star)
    if not threshold.chain_closed:
        raise DomainError("c* δ* <= 1/C: the inversion does not close for these constants")
    S_star = float(threshold.S_star[0])
    S = np.asarray(S_grid, dtype=float)
    S = S[S > 1.0]
    admissible = epsilon ** (p0 - 1.0) * S * np.log(S) ** (p0 - 1.0) <= 1.0 / C
    return bool(np.all(S[admissible] <= S_star))


# ----------------- EMPIRICAL CHECK -----------------


@dataclass
class InequalityReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return any(r["status"] == "inconclusive" for r in self.rows)

    @property
    def checked(self) -> list[dict]:
        return [r for r in self.rows if r["status"] == "checked"]

    @property
    def passed(self) -> bool:
        checked = self.checked
        if not checked or self.inconclusive:
            return False
        return all(r["check_i"] and r["check_ii"] and r["check_iii"] for r in checked)


def _log_kernel(family: CutoffFamily, points: int = 4001):
    """G(σ) = ∫_σ^∞ η*(s)^{2p0'} ds/s tabulated on [1/2, 1].

    Constant below 1/2 and zero above 1.
    """
    s = np.linspace(0.5, 1.0, points)
    integrand = family.eta(s) ** family.exponent / s
    tail = cumulative_trapezoid(integrand[::-1], s[::-1], initial=0.0)[::-1]
    return s, -tail


def _time_integral(values: np.ndarray, times: np.ndarray) -> tuple[float, float]:
    """Trapezoid over all snapshots plus a Richardson error estimate from every other one."""
    full = float(trapezoid(values, times))
    idx = np.arange(0, len(times), 2)
    if idx[-1] != len(times) - 1:
        idx = np.append(idx, len(times) - 1)
    coarse = float(trapezoid(values[idx], times[idx]))
    return full, abs(full - coarse) / 3.0


def empirical_inequality_check(
    trajectory,
    family: CutoffFamily,
    R_grid: Iterable[float],
    table: CoefficientTable,
    datum,
    budget: DerivativeBudget,
    quadrature_tol: float = QUADRATURE_TOL,
) -> InequalityReport:
    """
    On stored snapshots, check for every R: |I_n(R)| <= I_0(R), Y(R) <= log 2 I_0(R), and
    ε·pairing + μ I_0(R) <= A (R Y'(R))^{1/p0} |B_1|^{1/p0'} within `quadrature_tol`.
    """
    if not trajectory.snapshots or len(trajectory.snapshots) != len(trajectory.times):
        raise ConfigurationError("empirical check needs a snapshot at every recorded time")
    if len(trajectory.times) < 3:
        raise ConfigurationError("empirical check needs at least three snapshots")

    grid = trajectory.grid
    times = np.asarray(trajectory.times)
    stack = np.stack(trajectory.snapshots)
    modulus_p = np.abs(stack) ** family.p0
    r2 = grid.radius_squared
    mu = margin_mu(table)
    orders = sorted(set(table.nonzero(1e-12 * max(table.l1_norm(), 1.0))) | {0})
    kernel_s, kernel_G = _log_kernel(family)
    volume_factor = unit_ball_volume(grid.d) ** (1.0 / family.p0prime)
    A = budget.chain_constant
    epsilon = datum.epsilon

    report = InequalityReport()
    for R in R_grid:
        R = float(R)
        row = {"R": R}
        if R > times[-1]:
            report.rows.append({**row, "status": "skipped:beyond_trajectory"})
            continue
        if R <= 2.0 * datum.R0**2:
            report.rows.append({**row, "status": "skipped:below_2R0^2"})
            continue
        if math.sqrt(R) >= grid.L:
            report.rows.append({**row, "status": "skipped:out_of_box"})
            continue

        sigma = (r2[None, ...] + times.reshape((-1,) + (1,) * grid.d)) / R
        psi = family.eta(sigma) ** family.exponent
        psi_star = family.eta_star(sigma) ** family.exponent
        G = np.where(sigma >= 1.0, 0.0, np.interp(np.maximum(sigma, 0.5), kernel_s, kernel_G))
        axes = tuple(range(1, grid.d + 1))

        def spatial(density):
            return np.sum(density, axis=axes) * grid.cell_volume

        I0, err0 = _time_integral(spatial(modulus_p * psi), times)
        RY, err_y = _time_integral(spatial(modulus_p * psi_star), times)
        Y, _ = _time_integral(spatial(modulus_p * G), times)

        worst_n = 0.0
        for n in orders:
            if n == 0:
                continue
            term = evaluate_term(n, stack, grid.d)
            In_re, _ = _time_integral(spatial(term.real * psi), times)
            In_im, _ = _time_integral(spatial(term.imag * psi), times)
            worst_n = max(worst_n, abs(complex(In_re, In_im)))

        scale = max(I0, RY, 1e-300)
        if max(err0, err_y) > quadrature_tol * scale:
            report.rows.append(
                {**row, "status": "inconclusive", "quadrature_error": max(err0, err_y)}
            )
            continue

        pairing = epsilon * pairing_integral(datum, family, R)
        lhs = pairing + mu * I0
        rhs = A * RY ** (1.0 / family.p0) * volume_factor
        report.rows.append(
            {
                **row,
                "status": "checked",
                "I0": I0,
                "max_In": worst_n,
                "Y": Y,
                "RY_prime": RY,
                "lhs": lhs,
                "rhs": rhs,
                "check_i": worst_n <= I0 * (1.0 + 1e-10) + 1e-300,
                "check_ii": Y <= LOG2 * I0 * (1.0 + 1e-8) + 1e-300,
                "check_iii": lhs <= rhs * (1.0 + CHAIN_TOL),
            }
        )

    verdict = "passed" if report.passed else "violated or inconclusive"
    tint = GREEN if report.passed else (YELLOW if report.inconclusive else RED)
    logger.info(
        indent(
            color(
                f"{ICONS['oracle']} Inequality chain on {len(report.checked)} radii: {verdict}",
                tint,
            )
        )
    )
    return report
