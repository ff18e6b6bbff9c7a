# tests/test_nonlinearity.py

import math

import numpy as np
import pytest

from src.errors import ConfigurationError, DomainError, SymbolEvaluationError
from src.nonlinearity import (
    CoefficientTable,
    HomogeneousNonlinearity,
    PeriodicSymbol,
    check_homogeneity,
    critical_power,
    decomposition_residual,
    evaluate,
    evaluate_term,
    fourier_coefficients,
    margin_mu,
    named_symbol,
    nonlinearity_from_spec,
    parseval_error,
    synthesize_symbol,
)


def test_critical_power_per_dimension():
    assert critical_power(1) == 3.0
    assert critical_power(2) == 2.0
    assert abs(critical_power(3) - 5.0 / 3.0) < 1e-15

    with pytest.raises(DomainError):
        critical_power(0)


def test_fourier_coefficients_of_pure_phase():
    """
    g(θ) = e^{iθ} has a single coefficient g_1 = 1; the quadrature is exact
    for trigonometric polynomials, so every other order is at rounding level.
    """
    table = fourier_coefficients(named_symbol("phase"), N=8)

    assert table.order == 8
    assert abs(table[1] - 1.0) < 1e-12
    for n in range(-8, 9):
        if n != 1:
            assert abs(table[n]) < 1e-12

    assert table.gauge_coefficient(tol=1e-10) == pytest.approx(1.0)


def test_fourier_coefficients_of_abs_cos_are_real_and_even():
    """|cos θ| only carries even orders, with g_0 = 2/π."""
    table = fourier_coefficients(named_symbol("abs_cos"), N=16, M=1024)

    assert abs(table.g0 - 2.0 / math.pi) < 1e-5
    for n in range(1, 17):
        assert abs(table[n] - table[-n]) < 1e-12
        assert abs(table[n].imag) < 1e-12
    assert abs(table[3]) < 1e-12
    # g_2 = 2/(3π) for |cos θ|
    assert abs(table[2] - 2.0 / (3.0 * math.pi)) < 1e-5


def test_truncation_error_shrinks_with_order():
    symbol = named_symbol("abs_cos")
    coarse = decomposition_residual(symbol, fourier_coefficients(symbol, N=4))
    fine = decomposition_residual(symbol, fourier_coefficients(symbol, N=64))

    assert fine < coarse
    assert fine < 0.02


def test_fourier_coefficients_rejects_bad_quadrature():
    symbol = named_symbol("one")

    with pytest.raises(DomainError):
        fourier_coefficients(symbol, N=-1)

    # not a power of two
    with pytest.raises(DomainError):
        fourier_coefficients(symbol, N=4, M=48)

    # too few points for the order
    with pytest.raises(DomainError):
        fourier_coefficients(symbol, N=8, M=16)


def test_non_finite_symbol_reports_angle():
    """A symbol that blows up at θ = 0 is reported with the offending angle."""
    bad = PeriodicSymbol(evaluator=lambda theta: 1.0 / np.sin(theta))

    with pytest.raises(SymbolEvaluationError) as excinfo:
        fourier_coefficients(bad, N=4)

    assert excinfo.value.theta == 0.0


def test_synthesize_symbol_inverts_table():
    table = CoefficientTable(d=1, coefficients={0: 1.0, 2: 0.25 - 0.5j, -3: 0.1})
    symbol = synthesize_symbol(table)

    theta = np.linspace(0.0, 2.0 * math.pi, 17)
    expected = 1.0 + (0.25 - 0.5j) * np.exp(2j * theta) + 0.1 * np.exp(-3j * theta)
    assert np.max(np.abs(symbol(theta) - expected)) < 1e-14

    recovered = fourier_coefficients(symbol, N=4, d=1)
    assert abs(recovered[2] - (0.25 - 0.5j)) < 1e-12
    assert abs(recovered[-3] - 0.1) < 1e-12


def test_parseval_for_analytic_symbol():
    """The coefficients of exp(cos θ + i sin 2θ) carry its whole energy."""
    symbol = PeriodicSymbol(
        evaluator=lambda theta: np.exp(np.cos(theta) + 1j * np.sin(2 * theta))
    )

    table = fourier_coefficients(symbol, N=32)

    assert parseval_error(symbol, table) < 1e-10
    assert decomposition_residual(symbol, table) < 1e-10


@pytest.mark.parametrize("N", [1, 8, 64])
def test_random_table_round_trip(N):
    """Random coefficients → symbol → coefficients, for orders up to 64."""
    rng = np.random.default_rng(N)
    coefficients = {n: complex(rng.normal(), rng.normal()) for n in range(-N, N + 1)}
    table = CoefficientTable(d=1, coefficients=coefficients)
    symbol = synthesize_symbol(table)

    recovered = fourier_coefficients(symbol, N=N)

    for n, g in coefficients.items():
        assert abs(recovered[n] - g) < 1e-12
    assert parseval_error(symbol, recovered) < 1e-10


def test_evaluate_constant_and_gauge():
    """
    d = 1, p0 = 3:
    - constant symbol: F(u) = |u|^3
    - gauge term:      F(u) = |u|^2 u
    """
    constant = nonlinearity_from_spec("constant", 1)
    gauge = nonlinearity_from_spec("gauge", 1)

    assert evaluate(constant, 2.0) == pytest.approx(8.0)
    assert evaluate(constant, 2j) == pytest.approx(8.0)
    assert evaluate(gauge, 2j) == pytest.approx(8j)
    assert evaluate(gauge, 0.0) == 0j

    u = np.array([0.0, 1.0, -1.0, 1j, 0.5 + 0.5j])
    np.testing.assert_allclose(evaluate(gauge, u), np.abs(u) ** 2 * u, atol=1e-14)


def test_symbol_and_table_paths_agree():
    """The same F evaluated through its symbol and through its coefficients."""
    table = CoefficientTable(d=2, coefficients={0: 1.0, 1: 0.3, -2: 0.2j})
    by_table = HomogeneousNonlinearity(source=table, d=2)
    by_symbol = HomogeneousNonlinearity(source=synthesize_symbol(table), d=2)

    rng = np.random.default_rng(3)
    u = rng.normal(size=64) + 1j * rng.normal(size=64)
    np.testing.assert_allclose(evaluate(by_table, u), evaluate(by_symbol, u), atol=1e-12)


def test_evaluate_term_vanishes_at_zero_for_every_order():
    for n in (-3, -1, 0, 1, 2, 5):
        assert evaluate_term(n, 0.0, d=2) == 0j

    u = 0.3 - 0.4j
    assert abs(evaluate_term(0, u, d=2) - abs(u) ** 2) < 1e-15
    assert abs(evaluate_term(2, u, d=2) - u**2) < 1e-15


def test_every_term_has_modulus_u_to_the_p0():
    # F_{-3}(1 + i) = 2√2 e^{-3iπ/4} in d = 1
    assert abs(evaluate_term(-3, 1 + 1j, d=1) - (-2.0 - 2.0j)) < 1e-14

    rng = np.random.default_rng(7)
    u = rng.normal(size=50) + 1j * rng.normal(size=50)
    for d in (1, 2):
        for n in (-3, -1, 0, 1, 2, 4):
            np.testing.assert_allclose(
                np.abs(evaluate_term(n, u, d)), np.abs(u) ** critical_power(d), rtol=1e-13
            )


@pytest.mark.parametrize("spec", ["mixed:1,0.3", "constant", "gauge"])
def test_homogeneity_on_random_samples(spec):
    """F(λz) = λ^{p0} F(z) on 100 random pairs, λ in [0.1, 10]."""
    rng = np.random.default_rng(11)
    lams = 10.0 ** rng.uniform(-1.0, 1.0, size=100)
    zs = rng.normal(size=100) + 1j * rng.normal(size=100)
    samples = list(zip(lams, zs))

    for d in (1, 2):
        F = nonlinearity_from_spec(spec, d)
        assert check_homogeneity(F, samples) < 1e-9
    by_symbol = HomogeneousNonlinearity(source=named_symbol("half_wave"), d=1)
    assert check_homogeneity(by_symbol, samples) < 1e-9


def test_check_homogeneity():
    F = HomogeneousNonlinearity(source=named_symbol("half_wave"), d=1)
    samples = [(lam, z) for lam in (0.1, 1.0, 7.5) for z in (1.0, -0.3j, 0.2 + 0.9j)]

    assert check_homogeneity(F, samples) < 1e-10

    with pytest.raises(DomainError):
        check_homogeneity(F, [(-1.0, 1.0)])


def test_margin_mu():
    assert margin_mu(nonlinearity_from_spec("mixed:1,0.3", 1).table()) == pytest.approx(0.7)
    assert margin_mu(nonlinearity_from_spec("gauge", 1).table()) == pytest.approx(-1.0)

    table = CoefficientTable(d=1, coefficients={0: 2.0 + 5j, 1: 0.5, -1: 0.5j})
    assert margin_mu(table) == pytest.approx(1.0)


def test_coefficient_table_rows():
    table = CoefficientTable.from_rows([[1, 0.5, 0.0], [0, 1.0], [1, 0.0, 0.25]], d=1, order=3)

    assert table.order == 3
    assert table[1] == 0.5 + 0.25j
    assert table.as_rows() == [[0, 1.0, 0.0], [1, 0.5, 0.25]]
    assert table.l1_norm() == pytest.approx(1.0 + abs(0.5 + 0.25j))
    assert table.l1_tail(0) == pytest.approx(abs(0.5 + 0.25j))
    assert table.l1_tail(1) == 0.0
    assert table.gauge_coefficient() is None

    with pytest.raises(ConfigurationError):
        CoefficientTable.from_rows([[1]], d=1)

    with pytest.raises(ConfigurationError):
        CoefficientTable(d=1, coefficients={5: 1.0}, order=2)


def test_nonlinearity_from_spec_variants():
    assert nonlinearity_from_spec("zero", 1).is_zero()
    assert nonlinearity_from_spec("gauge", 2).gauge_coefficient() == 1.0
    assert nonlinearity_from_spec({"preset": "constant"}, 1).gauge_coefficient() is None

    custom = nonlinearity_from_spec({"coefficients": [[0, 1.0, 0.0], [2, 0.1, 0.0]]}, 1)
    assert custom.table()[2] == 0.1

    with pytest.raises(ConfigurationError):
        nonlinearity_from_spec("cubic", 1)

    with pytest.raises(ConfigurationError):
        nonlinearity_from_spec("mixed:1", 1)

    with pytest.raises(ConfigurationError):
        nonlinearity_from_spec(3.0, 1)


def test_dimension_mismatch_and_unknown_symbol():
    table = CoefficientTable(d=2, coefficients={0: 1.0})

    with pytest.raises(ConfigurationError):
        HomogeneousNonlinearity(source=table, d=1)

    with pytest.raises(ConfigurationError):
        named_symbol("square_wave")
