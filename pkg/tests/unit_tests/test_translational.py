import math

import numpy as np
import pytest

from uhlmann_ness.configuration import Configuration
from uhlmann_ness.errors import CriticalPoint, UnknownFamily, UnknownParameter
from uhlmann_ness.laurent import LaurentMatrix, LaurentPolynomial
from uhlmann_ness.models import ModelPoint, closed_form_symbol, translational_model
from uhlmann_ness.translational import (
    RationalSymbol,
    StencilSymbol,
    SymbolSource,
    WeakCouplingSymbol,
    correlation_length,
    correlation_profile,
    kappa_route_integrand,
    lemma_property_checks,
    muc_per_site_quadrature,
    muc_per_site_residues,
    solve_symbol_covariance,
    symbol_from_closed_form,
    symbol_from_stencils,
    translational_gap,
    u_integrand,
)

PHIS = np.linspace(-3.0, 3.0, 13)


def ring(lam: float, theta: float = 0.3) -> ModelPoint:
    return ModelPoint(family="example_ring", params={"lambda": lam, "theta": theta})


def rotated(**params: float) -> ModelPoint:
    return ModelPoint(family="rotated_xy", params=params)


def ring_pole(lam: float) -> complex:
    """Root inside the disk of ``z² + 2(1 + λ + λ²)/λ z + 1``."""
    a = 2 * (1 + lam + lam**2) / lam
    roots = np.roots([1.0, a, 1.0])
    return complex(roots[np.argmin(np.abs(roots))])


class PoleOnCircleSource(SymbolSource):
    """γ̃ = 0.1·I/(z - 1): a genuine pole at z = 1."""

    def rational(self) -> RationalSymbol:
        c = LaurentPolynomial.constant(0.1)
        zero = LaurentPolynomial.constant(0.0)
        eta = LaurentMatrix.from_rows([[c, zero], [zero, c]])
        return RationalSymbol(eta=eta, d=LaurentPolynomial.from_terms({1: 1.0, 0: -1.0}))

    def covariance(self, phis, config=None):  # type: ignore[no-untyped-def]
        values = self.rational().at(np.atleast_1d(phis))
        return values, np.zeros(values.shape[0], dtype=bool)

    def value(self, name: str) -> float:
        return 0.0

    def shifted(self, name: str, step: float) -> SymbolSource:
        return self


def test_rational_form_matches_pointwise_solve() -> None:
    source = StencilSymbol(translational_model(rotated()))
    values, singular = source.covariance(PHIS)
    assert not singular.any()
    np.testing.assert_allclose(source.rational().at(PHIS), values, atol=1e-10)


def test_single_angle_solve_is_hermitian_and_bounded() -> None:
    x, y = symbol_from_stencils(translational_model(rotated()))
    gamma = solve_symbol_covariance(x, y, 0.7)
    np.testing.assert_allclose(gamma, gamma.conj().T, atol=1e-12)
    assert np.max(np.abs(np.linalg.eigvalsh(gamma))) <= 1 + 1e-9


@pytest.mark.parametrize("lam", [-0.5, 0.25, 0.5, 0.9])
def test_example_ring_spectrum(lam: float) -> None:
    source = StencilSymbol(translational_model(ring(lam)))
    values, singular = source.covariance(PHIS)
    assert not singular.any()
    for phi, gamma in zip(PHIS, values):
        c = math.cos(phi)
        g = (1 + lam) / (1 + lam + lam * c + lam**2)
        expected = g * math.sqrt(1 + lam**2 + 2 * lam * c)
        np.testing.assert_allclose(np.abs(np.linalg.eigvalsh(gamma)), [expected, expected], rtol=1e-8)


def test_example_ring_gap() -> None:
    # x₂ = 4|1 + λe^{iφ}|²/n² reaches 4(1 - λ)²/n² at φ = π
    lam = 0.5
    norm = 4 * (lam**2 + lam + 1)
    assert translational_gap(ring(lam)) == pytest.approx(8 * (1 - lam) ** 2 / norm**2, rel=1e-9)


def test_example_ring_gap_closes_at_both_ends() -> None:
    inner = translational_gap(ring(0.5))
    assert translational_gap(ring(0.999)) < 1e-4 * inner
    assert translational_gap(ring(-0.999)) < 1e-4 * inner


def test_gap_needs_stencils() -> None:
    with pytest.raises(UnknownFamily):
        translational_gap(WeakCouplingSymbol(rotated()))


@pytest.mark.parametrize("lam", [0.5, -0.5, -0.9])
def test_example_ring_correlation_length(lam: float) -> None:
    result = correlation_length(ring(lam))
    assert result.flag == ""
    assert result.xi_inv == pytest.approx(-math.log(abs(ring_pole(lam))), rel=1e-6)


def test_correlation_length_grows_toward_minus_one() -> None:
    values = [correlation_length(ring(lam)).xi_inv for lam in (-0.5, -0.9, -0.99)]
    assert values[0] > values[1] > values[2] > 0


def test_pole_on_circle_is_critical() -> None:
    with pytest.raises(CriticalPoint):
        correlation_length(PoleOnCircleSource())
    with pytest.raises(CriticalPoint):
        muc_per_site_quadrature(PoleOnCircleSource(), "a", "b")


def test_removable_roots_on_circle_pass_lemma_checks() -> None:
    # at λ = 1 the zero of x₂ at z = -1 cancels in γ̃
    report = lemma_property_checks(ring(1.0), ("lambda", "theta"))
    assert not report.critical
    assert all(root.removable for root in report.roots if root.distance == 0.0)


def test_weak_coupling_symbol_matches_closed_form() -> None:
    point = rotated(delta=0.5, h=0.3, theta=0.4, mu=1.0, nu=0.5)
    values, singular = WeakCouplingSymbol(point).covariance(PHIS)
    assert not singular.any()
    for phi, gamma in zip(PHIS, values):
        np.testing.assert_allclose(gamma, closed_form_symbol(0.5, 0.3, 0.4, 1.0, 0.5, phi), atol=1e-12)


def test_closed_form_rational_symbol() -> None:
    rat = symbol_from_closed_form(rotated(delta=0.5, h=0.3, theta=0.4, mu=1.0, nu=0.5))
    for phi in PHIS:
        np.testing.assert_allclose(rat.at(phi), closed_form_symbol(0.5, 0.3, 0.4, 1.0, 0.5, phi), atol=1e-10)


def test_correlation_profile_decays_at_the_pole_rate() -> None:
    profile = correlation_profile(ring(0.5), points=256)
    assert profile.shape == (256, 2, 2)
    ratio = np.linalg.norm(profile[6]) / np.linalg.norm(profile[5])
    assert ratio == pytest.approx(abs(ring_pole(0.5)), rel=1e-2)


def test_weak_coupling_needs_rotated_family() -> None:
    with pytest.raises(UnknownFamily):
        WeakCouplingSymbol(ring(0.5))


def test_integrand_routes_agree() -> None:
    source = StencilSymbol(translational_model(rotated()))
    gamma, (d_mu, d_nu), _ = source.covariance_with_derivatives(PHIS, ("delta", "h"))
    for k in range(PHIS.size):
        assert kappa_route_integrand(gamma[k], d_mu[k], d_nu[k]) == pytest.approx(
            u_integrand(gamma[k], d_mu[k], d_nu[k]), abs=1e-9
        )


def test_diagonal_curvature_vanishes() -> None:
    assert muc_per_site_quadrature(ring(0.5), "lambda", "lambda") == 0.0
    assert muc_per_site_residues(ring(0.5), "theta", "theta") == 0.0


def test_example_ring_quadrature_matches_residues() -> None:
    quad = muc_per_site_quadrature(ring(0.5), "lambda", "theta")
    res = muc_per_site_residues(ring(0.5), "lambda", "theta")
    assert quad != 0.0
    assert quad == pytest.approx(res, abs=1e-7)


def test_example_ring_curvature_ignores_theta() -> None:
    a = muc_per_site_quadrature(ring(0.5, theta=0.3), "lambda", "theta")
    b = muc_per_site_quadrature(ring(0.5, theta=1.1), "lambda", "theta")
    assert a == pytest.approx(b, abs=1e-7)


def test_weak_coupling_curvature_vanishes_for_delta_h() -> None:
    for delta in np.linspace(0.1, 2.0, 20):
        for h in np.linspace(0.05, 1.95, 20):
            source = WeakCouplingSymbol(rotated(delta=delta, h=h, theta=0.3, mu=1.0, nu=0.5))
            value = muc_per_site_quadrature(source, "delta", "h")
            assert value == pytest.approx(0.0, abs=1e-10), (delta, h)


GENERIC = dict(delta=0.8, h=0.4, theta=0.3, mu=0.6, nu=1.0)


@pytest.mark.parametrize("pair", [("delta", "h"), ("h", "theta")])
def test_rotated_chain_residues_match_quadrature(pair: tuple[str, str]) -> None:
    point = rotated(**GENERIC, epsilon=0.5)
    cfg = Configuration(quad_tol=1e-12)
    quad = muc_per_site_quadrature(point, *pair, config=cfg)
    res = muc_per_site_residues(point, *pair, config=cfg)
    assert res == pytest.approx(quad, rel=1e-8, abs=1e-15)


def test_rotated_chain_residues_match_quadrature_at_weak_coupling() -> None:
    point = rotated(**GENERIC, epsilon=0.05)
    cfg = Configuration(quad_tol=1e-14)
    quad = muc_per_site_quadrature(point, "h", "theta", config=cfg)
    res = muc_per_site_residues(point, "h", "theta", config=cfg)
    assert quad != 0.0
    assert res == pytest.approx(quad, rel=1e-5)


@pytest.mark.parametrize("name", ["delta", "h", "theta", "mu", "epsilon"])
def test_stencil_rational_derivative_matches_coefficient_differences(name: str) -> None:
    source = StencilSymbol(translational_model(rotated(**GENERIC, epsilon=0.5)))
    exact = source.rational_derivative(name)
    differenced = SymbolSource.rational_derivative(source, name)
    z = np.exp(1j * PHIS)
    scale = np.max(np.abs(differenced.eta(z)))
    np.testing.assert_allclose(exact.eta(z), differenced.eta(z), atol=1e-6 * max(scale, 1.0))
    np.testing.assert_allclose(
        exact.d(z), differenced.d(z), atol=1e-6 * max(np.max(np.abs(differenced.d(z))), 1.0)
    )


@pytest.mark.parametrize("name", ["delta", "h", "theta", "mu", "nu"])
def test_weak_coupling_derivatives_match_differences(name: str) -> None:
    point = rotated(**GENERIC)
    _, (exact,), singular = WeakCouplingSymbol(point).covariance_with_derivatives(PHIS, (name,))
    assert not singular.any()
    step = 1e-6
    plus, _ = WeakCouplingSymbol(point.shifted(name, step)).covariance(PHIS)
    minus, _ = WeakCouplingSymbol(point.shifted(name, -step)).covariance(PHIS)
    np.testing.assert_allclose(exact, (plus - minus) / (2 * step), atol=1e-7)


def test_weak_coupling_derivatives_in_epsilon_vanish() -> None:
    source = WeakCouplingSymbol(rotated(**GENERIC))
    _, (d_eps,), _ = source.covariance_with_derivatives(PHIS, ("epsilon",))
    assert np.max(np.abs(d_eps)) == 0.0
    with pytest.raises(UnknownParameter):
        source.rational_derivative("lambda")
