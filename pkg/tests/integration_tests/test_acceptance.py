
import numpy as np
import pytest

from uhlmann_ness.checks import run_checks
from uhlmann_ness.configuration import Configuration
from uhlmann_ness.geometry import evaluate_point
from uhlmann_ness.models import ModelPoint, closed_form_symbol, translational_model
from uhlmann_ness.scaling import DEFAULT_SIZES, scaling_table, table_regimes
from uhlmann_ness.translational import (
    StencilSymbol,
    WeakCouplingSymbol,
    lemma_property_checks,
    muc_per_site_quadrature,
    muc_per_site_residues,
)

PHIS = np.linspace(-3.1, 3.1, 32)


def ring(lam: float) -> ModelPoint:
    return ModelPoint(family="example_ring", params={"lambda": lam, "theta": 0.3})


def ring_pole(lam: float) -> complex:
    a = 2 * (1 + lam + lam**2) / lam
    roots = np.roots([1.0, a, 1.0])
    return complex(roots[np.argmin(np.abs(roots))])


def rotated(**params: float) -> ModelPoint:
    return ModelPoint(
        family="rotated_xy", params={"delta": 0.5, "h": 0.5, "theta": 0.3, "mu": 1.0, "nu": 0.5, **params}
    )


def test_self_checks_pass() -> None:
    records = run_checks(seed=1, points=20, sizes=(2, 3), lyapunov_instances=10)
    failed = [r for r in records if not r.passed]
    assert not failed, failed
    assert {r.check for r in records} >= {
        "oracle_U", "oracle_J", "oracle_g", "gap_bound", "muc_bound", "lyapunov_kronecker", "lyapunov_residual",
    }


def test_bounds_hold_on_random_quadratic_models() -> None:
    records = run_checks(seed=5, points=0, sizes=(), lyapunov_instances=0, random_models=1000)
    failed = [r for r in records if not r.passed]
    assert not failed, failed[:5]
    names = ("det_inequality", "norm_inequality", "muc_bound", "gap_bound")
    counts = {check: sum(r.check == check for r in records) for check in names}
    assert counts == dict.fromkeys(counts, 1000)
    assert {r.n for r in records} == {1, 2, 3, 4}


@pytest.mark.parametrize("lam", [-0.9, -0.5, 0.3, 0.9, 1.5])
def test_example_ring_routes_agree(lam: float) -> None:
    quad = muc_per_site_quadrature(ring(lam), "lambda", "theta")
    res = muc_per_site_residues(ring(lam), "lambda", "theta")
    assert quad == pytest.approx(res, abs=1e-7)


@pytest.mark.slow
def test_example_ring_routes_agree_across_lambda() -> None:
    for lam in np.linspace(-0.9, 0.9, 50):
        quad = muc_per_site_quadrature(ring(lam), "lambda", "theta")
        res = muc_per_site_residues(ring(lam), "lambda", "theta")
        assert quad == pytest.approx(res, abs=1e-8), lam


@pytest.mark.slow
def test_example_ring_jumps_only_at_minus_one() -> None:
    def u(lam: float) -> float:
        return muc_per_site_residues(ring(lam), "lambda", "theta")

    jump = abs(u(-1.02) - u(-0.98))
    smooth = abs(u(1.02) - u(0.98))
    assert jump > 5 * smooth


def weak_coupling_error(epsilon: float) -> float:
    source = StencilSymbol(translational_model(rotated(epsilon=epsilon)))
    values, singular = source.covariance(PHIS)
    assert not singular.any()
    exact = np.array([closed_form_symbol(0.5, 0.5, 0.3, 1.0, 0.5, phi) for phi in PHIS])
    return float(np.max(np.abs(values - exact)))


def test_weak_coupling_limit() -> None:
    fine = weak_coupling_error(1e-4)
    assert fine < 1e-6
    assert fine < weak_coupling_error(1e-2)


def test_weak_coupling_error_is_first_order() -> None:
    ratio = weak_coupling_error(1e-3) / weak_coupling_error(1e-4)
    assert 8 < ratio < 12


def closed_form_muc(mu: str, nu: str, **params: float) -> float:
    return muc_per_site_quadrature(WeakCouplingSymbol(rotated(**params)), mu, nu)


def test_field_theta_curvature_jumps_at_the_critical_field() -> None:
    def u(h: float) -> float:
        return closed_form_muc("h", "theta", h=h)

    jump = abs(u(1.001) - u(0.999))
    smooth = abs(u(0.501) - u(0.499))
    assert jump > 10 * smooth


def test_anisotropy_theta_curvature_jumps_at_the_isotropic_line() -> None:
    def u(delta: float) -> float:
        return closed_form_muc("delta", "theta", delta=delta, h=0.5)

    jump = abs(u(1e-3) - u(-1e-3))
    smooth = abs(u(0.501) - u(0.499))
    assert jump > 10 * smooth
    # no jump above the critical field
    assert abs(closed_form_muc("delta", "theta", delta=1e-3, h=1.5)) < 0.1 * jump


def test_critical_field_roots_are_removable() -> None:
    report = lemma_property_checks(WeakCouplingSymbol(rotated(h=1.0)))
    on_circle = [root for root in report.roots if root.distance == 0.0]
    assert on_circle
    assert all(root.removable for root in on_circle)
    assert not report.critical


def test_example_ring_pole_approaches_the_circle() -> None:
    cfg = Configuration(lemma_window=0.5)

    def genuine_distance(lam: float) -> float:
        report = lemma_property_checks(ring(lam), config=cfg)
        assert not report.critical
        return min(root.distance for root in report.roots if not root.removable)

    near = genuine_distance(-0.999)
    assert near == pytest.approx(1 - abs(ring_pole(-0.999)), rel=1e-6)
    assert near < genuine_distance(-0.99)


FINITE_SIZE_CASES = [
    (rotated(epsilon=0.5), ("delta", "theta")),
    (rotated(delta=0.8, h=0.4, mu=0.6, nu=1.0, epsilon=0.5), ("h", "theta")),
    (ring(0.5), ("lambda", "theta")),
]


@pytest.mark.slow
@pytest.mark.parametrize("point, pair", FINITE_SIZE_CASES, ids=["rotated_delta_theta", "rotated_h_theta", "ring"])
def test_finite_rings_approach_the_thermodynamic_limit(point: ModelPoint, pair: tuple[str, str]) -> None:
    limit = muc_per_site_quadrature(point, *pair, config=Configuration(quad_tol=1e-12))
    errors = []
    for n in (32, 64, 128, 256):
        U = evaluate_point(point, pair, n).report.entry("U", *pair)
        errors.append(abs(U / n - limit))
    for before, after in zip(errors, errors[1:]):
        assert after <= before or after < 1e-11, errors
    assert errors[-1] < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("regime", table_regimes(), ids=lambda r: r.name)
def test_boundary_chain_scaling_exponents(regime) -> None:
    _, fits = scaling_table(regime.point, DEFAULT_SIZES, threads=4)
    for quantity, expected in regime.exponents.items():
        assert abs(fits[quantity].best.exponent - expected) <= regime.tolerance, quantity
