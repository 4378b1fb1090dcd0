import numpy as np
import pytest

from uhlmann_ness.errors import SingularFisher
from uhlmann_ness.geometry import (
    evaluate_point,
    gap_bound_check,
    holevo_matrix,
    incompatibility_report,
    parameter_derivatives,
    purity_factor,
    quantum_fisher_tensor,
)
from uhlmann_ness.models import ModelPoint

PAIR = ("delta", "h")


@pytest.fixture(scope="module")
def geometry():
    point = ModelPoint(family="boundary_xy", params={"delta": 1.25, "h": 0.3})
    return evaluate_point(point, PAIR, 6)


def test_report_shapes_and_symmetry(geometry) -> None:
    report = geometry.report
    assert report.params == PAIR
    assert report.J.shape == (2, 2)
    np.testing.assert_allclose(report.J, report.J.T)
    np.testing.assert_allclose(report.U, -report.U.T)
    np.testing.assert_allclose(report.g, report.J / 4)
    assert report.entry("U", "delta", "h") == -report.entry("U", "h", "delta")
    assert report.flags == ()


def test_fisher_matrix_is_positive(geometry) -> None:
    eig = np.linalg.eigvalsh(geometry.report.J)
    assert np.all(eig > 0)
    assert np.all(np.linalg.eigvalsh(geometry.report.I) >= -1e-10)


def test_derivative_routes_agree(geometry) -> None:
    fd = parameter_derivatives(
        geometry.point, geometry.covariance, PAIR, geometry.n, method="fd"
    )
    for exact, approx in zip(geometry.derivs, fd):
        assert np.max(np.abs(exact - approx)) < 1e-6 * max(1.0, np.max(np.abs(exact)))


def test_unknown_derivative_method(geometry) -> None:
    with pytest.raises(ValueError):
        parameter_derivatives(geometry.point, geometry.covariance, PAIR, geometry.n, method="ad")


def test_incompatibility_inequalities(geometry) -> None:
    report = geometry.report
    bounds = incompatibility_report(report)
    assert bounds.det_inequality
    assert bounds.norm_inequality
    assert bounds.muc_margin >= 0
    assert bounds.max_eig_J >= bounds.max_eig_2iU - 1e-10
    assert report.ratio_incompat == pytest.approx(2 * abs(report.U[0, 1]) / report.det_J)


def test_incompatibility_ratio_needs_two_parameters(geometry) -> None:
    single = quantum_fisher_tensor(geometry.spectrum, geometry.derivs[:1], PAIR[:1])
    assert np.isnan(single.ratio_incompat)


def test_discrepancy_bound_closed_form(geometry) -> None:
    bounds = incompatibility_report(geometry.report)
    assert bounds.discrepancy_bound == pytest.approx(bounds.discrepancy_closed_form, rel=1e-8)
    weight = np.diag([2.0, 0.5])
    weighted = incompatibility_report(geometry.report, weight)
    assert weighted.discrepancy_bound == pytest.approx(weighted.discrepancy_closed_form, rel=1e-8)


def test_holevo_matrix(geometry) -> None:
    report = geometry.report
    inv = np.linalg.inv(report.J)
    np.testing.assert_allclose(
        holevo_matrix(report), inv - 2j * inv @ report.U @ inv, atol=1e-10 * np.max(np.abs(inv)) ** 2
    )


def test_gap_bound_holds(geometry) -> None:
    bound = gap_bound_check(
        geometry.pair, geometry.spectrum, geometry.report, geometry.drift_derivs
    )
    assert bound.holds
    assert bound.gap == pytest.approx(geometry.gap)
    assert bound.per_site_muc == pytest.approx(np.max(np.abs(geometry.report.U)) / 6)


def test_purity_factor(geometry) -> None:
    literal, alternate = purity_factor(geometry.spectrum)
    assert literal >= 1.0
    assert alternate >= 1.0


def test_single_parameter_has_no_curvature() -> None:
    point = ModelPoint(family="boundary_xy")
    report = evaluate_point(point, ("h",), 4).report
    assert report.U.shape == (1, 1)
    assert report.U[0, 0] == 0.0
    assert report.J[0, 0] > 0


def test_singular_fisher_is_flagged(geometry) -> None:
    zeros = [np.zeros_like(d) for d in geometry.derivs]
    report = quantum_fisher_tensor(geometry.spectrum, zeros, PAIR)
    assert "singular_fisher" in report.flags
    with pytest.raises(SingularFisher):
        quantum_fisher_tensor(geometry.spectrum, zeros, PAIR, strict=True)
