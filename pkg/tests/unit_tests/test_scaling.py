import math

import numpy as np
import pytest

from uhlmann_ness.errors import InsufficientData, NonPositiveValues
from uhlmann_ness.models import ModelPoint, critical_field
from uhlmann_ness.records import SweepRow
from uhlmann_ness.scaling import (
    fit_power_law,
    fits_from_rows,
    geometric_sizes,
    grid_points,
    plan_tasks,
    table_regimes,
)
from uhlmann_ness.state import sorting_reducer

SIZES = [10, 20, 40, 80, 160]


def test_exact_power_law() -> None:
    fit = fit_power_law(SIZES, [3.0 * n**2 for n in SIZES], "detJ")
    assert fit.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.n_range == (10, 160)
    assert fit.refit is None and fit.best is fit


def test_unsorted_sizes() -> None:
    sizes = SIZES[::-1]
    fit = fit_power_law(sizes, [n**-3 for n in sizes])
    assert fit.exponent == pytest.approx(-3.0, abs=1e-12)


def test_refit_without_smallest_size() -> None:
    values = [n**2 for n in SIZES]
    values[0] *= 10
    fit = fit_power_law(SIZES, values)
    assert fit.r_squared < 0.995
    assert fit.best.exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.best.excluded == (10,)
    assert fit.best.n_range == (20, 160)


def test_non_positive_values_are_dropped() -> None:
    values = [float(n) for n in SIZES] + [0.0]
    fit = fit_power_law(SIZES + [320], values)
    assert fit.excluded == (320,)
    assert fit.exponent == pytest.approx(1.0)


def test_too_few_sizes() -> None:
    with pytest.raises(InsufficientData):
        fit_power_law([10, 20, 40], [1.0, 2.0, 4.0])
    with pytest.raises(InsufficientData):
        fit_power_law(SIZES, [1.0, math.nan, -1.0, 2.0, 3.0])


def test_nothing_positive() -> None:
    with pytest.raises(NonPositiveValues):
        fit_power_law(SIZES, [0.0, -1.0, 0.0, -2.0, 0.0])


def test_geometric_sizes() -> None:
    assert geometric_sizes(20, 5) == [20, 40, 80, 160, 320]
    assert geometric_sizes(3, 3, ratio=3) == [3, 9, 27]


def test_grid_order_first_axis_slowest() -> None:
    base = ModelPoint(family="boundary_xy")
    points = grid_points(base, {"delta": (0.0, 1.0, 2), "h": (0.0, 2.0, 3)})
    assert [(p.value("delta"), p.value("h")) for p in points] == [
        (0.0, 0.0),
        (0.0, 1.0),
        (0.0, 2.0),
        (1.0, 0.0),
        (1.0, 1.0),
        (1.0, 2.0),
    ]


def test_plan_tasks_indices() -> None:
    base = ModelPoint(family="boundary_xy")
    points = grid_points(base, {"h": (0.0, 1.0, 2)})
    tasks = plan_tasks(points, [4, 8])
    assert [t.index for t in tasks] == [0, 1, 2, 3]
    assert [(t.point.value("h"), t.n) for t in tasks] == [(0.0, 4), (0.0, 8), (1.0, 4), (1.0, 8)]


def row(index: int, n: int, **values: float) -> SweepRow:
    return SweepRow(index=index, params=("delta", "h"), mu_value=1.25, nu_value=0.3, n=n, **values)


def test_sorting_reducer_restores_task_order() -> None:
    merged = sorting_reducer([row(2, 8)], [row(0, 2), row(1, 4)])
    assert [r.index for r in merged] == [0, 1, 2]
    assert [r.index for r in sorting_reducer([], row(5, 2))] == [5]


def test_fits_from_rows() -> None:
    rows = [
        row(k, n, gap=n**-3.0, U_mn=-(n**2.0), detJ=n**4.0, normJinf=n**3.0)
        for k, n in enumerate(SIZES)
    ]
    fits = fits_from_rows(rows)
    assert fits["gap"].exponent == pytest.approx(-3.0)
    assert fits["U"].exponent == pytest.approx(2.0)
    assert fits["detJ"].exponent == pytest.approx(4.0)
    assert fits["normJinf"].exponent == pytest.approx(3.0)


def test_failed_rows_are_left_out_of_fits() -> None:
    rows = [
        row(k, n, gap=n**-3.0, U_mn=float(n), detJ=float(n), normJinf=float(n))
        for k, n in enumerate(SIZES)
    ]
    rows.append(row(9, 320, flag="gapless_drift"))
    assert fits_from_rows(rows)["gap"].n_range == (10, 160)


def test_table_regimes() -> None:
    regimes = {r.name: r for r in table_regimes()}
    assert set(regimes) == {"long_range", "short_range", "zero_field", "isotropic", "near_critical"}
    assert regimes["near_critical"].point.value("h") == pytest.approx(critical_field(1.25))
    assert regimes["isotropic"].point.value("delta") == 0.0
    assert np.isclose(regimes["long_range"].exponents["detJ"], 4)
