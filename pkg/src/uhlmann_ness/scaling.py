"""Parameter sweeps and finite-size scaling fits."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Literal, Mapping, Optional, Sequence

import numpy as np
import scipy.stats
from pydantic import BaseModel, ConfigDict

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import InsufficientData, NonPositiveValues
from uhlmann_ness.graph import graph
from uhlmann_ness.models import ModelPoint, critical_field
from uhlmann_ness.records import Row, SweepRow, SweepTask

logger = logging.getLogger(__name__)

MIN_SIZES = 4
REFIT_R_SQUARED = 0.995
DEFAULT_SIZES = (20, 40, 80, 160, 320)


class ScalingFit(BaseModel):
    """``value ≈ prefactor · n^exponent`` fitted in log-log space."""

    model_config = ConfigDict(frozen=True)

    quantity: str
    exponent: float
    prefactor: float
    r_squared: float
    n_range: tuple[int, int]
    excluded: tuple[int, ...] = ()
    refit: Optional[ScalingFit] = None

    @property
    def best(self) -> ScalingFit:
        """The refit when one was made, otherwise this fit."""
        return self.refit if self.refit is not None else self


def geometric_sizes(start: int, count: int, ratio: int = 2) -> list[int]:
    return [start * ratio**k for k in range(count)]


def grid_points(
    base: ModelPoint, axes: Mapping[str, tuple[float, float, int]]
) -> list[ModelPoint]:
    """Cartesian product of ``linspace(min, max, count)`` per parameter, first axis slowest."""
    names = list(axes)
    values = [np.linspace(lo, hi, int(count)) for lo, hi, count in axes.values()]
    return [
        base.with_params(**{name: float(v) for name, v in zip(names, combo)})
        for combo in itertools.product(*values)
    ]


def plan_tasks(
    points: Sequence[ModelPoint],
    sizes: Sequence[Optional[int]],
    params: tuple[str, str] = ("delta", "h"),
    kind: Literal["chain", "translational"] = "chain",
    symbol: Literal["stencil", "closed_form"] = "stencil",
) -> list[SweepTask]:
    """One task per ``(point, size)``, points outermost."""
    return [
        SweepTask(index=index, kind=kind, point=point, n=n, params=params, symbol=symbol)
        for index, (point, n) in enumerate(itertools.product(points, sizes))
    ]


def sweep(
    tasks: Sequence[SweepTask],
    config: Optional[Configuration] = None,
    threads: int = 1,
) -> list[Row]:
    """Evaluate every task on the sweep graph; rows come back in task order.

    Numerical failures are flagged in the rows and never abort the sweep.
    """
    cfg = resolve(config)
    logger.info("sweeping %d tasks on %d worker(s)", len(tasks), threads)
    result = graph.invoke(
        {"tasks": list(tasks)},
        {"max_concurrency": threads, "configurable": cfg.as_configurable()},
    )
    rows: list[Row] = result.get("rows", [])
    flagged = sum(1 for row in rows if row.flag)
    if flagged:
        logger.warning("%d of %d rows flagged", flagged, len(rows))
    return rows


def _fit(quantity: str, sizes: np.ndarray, values: np.ndarray, excluded: tuple[int, ...]) -> ScalingFit:
    result = scipy.stats.linregress(np.log(sizes), np.log(values))
    return ScalingFit(
        quantity=quantity,
        exponent=float(result.slope),
        prefactor=float(math.exp(result.intercept)),
        r_squared=float(result.rvalue**2),
        n_range=(int(sizes.min()), int(sizes.max())),
        excluded=excluded,
    )


def fit_power_law(
    sizes: Sequence[int], values: Sequence[float], quantity: str = "value"
) -> ScalingFit:
    """Least-squares fit of ``ln v = α ln n + c``.

    Non-positive values are dropped with a warning. When the fit has
    ``R² < 0.995`` and a size can be spared, the smallest size is dropped and
    the refit is attached.

    Raises:
        NonPositiveValues: no positive value is left.
        InsufficientData: fewer than four usable sizes.
    """
    n = np.asarray(sizes, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v) & (v > 0)
    if not np.any(keep):
        raise NonPositiveValues(f"{quantity}: no positive values to fit")
    excluded = tuple(int(s) for s in n[~keep])
    if excluded:
        logger.warning("%s: dropping non-positive values at n = %s", quantity, excluded)
    n, v = n[keep], v[keep]
    if len(n) < MIN_SIZES:
        raise InsufficientData(f"{quantity}: need at least {MIN_SIZES} sizes, got {len(n)}")
    order = np.argsort(n)
    n, v = n[order], v[order]
    fit = _fit(quantity, n, v, excluded)
    if fit.r_squared < REFIT_R_SQUARED and len(n) > MIN_SIZES:
        refit = _fit(quantity, n[1:], v[1:], excluded + (int(n[0]),))
        logger.info(
            "%s: R² %.4f below %.3f, refit without n=%d gives α=%.3f",
            quantity,
            fit.r_squared,
            REFIT_R_SQUARED,
            int(n[0]),
            refit.exponent,
        )
        fit = fit.model_copy(update={"refit": refit})
    logger.info("%s ∝ n^%.3f (R² = %.5f)", quantity, fit.best.exponent, fit.best.r_squared)
    return fit


SCALED_QUANTITIES = ("gap", "normJinf", "detJ", "U")


def fits_from_rows(rows: Sequence[SweepRow]) -> dict[str, ScalingFit]:
    """Power-law fits of Δ, ‖J‖_∞, det J and ``|U_μν|`` over one point's rows."""
    usable = [row for row in rows if row.gap is not None]
    sizes = [row.n for row in usable]
    columns = {
        "gap": [row.gap for row in usable],
        "normJinf": [row.normJinf for row in usable],
        "detJ": [row.detJ for row in usable],
        "U": [abs(row.U_mn) if row.U_mn is not None else math.nan for row in usable],
    }
    return {
        name: fit_power_law(sizes, [math.nan if x is None else x for x in columns[name]], name)
        for name in SCALED_QUANTITIES
    }


def scaling_table(
    point: ModelPoint,
    sizes: Sequence[int] = DEFAULT_SIZES,
    params: tuple[str, str] = ("delta", "h"),
    config: Optional[Configuration] = None,
    threads: int = 1,
) -> tuple[list[SweepRow], dict[str, ScalingFit]]:
    """Sweep ``point`` over ``sizes`` and fit every scaled quantity."""
    tasks = plan_tasks([point], list(sizes), params)
    rows = [row for row in sweep(tasks, config, threads) if isinstance(row, SweepRow)]
    return rows, fits_from_rows(rows)


# scaling regimes of the boundary-driven chain at delta = 1.25

TABLE_DELTA = 1.25


class Regime(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    point: ModelPoint
    exponents: dict[str, float]
    tolerance: float = 0.3


def table_regimes(delta: float = TABLE_DELTA) -> list[Regime]:
    """Boundary XY points of the known scaling regimes with their integer exponents.

    The near-critical point sits exactly on ``h_c = |1 - δ²|``; the
    ``δ = 0`` row uses ``|h| < h_c = 1``.
    """
    base = ModelPoint(family="boundary_xy")
    h_c = critical_field(delta)
    return [
        Regime(
            name="long_range",
            point=base.with_params(delta=delta, h=0.3),
            exponents={"gap": -3, "U": 2, "normJinf": 3, "detJ": 4},
        ),
        Regime(
            name="short_range",
            point=base.with_params(delta=delta, h=1.0),
            exponents={"gap": -3, "U": 0, "normJinf": 1, "detJ": 2},
        ),
        Regime(
            name="zero_field",
            point=base.with_params(delta=delta, h=0.0),
            exponents={"gap": -3, "U": 3, "normJinf": 6, "detJ": 7},
        ),
        Regime(
            name="isotropic",
            point=base.with_params(delta=0.0, h=0.5),
            exponents={"gap": -3, "U": 3, "normJinf": 2, "detJ": 8},
        ),
        Regime(
            name="near_critical",
            point=base.with_params(delta=delta, h=h_c),
            exponents={"gap": -5, "U": 0, "normJinf": 6, "detJ": 7},
            tolerance=0.5,
        ),
    ]
