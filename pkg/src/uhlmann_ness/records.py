"""Sweep tasks and the output records they produce.

A task names one model point, one size (``None`` for the thermodynamic
limit) and the parameter pair whose geometry is reported. Evaluating a task
never raises for numerical trouble: the error tag lands in ``flag`` and the
affected values stay empty.
"""

from __future__ import annotations

import logging
import math
from typing import Any, ClassVar, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from uhlmann_ness.configuration import Configuration, resolve
from uhlmann_ness.errors import ComputeError, ConfigError
from uhlmann_ness.geometry import evaluate_point, incompatibility_report
from uhlmann_ness.models import ModelPoint
from uhlmann_ness.translational import (
    WeakCouplingSymbol,
    as_symbol_source,
    correlation_length,
    muc_per_site_quadrature,
    muc_per_site_residues,
    translational_gap,
)

logger = logging.getLogger(__name__)

# column-name shorthands for parameters
ABBREVIATIONS = {
    "delta": "d",
    "h": "h",
    "theta": "t",
    "lambda": "l",
    "mu": "m",
    "nu": "n",
    "epsilon": "e",
}


def abbreviate(name: str) -> str:
    return ABBREVIATIONS.get(name, name)


class SweepTask(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    index: int
    kind: Literal["chain", "translational"] = "chain"
    point: ModelPoint
    n: Optional[int] = None
    params: tuple[str, str] = ("delta", "h")
    symbol: Literal["stencil", "closed_form"] = "stencil"


class _Row(BaseModel):
    model_config = ConfigDict(extra="forbid", ser_json_inf_nan="constants")

    index: int = Field(exclude=True)
    params: tuple[str, str] = Field(exclude=True)
    mu_value: float
    nu_value: float

    renamed: ClassVar[dict[str, str]] = {}

    def _column_names(self) -> dict[str, str]:
        mu, nu = self.params
        names = {"mu_value": mu, "nu_value": nu}
        for field_name, template in self.renamed.items():
            names[field_name] = template.format(mu=abbreviate(mu), nu=abbreviate(nu))
        return names

    def record(self) -> dict[str, Any]:
        """The row keyed by its published column names."""
        names = self._column_names()
        return {names.get(k, k): v for k, v in self.model_dump().items()}

    def columns(self) -> list[str]:
        names = self._column_names()
        return [names.get(k, k) for k in self.model_dump()]

    @classmethod
    def from_record(cls, params: tuple[str, str], record: dict[str, Any], index: int = 0) -> Any:
        """Inverse of `record` for rows of the parameter pair ``params``."""
        blank = cls.model_construct(params=params)
        names = {v: k for k, v in blank._column_names().items()}
        values = {names.get(k, k): v for k, v in record.items()}
        return cls.model_validate({**values, "index": index, "params": params})


class SweepRow(_Row):
    """One ``(point, n)`` of a finite-chain sweep."""

    n: int
    gap: Optional[float] = None
    U_mn: Optional[float] = None
    J_mm: Optional[float] = None
    J_mn: Optional[float] = None
    J_nn: Optional[float] = None
    detJ: Optional[float] = None
    normJinf: Optional[float] = None
    flag: str = ""

    renamed: ClassVar[dict[str, str]] = {
        "U_mn": "U_{mu}{nu}",
        "J_mm": "J_{mu}{mu}",
        "J_mn": "J_{mu}{nu}",
        "J_nn": "J_{nu}{nu}",
    }


class TranslationalRow(_Row):
    """One point of a thermodynamic-limit scan."""

    U_bar_quad: Optional[float] = None
    U_bar_res: Optional[float] = None
    xi_inv: Optional[float] = None
    gap: Optional[float] = None
    flag: str = ""


Row = Union[SweepRow, TranslationalRow]


def _flags(*tags: str) -> str:
    return ";".join(dict.fromkeys(t for t in tags if t))


def _chain_row(task: SweepTask, cfg: Configuration) -> SweepRow:
    mu, nu = task.params
    base = dict(
        index=task.index,
        params=task.params,
        mu_value=task.point.value(mu),
        nu_value=task.point.value(nu),
        n=task.n,
    )
    try:
        geometry = evaluate_point(task.point, task.params, task.n, config=cfg)
        report = geometry.report
    except ComputeError as exc:
        logger.warning(
            "row %d (%s, n=%s) flagged %s: %s", task.index, task.point.params, task.n, exc.tag, exc
        )
        return SweepRow(**base, flag=exc.tag)
    try:
        bounds = incompatibility_report(report, config=cfg)
        violated = "" if bounds.det_inequality and bounds.norm_inequality else "bound_violation"
    except ComputeError as exc:
        violated = exc.tag
    if violated:
        logger.warning("row %d flagged %s", task.index, violated)
    return SweepRow(
        **base,
        gap=geometry.gap,
        U_mn=report.entry("U", mu, nu),
        J_mm=report.entry("J", mu, mu),
        J_mn=report.entry("J", mu, nu),
        J_nn=report.entry("J", nu, nu),
        detJ=report.det_J,
        normJinf=report.norm_inf_J,
        flag=_flags(*report.flags, violated),
    )


def _translational_row(task: SweepTask, cfg: Configuration) -> TranslationalRow:
    mu, nu = task.params
    row = TranslationalRow(
        index=task.index,
        params=task.params,
        mu_value=task.point.value(mu),
        nu_value=task.point.value(nu),
    )
    source = (
        WeakCouplingSymbol(task.point, cfg)
        if task.symbol == "closed_form"
        else as_symbol_source(task.point, cfg)
    )
    tags: list[str] = []
    values: dict[str, Optional[float]] = {}
    steps = (
        ("U_bar_quad", lambda: muc_per_site_quadrature(source, mu, nu, cfg)),
        ("U_bar_res", lambda: muc_per_site_residues(source, mu, nu, cfg)),
        ("xi_inv", lambda: correlation_length(source, cfg).xi_inv),
        ("gap", lambda: translational_gap(source, cfg)),
    )
    for name, compute in steps:
        if name == "gap" and task.symbol == "closed_form":
            continue
        try:
            values[name] = compute()
        except ComputeError as exc:
            logger.warning("row %d %s flagged %s: %s", task.index, name, exc.tag, exc)
            tags.append(exc.tag)
    quad, res = values.get("U_bar_quad"), values.get("U_bar_res")
    if quad is not None and res is not None and not math.isclose(quad, res, abs_tol=cfg.cross_tol):
        logger.warning("row %d: quadrature %.12g and residues %.12g disagree", task.index, quad, res)
        tags.append("cross_check")
    return row.model_copy(update={**values, "flag": _flags(*tags)})


def evaluate_task(task: SweepTask, config: Optional[Configuration] = None) -> Row:
    """Compute one row; numerical failures are flagged, input errors raise.

    Raises:
        ConfigError: the task names an unknown parameter or an invalid size.
    """
    cfg = resolve(config)
    if task.kind == "translational":
        return _translational_row(task, cfg)
    if task.n is None:
        raise ConfigError("chain tasks need a size")
    return _chain_row(task, cfg)
